#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "datagrid/grid.hpp"

namespace datagrid {

struct OptimizerConfig {
  int vns_rounds = 10;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> max_initial_parts;  // default ceil(sqrt(N))
  int post_opt_sweeps = 2;
  std::vector<std::string> freeze;
  int threads = 1;
  /// Recompute the full cost after every accepted step and throw if it
  /// disagrees with the tracked value or increased. Test-only; slow.
  bool check_steps = false;
};

struct RoundReport {
  int round = 0;
  std::uint64_t seed = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::int64_t merges = 0;
  double wall_seconds = 0.0;
};

struct OptimizationReport {
  GridModel best_model;
  double best_cost = 0.0;
  /// Round that produced best_model; nullopt when no round beat the null model.
  std::optional<int> best_round;
  double null_cost = 0.0;
  std::vector<RoundReport> rounds;
};

/// Per-round seed derived from the master seed (splitmix64 stream).
std::uint64_t round_seed(std::uint64_t master, int round);

/// Randomized starting grid: shuffled round-robin value groups and jittered
/// equal-frequency intervals, at most max_parts parts per variable.
GridModel randomized_initial_model(GridModel::DatasetPtr dataset, std::int64_t max_parts, std::uint64_t seed);

/// Greedy bottom-up merging: apply the best strictly improving merge until
/// none is left.
GridModel greedy_merge_optimize(const GridModel& model, const std::vector<std::string>& freeze = {});

/// Alternating per-variable local search (value moves, boundary moves).
GridModel post_optimize(const GridModel& model, int sweeps, const std::vector<std::string>& freeze = {});

/// Multi-start: randomized initial grid, pre-optimization, then greedy merging
/// alternated with post-optimization; the best round wins.
OptimizationReport vns_optimize(GridModel::DatasetPtr dataset, const OptimizerConfig& config);

/// Freeze list as a per-variable mask; throws on unknown names.
std::vector<bool> freeze_mask(const Dataset& dataset, const std::vector<std::string>& freeze);

}  // namespace datagrid
