#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "datagrid/cost.hpp"
#include "datagrid/dataset.hpp"
#include "datagrid/grid.hpp"
#include "datagrid/hierarchy.hpp"
#include "datagrid/insights.hpp"
#include "datagrid/optimizer.hpp"

namespace datagrid {

inline constexpr int kResultFormatVersion = 1;

struct DocumentVariable {
  std::string name;
  VariableKind kind = VariableKind::Categorical;
  std::int64_t n_distinct = 0;
  std::vector<std::string> values;  // categorical, in value-id order
  std::vector<std::int64_t> value_counts;
  double min = 0.0;  // numerical
  double max = 0.0;
};

/// Raw-value bounds of the optimum's intervals, keyed by rank range.
struct IntervalBound {
  std::int64_t lo_rank = 1;
  std::int64_t hi_rank = 2;
  double lower = 0.0;
  double upper = 0.0;
};

struct PartView {
  std::string label;
  std::int64_t count = 0;
  std::optional<IntervalBound> interval;
  std::vector<std::pair<std::string, std::int64_t>> values;  // by descending count, then text
};

struct OptimizerSummary {
  std::uint64_t seed = 0;
  int vns_rounds = 0;
  std::optional<std::int64_t> max_initial_parts;
  std::vector<std::string> freeze;
  std::optional<int> best_round;
  double best_cost = 0.0;
  double null_cost = 0.0;
  std::vector<RoundReport> rounds;  // wall time is not serialized

  static OptimizerSummary from_report(const OptimizationReport& report, const OptimizerConfig& config);
};

/// Self-contained coclustering result: dataset summary, optimum, cost,
/// merge hierarchy, optimizer report and optional precomputed insights.
struct ResultDocument {
  int format_version = kResultFormatVersion;
  std::int64_t n_records = 0;
  std::int64_t dropped_rows = 0;
  char delimiter = '\t';
  bool has_header = true;
  std::vector<DocumentVariable> variables;
  std::vector<VariablePartition> partitions;
  std::vector<std::vector<IntervalBound>> bounds;  // per variable, empty for categorical
  CostBreakdown cost;
  MergeHierarchy hierarchy;  // dataset pointer left null
  std::optional<OptimizerSummary> optimizer;
  std::vector<TypicalityRanking> typicality;
  std::vector<InsightMatrix> matrices;

  static ResultDocument build(const GridModel& optimum, const MergeHierarchy& hierarchy,
                              std::optional<OptimizerSummary> optimizer = std::nullopt);

  std::string to_json() const;
  static ResultDocument from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static ResultDocument load(const std::filesystem::path& path);

  Schema schema() const;
  std::size_t variable_index(std::string_view name) const;

  /// Describes the parts of a partition of variable k (the optimum's or a
  /// replayed one) from the document alone.
  std::vector<PartView> describe(std::size_t k, const VariablePartition& partition) const;

  /// The optimum on a reloaded table. Throws when the table does not match.
  GridModel bind(GridModel::DatasetPtr dataset) const;
  /// The hierarchy with its dataset attached, ready for model_at.
  MergeHierarchy bind_hierarchy(GridModel::DatasetPtr dataset) const;
};

}  // namespace datagrid
