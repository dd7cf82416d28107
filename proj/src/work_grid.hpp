#pragma once

// Mutable working representation used by the optimizer and the hierarchy
// builder. Parts are addressed by stable "slots" (the part indices of the
// model the engine was built from); merges retire the higher slot, so the
// relative order of live slots always matches the compact part order of the
// exported model.

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/container/flat_hash_set.h"
#include "datagrid/grid.hpp"

namespace datagrid::detail {

struct MergeCandidate {
  std::size_t variable = 0;
  std::int32_t a = 0;  // lower slot, survives
  std::int32_t b = 0;
  double delta = 0.0;
};

class WorkGrid {
 public:
  WorkGrid(const GridModel& model, std::vector<bool> frozen);

  double cost() const { return cost_; }
  std::size_t n_variables() const { return K_; }
  std::size_t live_parts(std::size_t k) const { return live_[k].size(); }
  /// Compact part index of a live slot.
  std::size_t part_index(std::size_t k, std::int32_t slot) const;
  bool frozen(std::size_t k) const { return frozen_[k]; }
  std::int64_t merges_applied() const { return merges_; }

  GridModel to_model() const;

  /// Cheapest legal merge over the non-frozen variables (ties: lowest
  /// variable, then lowest slots). Empty when every such variable has one part.
  std::optional<MergeCandidate> best_merge();
  void apply_merge(const MergeCandidate& m);
  /// Incremental merge delta from the pair caches.
  double merge_delta(std::size_t k, std::int32_t a, std::int32_t b);

  /// Greedy value moves on a categorical variable until a full pass over the
  /// values finds no strictly improving move. Returns true if anything moved.
  bool improve_values(std::size_t k, int max_passes = 100);
  /// Same for the interval boundaries of a numerical variable.
  bool improve_boundaries(std::size_t k, int max_passes = 100);

 private:
  using Key = std::uint64_t;
  struct Entry {
    Key rest;
    std::int64_t count;
  };

  std::int32_t coord(Key key, std::size_t k) const {
    return static_cast<std::int32_t>((key / stride_[k]) % radix_[k]);
  }
  Key with_coord(Key key, std::size_t k, std::int32_t from, std::int32_t to) const {
    return key - static_cast<Key>(from) * stride_[k] + static_cast<Key>(to) * stride_[k];
  }
  double lf(std::int64_t n) const { return lf_[static_cast<std::size_t>(n)]; }
  double pair_gain(std::int64_t x, std::int64_t y) const {
    return (x == 0 || y == 0) ? 0.0 : lf(x + y) - lf(x) - lf(y);
  }
  double group_term(std::int64_t total, std::int64_t values) const {
    return values <= 0 ? 0.0 : lf(total + values - 1) - lf(values - 1) - lf(total);
  }
  double cell_prior(double grid) const;
  /// Change of the J-dependent prior terms when J_k drops by one.
  double part_drop_prior(std::size_t k) const;
  std::int64_t cell(Key key) const {
    const auto it = cells_.find(key);
    return it == cells_.end() ? 0 : it->second;
  }

  void add_to_cell(Key key, std::int64_t amount);
  void retire_slot(std::size_t k, std::int32_t slot);
  double pair_cell_term(std::size_t k, std::int32_t a, std::int32_t b) const;
  void build_pair_cache(std::size_t k);
  void update_caches_for_merge(std::size_t k, std::int32_t a, std::int32_t b);
  double& pair_slot(std::size_t k, std::int32_t a, std::int32_t b);
  std::int32_t next_live(std::size_t k, std::int32_t slot) const;
  std::vector<std::vector<Entry>> atom_profiles(std::size_t k) const;
  void invalidate_caches();

  GridModel::DatasetPtr dataset_;
  std::size_t K_ = 0;
  std::int64_t N_ = 0;
  std::vector<VariableKind> kind_;
  std::vector<bool> frozen_;
  std::vector<std::uint64_t> radix_;
  std::vector<std::uint64_t> stride_;
  std::vector<double> lf_;
  std::vector<std::vector<double>> log_b_;  // categorical: log B(V, J) at J-1

  std::vector<std::vector<std::int32_t>> slot_of_atom_;
  std::vector<std::vector<std::int64_t>> slot_total_;
  std::vector<std::vector<std::int64_t>> slot_atoms_;
  std::vector<std::vector<std::int32_t>> live_;  // ascending
  std::vector<std::vector<std::vector<std::int32_t>>> slot_values_;  // categorical
  std::vector<std::vector<std::int32_t>> block_begin_;               // numerical
  std::vector<std::vector<std::int32_t>> block_end_;

  absl::flat_hash_map<Key, std::int64_t> cells_;
  std::vector<std::vector<absl::flat_hash_set<Key>>> slot_cells_;

  // Cached -sum f(n_a, n_b) over shared other-keys. Categorical: full
  // radix x radix matrix (upper triangle used). Numerical: by left slot.
  std::vector<std::vector<double>> pair_cache_;
  std::vector<bool> cache_valid_;

  double cost_ = 0.0;
  std::int64_t merges_ = 0;
};

}  // namespace datagrid::detail
