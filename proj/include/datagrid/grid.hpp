#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "datagrid/dataset.hpp"

namespace datagrid {

/// Ranks [lo_rank, hi_rank), 1-based. Never splits a tie-block.
struct Interval {
  std::int64_t lo_rank = 1;
  std::int64_t hi_rank = 2;
  bool operator==(const Interval&) const = default;
};

/// Sorted, non-empty set of categorical value ids.
struct ValueGroup {
  std::vector<std::int32_t> value_ids;
  bool operator==(const ValueGroup&) const = default;
};

using Part = std::variant<Interval, ValueGroup>;

struct VariablePartition {
  std::string variable;
  VariableKind kind = VariableKind::Categorical;
  std::vector<Part> parts;

  std::size_t size() const { return parts.size(); }
  const Interval& interval(std::size_t j) const { return std::get<Interval>(parts[j]); }
  const ValueGroup& group(std::size_t j) const { return std::get<ValueGroup>(parts[j]); }
  bool operator==(const VariablePartition&) const = default;
};

/// Merge parts a and b of a partition in place: the merged part takes index
/// min(a, b) and later parts shift down. Intervals must be adjacent.
void merge_partition_parts(VariablePartition& partition, std::size_t a, std::size_t b);

/// Sparse cell-count tensor: only non-empty cells, sorted lexicographically by
/// their part-index tuple.
class CellTable {
 public:
  CellTable() = default;
  explicit CellTable(std::size_t arity) : arity_(arity) {}

  std::size_t arity() const { return arity_; }
  std::size_t size() const { return counts_.size(); }
  std::span<const std::int32_t> coords(std::size_t cell) const {
    return std::span<const std::int32_t>(coords_).subspan(cell * arity_, arity_);
  }
  std::int64_t count(std::size_t cell) const { return counts_[cell]; }
  std::optional<std::size_t> find(std::span<const std::int32_t> key) const;
  /// Count of a cell, 0 when empty.
  std::int64_t at(std::span<const std::int32_t> key) const;
  std::int64_t total() const;

  /// Sorts, sums duplicate keys and drops non-positive totals.
  static CellTable from_entries(std::size_t arity, std::vector<std::int32_t> coords, std::vector<std::int64_t> counts);

  bool operator==(const CellTable&) const = default;

 private:
  std::size_t arity_ = 0;
  std::vector<std::int32_t> coords_;
  std::vector<std::int64_t> counts_;
};

/// A data grid model: one partition per variable plus the cell counts of the
/// induced grid. Immutable; edits return new models.
class GridModel {
 public:
  using DatasetPtr = std::shared_ptr<const Dataset>;

  /// One part per variable, a single cell holding all N records.
  static GridModel null_model(DatasetPtr dataset);
  /// Equal-frequency intervals and round-robin value groups, at most
  /// max_parts parts per variable (default ceil(sqrt(N))).
  static GridModel initial_model(DatasetPtr dataset, std::optional<std::int64_t> max_parts = std::nullopt);
  /// Validates the partitions against the dataset and counts the cells.
  static GridModel from_partitions(DatasetPtr dataset, std::vector<VariablePartition> partitions);
  /// Builds partitions from per-variable atom -> part labels. Labels are
  /// compacted in ascending order; numerical labels must be non-decreasing.
  static GridModel from_atom_labels(DatasetPtr dataset, const std::vector<std::vector<std::int32_t>>& atom_labels);

  const Dataset& dataset() const { return *dataset_; }
  const DatasetPtr& dataset_ptr() const { return dataset_; }
  std::size_t n_variables() const { return partitions_.size(); }
  std::size_t variable_index(std::string_view name) const { return dataset_->variable_index(name); }

  const std::vector<VariablePartition>& partitions() const { return partitions_; }
  const VariablePartition& partition(std::size_t k) const { return partitions_[k]; }
  std::size_t part_count(std::size_t k) const { return partitions_[k].size(); }
  std::vector<std::size_t> part_counts() const;
  std::size_t total_parts() const;
  /// G as a real (it may exceed 2^64).
  double grid_size() const;

  const CellTable& cells() const { return cells_; }
  std::int64_t part_total(std::size_t k, std::size_t j) const { return part_totals_[k][j]; }
  const std::vector<std::int64_t>& part_totals(std::size_t k) const { return part_totals_[k]; }
  /// Number of atoms (values or tie-blocks) in part j.
  std::int64_t part_atom_count(std::size_t k, std::size_t j) const;
  std::int32_t part_of_atom(std::size_t k, std::int32_t atom) const { return atom_part_[k][static_cast<std::size_t>(atom)]; }
  const std::vector<std::int32_t>& atom_parts(std::size_t k) const { return atom_part_[k]; }
  std::int32_t part_of_record(std::size_t k, std::size_t record) const {
    return atom_part_[k][static_cast<std::size_t>(dataset_->column(k).atom[record])];
  }
  /// First tie-block and one-past-last tie-block of an interval.
  std::pair<std::int32_t, std::int32_t> interval_blocks(std::size_t k, std::size_t j) const;

  /// Merge parts a and b of variable k; the merged part takes index min(a, b)
  /// and later parts shift down. Intervals must be adjacent.
  GridModel merge_parts(std::size_t k, std::size_t a, std::size_t b) const;
  /// Reassign a categorical value; an emptied source group is deleted.
  GridModel move_value(std::size_t k, std::int32_t value_id, std::size_t from, std::size_t to) const;
  /// Move the boundary between intervals `boundary` and `boundary + 1` so the
  /// right interval starts at new_rank (a tie-block edge).
  GridModel move_boundary(std::size_t k, std::size_t boundary, std::int64_t new_rank) const;

  /// Recount from the records and compare with the stored cells and totals.
  bool consistent_with_rebuild() const;

  /// Display label of a part: "[lo;hi)" raw bounds for intervals, "{a,b,...}" for groups.
  std::string part_label(std::size_t k, std::size_t j) const;
  /// Raw-value bounds of an interval (midpoints between adjacent tie-blocks;
  /// the extreme intervals use the min/max observed values).
  std::pair<double, double> interval_bounds(std::size_t k, std::size_t j) const;

 private:
  GridModel() = default;
  void index_partitions();
  void count_cells();

  DatasetPtr dataset_;
  std::vector<VariablePartition> partitions_;
  std::vector<std::vector<std::int32_t>> atom_part_;
  std::vector<std::vector<std::int64_t>> part_totals_;
  CellTable cells_;
};

}  // namespace datagrid
