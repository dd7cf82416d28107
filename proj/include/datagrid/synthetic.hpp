#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "datagrid/dataset.hpp"
#include "datagrid/grid.hpp"

namespace datagrid {

struct PlantedVariable {
  std::string name;
  VariableKind kind = VariableKind::Categorical;
  std::size_t parts = 2;
  /// Categorical: values per part. Numerical: distinct raw values per
  /// interval, 0 for continuous values. Interval p spans raw values [p, p+1).
  std::size_t values_per_part = 4;
};

struct PlantSpec {
  std::vector<PlantedVariable> variables;
  /// Diagonal-dominant cells: (1 - noise)/D on the D diagonal cells plus
  /// noise spread uniformly over every cell. Ignored when cell_probabilities is set.
  double noise = 0.05;
  /// Explicit row-major tensor (last variable fastest), summing to 1.
  std::optional<std::vector<double>> cell_probabilities;
  std::int64_t n_records = 1000;
  std::uint64_t seed = 0;

  std::size_t grid_size() const;
  /// Throws std::invalid_argument on an impossible spec.
  void validate() const;
  std::vector<double> cell_distribution() const;
};

struct TruthVariable {
  std::string name;
  VariableKind kind = VariableKind::Categorical;
  std::map<std::string, std::size_t> value_part;          // categorical
  std::vector<std::pair<double, double>> interval_bounds;  // numerical, [lo, hi)
};

struct GroundTruth {
  std::vector<TruthVariable> variables;

  /// Planted part of every atom of variable k of a dataset generated from this truth.
  std::vector<std::int32_t> atom_labels(const Dataset& dataset, std::size_t k) const;
  std::string to_json() const;
  static GroundTruth from_json(const std::string& text);
};

struct Planted {
  Dataset dataset;
  GroundTruth truth;
  /// Planted cell index (row-major) of every record.
  std::vector<std::size_t> record_cells;
};

Planted generate(const PlantSpec& spec);

/// Adjusted Rand index of two labelings of the same elements. Returns 1 when
/// both labelings are the same trivial partition.
double adjusted_rand_index(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b);

/// ARI between a model's partition of variable k and the planted one, over atoms.
double recovery_ari(const GridModel& model, const GroundTruth& truth, std::size_t k);

}  // namespace datagrid
