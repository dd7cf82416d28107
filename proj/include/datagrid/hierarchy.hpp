#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "datagrid/grid.hpp"

namespace datagrid {

/// One agglomerative step. Part indices refer to the model right before the
/// step; the merged part takes index min(a, b).
struct MergeRecord {
  int step = 0;  // 1-based
  std::string variable;
  std::size_t variable_index = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t merged = 0;
  double delta = 0.0;
  double cost_after = 0.0;
  /// Running minimum of raw_info_ratio_after, so it never increases along
  /// the records. Used for display and for info-ratio targets.
  double info_ratio_after = 0.0;
  /// information_ratio(cost_after, ...) of this model alone. A merge with a
  /// negative delta can raise it above the previous step's value.
  double raw_info_ratio_after = 0.0;
};

struct MergeHierarchy {
  std::vector<VariablePartition> base;  // partitions of the optimum
  GridModel::DatasetPtr dataset;        // may be null for a hierarchy loaded without its table
  std::vector<MergeRecord> records;
  double cost_opt = 0.0;
  double cost_null = 0.0;
  std::vector<std::string> frozen;

  std::size_t base_total_parts() const;
};

/// Merge down from m_star, always taking the cheapest legal merge (even when
/// it increases the cost), until every non-frozen variable has one part.
MergeHierarchy build_hierarchy(const GridModel& m_star, const std::vector<std::string>& freeze = {});

/// (cost_m - cost_null) / (cost_opt - cost_null), clamped to [0, 1]; 1 when
/// the denominator vanishes.
double information_ratio(double cost_m, double cost_opt, double cost_null);

struct TotalParts {
  std::size_t n = 0;
};
struct PartsPerVariable {
  std::map<std::string, std::size_t> parts;
};
struct InfoRatio {
  double r = 1.0;
};
using GranularityTarget = std::variant<TotalParts, PartsPerVariable, InfoRatio>;

/// Number of records to replay to reach the target. Throws
/// std::invalid_argument when the target cannot be reached.
std::size_t steps_for(const MergeHierarchy& h, const GranularityTarget& target);

/// Partitions after replaying the first `steps` records (no dataset needed).
std::vector<VariablePartition> partitions_after(const MergeHierarchy& h, std::size_t steps);

/// Information ratio after `steps` records (1 for zero steps).
double info_ratio_after(const MergeHierarchy& h, std::size_t steps);

GridModel model_at(const MergeHierarchy& h, const GranularityTarget& target);
GridModel model_after(const MergeHierarchy& h, std::size_t steps);

/// (total parts, IR) for the optimum and after every step.
std::vector<std::pair<std::size_t, double>> pareto_curve(const MergeHierarchy& h);

}  // namespace datagrid
