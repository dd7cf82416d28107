#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "datagrid/grid.hpp"

namespace datagrid {

struct TypicalityEntry {
  std::int32_t value_id = 0;
  std::string value;
  std::int64_t frequency = 0;
  double tau = 0.0;
};

/// Values of one cluster, by descending typicality (ties by value text).
struct TypicalityRanking {
  std::string variable;
  std::size_t cluster = 0;
  std::vector<TypicalityEntry> entries;
};

/// Average cost increase of moving each value of `cluster` to the other
/// clusters, weighted by the clusters' record shares.
TypicalityRanking typicality(const GridModel& model, std::string_view variable, std::size_t cluster);

enum class MatrixKind { Frequency, Cmi, Contrast };
std::string to_string(MatrixKind kind);
MatrixKind parse_matrix_kind(std::string_view text);

/// Part id fixed on each variable outside the displayed pair.
using Selection = std::map<std::string, std::size_t>;

struct InsightMatrix {
  MatrixKind kind = MatrixKind::Frequency;
  std::string row_variable;
  std::string col_variable;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Selection selection;                  // frequency / cmi
  std::string target_variable;          // contrast
  std::size_t target_part = 0;          // contrast
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;           // row-major
  double slice_total = 0.0;             // records in the slice (all records for contrast)
  double total_mi = 0.0;                // sum of entries; 0 for frequency

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

InsightMatrix frequency_matrix(const GridModel& model, std::string_view row_var, std::string_view col_var,
                               const Selection& selection = {});

/// Per-cell contributions to the mutual information of the selected slice,
/// with probabilities conditional on the slice.
InsightMatrix cmi_matrix(const GridModel& model, std::string_view row_var, std::string_view col_var,
                         const Selection& selection = {});

/// Per-cell contrast of one target part against the global (row, col)
/// distribution; probabilities over the whole dataset, other variables
/// summed out.
InsightMatrix contrast_matrix(const GridModel& model, std::string_view target_var, std::size_t target_part,
                              std::string_view row_var, std::string_view col_var);

/// p log(p / q), with 0 log 0 = 0.
double mi_term(double p, double q);

std::string to_csv(const InsightMatrix& m);
std::string to_csv(const TypicalityRanking& r, std::optional<std::size_t> top = std::nullopt);

}  // namespace datagrid
