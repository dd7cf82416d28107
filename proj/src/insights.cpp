#include "datagrid/insights.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "datagrid/cost.hpp"

namespace datagrid {
namespace {

std::string fmt(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

InsightMatrix skeleton(const GridModel& model, MatrixKind kind, std::size_t r, std::size_t c) {
  InsightMatrix m;
  m.kind = kind;
  m.row_variable = model.partition(r).variable;
  m.col_variable = model.partition(c).variable;
  m.rows = model.part_count(r);
  m.cols = model.part_count(c);
  for (std::size_t j = 0; j < m.rows; ++j) m.row_labels.push_back(model.part_label(r, j));
  for (std::size_t j = 0; j < m.cols; ++j) m.col_labels.push_back(model.part_label(c, j));
  m.values.assign(m.rows * m.cols, 0.0);
  return m;
}

// Counts of the (row, col) slice selected by fixing parts on every other variable.
InsightMatrix slice_counts(const GridModel& model, MatrixKind kind, std::string_view row_var, std::string_view col_var,
                           const Selection& selection) {
  const std::size_t r = model.variable_index(row_var);
  const std::size_t c = model.variable_index(col_var);
  if (r == c) throw std::invalid_argument("row and column variables must differ");
  const std::size_t K = model.n_variables();
  std::vector<std::int64_t> fixed(K, -1);
  for (const auto& [name, part] : selection) {
    const std::size_t k = model.variable_index(name);
    if (k == r || k == c) throw std::invalid_argument("selection names a displayed variable: " + name);
    if (part >= model.part_count(k)) {
      throw std::invalid_argument("selected part " + std::to_string(part) + " out of range for " + name);
    }
    fixed[k] = static_cast<std::int64_t>(part);
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (k != r && k != c && fixed[k] < 0) {
      throw std::invalid_argument("selection must fix a part of variable " + model.partition(k).variable);
    }
  }
  InsightMatrix m = skeleton(model, kind, r, c);
  m.selection = selection;
  const auto& cells = model.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = cells.coords(i);
    bool in = true;
    for (std::size_t k = 0; k < K && in; ++k) in = fixed[k] < 0 || key[k] == fixed[k];
    if (!in) continue;
    const auto n = static_cast<double>(cells.count(i));
    m.values[static_cast<std::size_t>(key[r]) * m.cols + static_cast<std::size_t>(key[c])] += n;
    m.slice_total += n;
  }
  return m;
}

}  // namespace

double mi_term(double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; }

std::string to_string(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::Frequency: return "frequency";
    case MatrixKind::Cmi: return "cmi";
    case MatrixKind::Contrast: return "contrast";
  }
  return "frequency";
}

MatrixKind parse_matrix_kind(std::string_view text) {
  if (text == "frequency" || text == "freq") return MatrixKind::Frequency;
  if (text == "cmi") return MatrixKind::Cmi;
  if (text == "contrast") return MatrixKind::Contrast;
  throw std::invalid_argument("unknown matrix kind: " + std::string(text));
}

TypicalityRanking typicality(const GridModel& model, std::string_view variable, std::size_t cluster) {
  const std::size_t k = model.variable_index(variable);
  if (model.partition(k).kind != VariableKind::Categorical) {
    throw std::invalid_argument("typicality needs a categorical variable: " + std::string(variable));
  }
  const std::size_t J = model.part_count(k);
  if (J < 2) throw std::invalid_argument("typicality needs at least two clusters on " + std::string(variable));
  if (cluster >= J) throw std::invalid_argument("cluster index out of range");

  const auto N = static_cast<double>(model.dataset().n_records());
  const double p_c = static_cast<double>(model.part_total(k, cluster)) / N;
  const auto& col = model.dataset().column(k);
  TypicalityRanking out{model.partition(k).variable, cluster, {}};
  for (const auto v : model.partition(k).group(cluster).value_ids) {
    double sum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      if (j == cluster) continue;
      const double p_j = static_cast<double>(model.part_total(k, j)) / N;
      sum += p_j * delta_move(model, k, v, cluster, j);
    }
    out.entries.push_back({v, col.dictionary[static_cast<std::size_t>(v)], col.atom_frequency(v), sum / (1.0 - p_c)});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const auto& a, const auto& b) {
    if (a.tau != b.tau) return a.tau > b.tau;
    return a.value < b.value;
  });
  return out;
}

InsightMatrix frequency_matrix(const GridModel& model, std::string_view row_var, std::string_view col_var,
                               const Selection& selection) {
  return slice_counts(model, MatrixKind::Frequency, row_var, col_var, selection);
}

InsightMatrix cmi_matrix(const GridModel& model, std::string_view row_var, std::string_view col_var,
                         const Selection& selection) {
  InsightMatrix m = slice_counts(model, MatrixKind::Cmi, row_var, col_var, selection);
  if (m.slice_total <= 0.0) throw std::invalid_argument("selected slice is empty");
  std::vector<double> row_sum(m.rows, 0.0);
  std::vector<double> col_sum(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      row_sum[i] += m.at(i, j);
      col_sum[j] += m.at(i, j);
    }
  }
  const double t = m.slice_total;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      double& v = m.values[i * m.cols + j];
      v = mi_term(v / t, (row_sum[i] / t) * (col_sum[j] / t));
      m.total_mi += v;
    }
  }
  return m;
}

InsightMatrix contrast_matrix(const GridModel& model, std::string_view target_var, std::size_t target_part,
                              std::string_view row_var, std::string_view col_var) {
  const std::size_t s = model.variable_index(target_var);
  const std::size_t r = model.variable_index(row_var);
  const std::size_t c = model.variable_index(col_var);
  if (s == r || s == c || r == c) throw std::invalid_argument("contrast needs three distinct variables");
  if (target_part >= model.part_count(s)) throw std::invalid_argument("target part out of range");

  InsightMatrix m = skeleton(model, MatrixKind::Contrast, r, c);
  m.target_variable = model.partition(s).variable;
  m.target_part = target_part;
  std::vector<double> joint(m.rows * m.cols, 0.0);  // (row, col) over all target parts
  std::vector<double> sliced(m.rows * m.cols, 0.0);
  double target_total = 0.0;
  double total = 0.0;
  const auto& cells = model.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = cells.coords(i);
    const auto n = static_cast<double>(cells.count(i));
    const std::size_t at = static_cast<std::size_t>(key[r]) * m.cols + static_cast<std::size_t>(key[c]);
    joint[at] += n;
    total += n;
    if (static_cast<std::size_t>(key[s]) == target_part) {
      sliced[at] += n;
      target_total += n;
    }
  }
  m.slice_total = total;
  const double p_s = target_total / total;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    m.values[i] = mi_term(sliced[i] / total, (joint[i] / total) * p_s);
    m.total_mi += m.values[i];
  }
  return m;
}

std::string to_csv(const InsightMatrix& m) {
  std::string out = csv_field(m.row_variable + "\\" + m.col_variable);
  for (const auto& l : m.col_labels) out += "," + csv_field(l);
  out += "\n";
  for (std::size_t i = 0; i < m.rows; ++i) {
    out += csv_field(m.row_labels[i]);
    for (std::size_t j = 0; j < m.cols; ++j) out += "," + fmt(m.at(i, j));
    out += "\n";
  }
  return out;
}

std::string to_csv(const TypicalityRanking& r, std::optional<std::size_t> top) {
  std::string out = "rank,value,frequency,typicality\n";
  const std::size_t n = std::min(r.entries.size(), top.value_or(r.entries.size()));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = r.entries[i];
    out += std::to_string(i + 1) + "," + csv_field(e.value) + "," + std::to_string(e.frequency) + "," + fmt(e.tau) + "\n";
  }
  return out;
}

}  // namespace datagrid
