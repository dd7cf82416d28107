#include "datagrid/result_document.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace datagrid {
namespace {

using Json = nlohmann::ordered_json;

std::string number_text(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

Json cost_json(const CostBreakdown& c) {
  return Json{{"prior_numerical_part_counts", c.prior_numerical_part_counts},
              {"prior_categorical_group_counts", c.prior_categorical_group_counts},
              {"prior_partition_choice", c.prior_partition_choice},
              {"prior_cell_distribution", c.prior_cell_distribution},
              {"prior_group_value_distribution", c.prior_group_value_distribution},
              {"likelihood_cells", c.likelihood_cells},
              {"likelihood_within_parts", c.likelihood_within_parts},
              {"total", c.total}};
}

CostBreakdown cost_from(const Json& j) {
  CostBreakdown c;
  c.prior_numerical_part_counts = j.at("prior_numerical_part_counts").get<double>();
  c.prior_categorical_group_counts = j.at("prior_categorical_group_counts").get<double>();
  c.prior_partition_choice = j.at("prior_partition_choice").get<double>();
  c.prior_cell_distribution = j.at("prior_cell_distribution").get<double>();
  c.prior_group_value_distribution = j.at("prior_group_value_distribution").get<double>();
  c.likelihood_cells = j.at("likelihood_cells").get<double>();
  c.likelihood_within_parts = j.at("likelihood_within_parts").get<double>();
  c.total = j.at("total").get<double>();
  return c;
}

Json matrix_json(const InsightMatrix& m) {
  Json j{{"kind", to_string(m.kind)}, {"row_variable", m.row_variable}, {"col_variable", m.col_variable}};
  if (m.kind == MatrixKind::Contrast) {
    j["target_variable"] = m.target_variable;
    j["target_part"] = m.target_part;
  } else {
    j["selection"] = Json::object();
    for (const auto& [name, part] : m.selection) j["selection"][name] = part;
  }
  j["row_labels"] = m.row_labels;
  j["col_labels"] = m.col_labels;
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m.at(i, c));
    rows.push_back(std::move(row));
  }
  j["values"] = std::move(rows);
  j["slice_total"] = m.slice_total;
  j["total_mi"] = m.total_mi;
  return j;
}

InsightMatrix matrix_from(const Json& j) {
  InsightMatrix m;
  m.kind = parse_matrix_kind(j.at("kind").get<std::string>());
  m.row_variable = j.at("row_variable").get<std::string>();
  m.col_variable = j.at("col_variable").get<std::string>();
  if (m.kind == MatrixKind::Contrast) {
    m.target_variable = j.at("target_variable").get<std::string>();
    m.target_part = j.at("target_part").get<std::size_t>();
  } else if (j.contains("selection")) {
    for (const auto& [name, part] : j.at("selection").items()) m.selection[name] = part.get<std::size_t>();
  }
  m.row_labels = j.at("row_labels").get<std::vector<std::string>>();
  m.col_labels = j.at("col_labels").get<std::vector<std::string>>();
  m.rows = m.row_labels.size();
  m.cols = m.col_labels.size();
  const auto& rows = j.at("values");
  if (rows.size() != m.rows) throw std::runtime_error("result document: matrix row count mismatch");
  for (const auto& row : rows) {
    if (row.size() != m.cols) throw std::runtime_error("result document: matrix column count mismatch");
    for (const auto& v : row) m.values.push_back(v.get<double>());
  }
  m.slice_total = j.at("slice_total").get<double>();
  m.total_mi = j.at("total_mi").get<double>();
  return m;
}

}  // namespace

OptimizerSummary OptimizerSummary::from_report(const OptimizationReport& report, const OptimizerConfig& config) {
  OptimizerSummary s;
  s.seed = config.seed;
  s.vns_rounds = config.vns_rounds;
  s.max_initial_parts = config.max_initial_parts;
  s.freeze = config.freeze;
  s.best_round = report.best_round;
  s.best_cost = report.best_cost;
  s.null_cost = report.null_cost;
  s.rounds = report.rounds;
  return s;
}

ResultDocument ResultDocument::build(const GridModel& optimum, const MergeHierarchy& hierarchy,
                                     std::optional<OptimizerSummary> optimizer) {
  const Dataset& ds = optimum.dataset();
  ResultDocument doc;
  doc.n_records = ds.n_records();
  doc.dropped_rows = ds.dropped_rows();
  doc.delimiter = ds.schema().delimiter;
  doc.has_header = ds.schema().has_header;
  for (std::size_t k = 0; k < ds.n_variables(); ++k) {
    const Column& col = ds.column(k);
    DocumentVariable v{ds.variable(k).name, col.kind, static_cast<std::int64_t>(col.atom_count()), {}, {}, 0.0, 0.0};
    std::vector<IntervalBound> b;
    if (col.kind == VariableKind::Categorical) {
      v.values = col.dictionary;
      v.value_counts = col.value_counts;
    } else {
      v.min = col.blocks.front().value;
      v.max = col.blocks.back().value;
      for (std::size_t j = 0; j < optimum.part_count(k); ++j) {
        const auto& iv = optimum.partition(k).interval(j);
        const auto [lo, hi] = optimum.interval_bounds(k, j);
        b.push_back({iv.lo_rank, iv.hi_rank, lo, hi});
      }
    }
    doc.variables.push_back(std::move(v));
    doc.bounds.push_back(std::move(b));
  }
  doc.partitions = optimum.partitions();
  doc.cost = datagrid::cost(optimum);
  doc.hierarchy = hierarchy;
  doc.hierarchy.dataset.reset();
  doc.optimizer = std::move(optimizer);
  return doc;
}

std::size_t ResultDocument::variable_index(std::string_view name) const {
  for (std::size_t k = 0; k < variables.size(); ++k) {
    if (variables[k].name == name) return k;
  }
  throw std::invalid_argument("unknown variable: " + std::string(name));
}

Schema ResultDocument::schema() const {
  Schema s;
  for (const auto& v : variables) s.variables.push_back({v.name, v.kind});
  s.delimiter = delimiter;
  s.has_header = has_header;
  return s;
}

std::vector<PartView> ResultDocument::describe(std::size_t k, const VariablePartition& partition) const {
  const auto& var = variables.at(k);
  std::vector<PartView> out;
  if (var.kind == VariableKind::Numerical) {
    std::map<std::int64_t, double> lower;
    std::map<std::int64_t, double> upper;
    for (const auto& b : bounds.at(k)) {
      lower[b.lo_rank] = b.lower;
      upper[b.hi_rank] = b.upper;
    }
    for (std::size_t j = 0; j < partition.size(); ++j) {
      const auto& iv = partition.interval(j);
      const auto lo = lower.find(iv.lo_rank);
      const auto hi = upper.find(iv.hi_rank);
      if (lo == lower.end() || hi == upper.end()) throw std::invalid_argument("interval is not a union of optimum intervals");
      const bool last = j + 1 == partition.size();
      PartView p;
      p.interval = IntervalBound{iv.lo_rank, iv.hi_rank, lo->second, hi->second};
      p.count = iv.hi_rank - iv.lo_rank;
      p.label = "[" + number_text(lo->second) + ";" + number_text(hi->second) + (last ? "]" : ")");
      out.push_back(std::move(p));
    }
    return out;
  }
  for (std::size_t j = 0; j < partition.size(); ++j) {
    std::vector<std::int32_t> ids = partition.group(j).value_ids;
    std::stable_sort(ids.begin(), ids.end(), [&](std::int32_t a, std::int32_t b) {
      return var.value_counts.at(static_cast<std::size_t>(a)) > var.value_counts.at(static_cast<std::size_t>(b));
    });
    PartView p;
    p.label = "{";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto id = static_cast<std::size_t>(ids[i]);
      if (i < 3) p.label += (i ? "," : "") + var.values.at(id);
      p.count += var.value_counts[id];
      p.values.emplace_back(var.values[id], var.value_counts[id]);
    }
    if (ids.size() > 3) p.label += ",...";
    p.label += "}";
    std::stable_sort(p.values.begin(), p.values.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out.push_back(std::move(p));
  }
  return out;
}

std::string ResultDocument::to_json() const {
  Json doc;
  doc["format_version"] = format_version;

  Json vars = Json::array();
  for (const auto& v : variables) {
    Json j{{"name", v.name}, {"kind", to_string(v.kind)}, {"n_distinct", v.n_distinct}};
    if (v.kind == VariableKind::Categorical) {
      Json values = Json::array();
      for (std::size_t i = 0; i < v.values.size(); ++i) values.push_back({{"value", v.values[i]}, {"count", v.value_counts[i]}});
      j["values"] = std::move(values);
    } else {
      j["min"] = v.min;
      j["max"] = v.max;
    }
    vars.push_back(std::move(j));
  }
  doc["dataset"] = {{"n_records", n_records},
                    {"n_variables", variables.size()},
                    {"dropped_rows", dropped_rows},
                    {"delimiter", std::string(1, delimiter)},
                    {"has_header", has_header},
                    {"variables", std::move(vars)}};

  Json parts_json = Json::array();
  for (std::size_t k = 0; k < partitions.size(); ++k) {
    Json parts = Json::array();
    const auto views = describe(k, partitions[k]);
    for (std::size_t j = 0; j < views.size(); ++j) {
      const auto& v = views[j];
      Json p{{"index", j}, {"label", v.label}, {"count", v.count}};
      if (v.interval) {
        p["lo_rank"] = v.interval->lo_rank;
        p["hi_rank"] = v.interval->hi_rank;
        p["lower"] = v.interval->lower;
        p["upper"] = v.interval->upper;
      } else {
        Json values = Json::array();
        for (const auto& [value, count] : v.values) values.push_back({{"value", value}, {"count", count}});
        p["values"] = std::move(values);
      }
      parts.push_back(std::move(p));
    }
    parts_json.push_back(
        {{"variable", partitions[k].variable}, {"kind", to_string(partitions[k].kind)}, {"parts", std::move(parts)}});
  }
  doc["model"] = {{"total_parts", hierarchy.base_total_parts()}, {"partitions", std::move(parts_json)}};
  doc["cost"] = cost_json(cost);

  Json records = Json::array();
  for (const auto& r : hierarchy.records) {
    records.push_back({{"step", r.step},
                       {"variable", r.variable},
                       {"variable_index", r.variable_index},
                       {"a", r.a},
                       {"b", r.b},
                       {"merged", r.merged},
                       {"delta", r.delta},
                       {"cost_after", r.cost_after},
                       {"info_ratio_after", r.info_ratio_after},
                       {"raw_info_ratio_after", r.raw_info_ratio_after}});
  }
  Json pareto = Json::array();
  for (const auto& [parts, ir] : pareto_curve(hierarchy)) pareto.push_back({parts, ir});
  doc["hierarchy"] = {{"cost_opt", hierarchy.cost_opt},
                      {"cost_null", hierarchy.cost_null},
                      {"frozen", hierarchy.frozen},
                      {"records", std::move(records)},
                      {"pareto", std::move(pareto)}};

  if (optimizer) {
    const auto& o = *optimizer;
    Json rounds = Json::array();
    for (const auto& r : o.rounds) {
      rounds.push_back({{"round", r.round},
                        {"seed", r.seed},
                        {"initial_cost", r.initial_cost},
                        {"final_cost", r.final_cost},
                        {"merges", r.merges}});
    }
    doc["optimizer"] = {{"seed", o.seed},
                        {"vns_rounds", o.vns_rounds},
                        {"max_initial_parts", o.max_initial_parts ? Json(*o.max_initial_parts) : Json(nullptr)},
                        {"freeze", o.freeze},
                        {"best_round", o.best_round ? Json(*o.best_round) : Json(nullptr)},
                        {"best_cost", o.best_cost},
                        {"null_cost", o.null_cost},
                        {"rounds", std::move(rounds)}};
  }

  if (!typicality.empty()) {
    Json typ = Json::array();
    for (const auto& t : typicality) {
      Json entries = Json::array();
      for (const auto& e : t.entries) {
        entries.push_back({{"value", e.value}, {"value_id", e.value_id}, {"frequency", e.frequency}, {"tau", e.tau}});
      }
      typ.push_back({{"variable", t.variable}, {"cluster", t.cluster}, {"entries", std::move(entries)}});
    }
    doc["typicality"] = std::move(typ);
  }
  if (!matrices.empty()) {
    Json mats = Json::array();
    for (const auto& m : matrices) mats.push_back(matrix_json(m));
    doc["matrices"] = std::move(mats);
  }
  return doc.dump(2) + "\n";
}

ResultDocument ResultDocument::from_json(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(std::string("result document is not valid JSON: ") + e.what());
  }
  ResultDocument out;
  try {
    out.format_version = doc.at("format_version").get<int>();
    if (out.format_version != kResultFormatVersion) {
      throw std::runtime_error("unsupported result format_version " + std::to_string(out.format_version));
    }
    const auto& ds = doc.at("dataset");
    out.n_records = ds.at("n_records").get<std::int64_t>();
    out.dropped_rows = ds.value("dropped_rows", std::int64_t{0});
    const auto delim = ds.at("delimiter").get<std::string>();
    if (delim.size() != 1) throw std::runtime_error("result document: delimiter must be one character");
    out.delimiter = delim[0];
    out.has_header = ds.at("has_header").get<bool>();
    for (const auto& j : ds.at("variables")) {
      DocumentVariable v;
      v.name = j.at("name").get<std::string>();
      v.kind = parse_variable_kind(j.at("kind").get<std::string>());
      v.n_distinct = j.at("n_distinct").get<std::int64_t>();
      if (v.kind == VariableKind::Categorical) {
        for (const auto& e : j.at("values")) {
          v.values.push_back(e.at("value").get<std::string>());
          v.value_counts.push_back(e.at("count").get<std::int64_t>());
        }
      } else {
        v.min = j.at("min").get<double>();
        v.max = j.at("max").get<double>();
      }
      out.variables.push_back(std::move(v));
    }

    const auto& parts_json = doc.at("model").at("partitions");
    if (parts_json.size() != out.variables.size()) throw std::runtime_error("result document: partition count mismatch");
    for (std::size_t k = 0; k < parts_json.size(); ++k) {
      const auto& var = out.variables[k];
      std::map<std::string, std::int32_t> ids;
      for (std::size_t i = 0; i < var.values.size(); ++i) ids[var.values[i]] = static_cast<std::int32_t>(i);
      VariablePartition p{parts_json[k].at("variable").get<std::string>(), var.kind, {}};
      std::vector<IntervalBound> b;
      for (const auto& part : parts_json[k].at("parts")) {
        if (var.kind == VariableKind::Numerical) {
          Interval iv{part.at("lo_rank").get<std::int64_t>(), part.at("hi_rank").get<std::int64_t>()};
          b.push_back({iv.lo_rank, iv.hi_rank, part.at("lower").get<double>(), part.at("upper").get<double>()});
          p.parts.emplace_back(iv);
        } else {
          ValueGroup g;
          for (const auto& e : part.at("values")) {
            const auto it = ids.find(e.at("value").get<std::string>());
            if (it == ids.end()) throw std::runtime_error("result document: group lists an unknown value");
            g.value_ids.push_back(it->second);
          }
          std::sort(g.value_ids.begin(), g.value_ids.end());
          p.parts.emplace_back(std::move(g));
        }
      }
      out.partitions.push_back(std::move(p));
      out.bounds.push_back(std::move(b));
    }
    out.cost = cost_from(doc.at("cost"));

    const auto& h = doc.at("hierarchy");
    out.hierarchy.base = out.partitions;
    out.hierarchy.cost_opt = h.at("cost_opt").get<double>();
    out.hierarchy.cost_null = h.at("cost_null").get<double>();
    out.hierarchy.frozen = h.at("frozen").get<std::vector<std::string>>();
    for (const auto& r : h.at("records")) {
      MergeRecord rec;
      rec.step = r.at("step").get<int>();
      rec.variable = r.at("variable").get<std::string>();
      rec.variable_index = r.at("variable_index").get<std::size_t>();
      rec.a = r.at("a").get<std::size_t>();
      rec.b = r.at("b").get<std::size_t>();
      rec.merged = r.at("merged").get<std::size_t>();
      rec.delta = r.at("delta").get<double>();
      rec.cost_after = r.at("cost_after").get<double>();
      rec.info_ratio_after = r.at("info_ratio_after").get<double>();
      rec.raw_info_ratio_after = r.at("raw_info_ratio_after").get<double>();
      out.hierarchy.records.push_back(std::move(rec));
    }

    if (doc.contains("optimizer")) {
      const auto& o = doc.at("optimizer");
      OptimizerSummary s;
      s.seed = o.at("seed").get<std::uint64_t>();
      s.vns_rounds = o.at("vns_rounds").get<int>();
      if (!o.at("max_initial_parts").is_null()) s.max_initial_parts = o.at("max_initial_parts").get<std::int64_t>();
      s.freeze = o.at("freeze").get<std::vector<std::string>>();
      if (!o.at("best_round").is_null()) s.best_round = o.at("best_round").get<int>();
      s.best_cost = o.at("best_cost").get<double>();
      s.null_cost = o.at("null_cost").get<double>();
      for (const auto& r : o.at("rounds")) {
        RoundReport rr;
        rr.round = r.at("round").get<int>();
        rr.seed = r.at("seed").get<std::uint64_t>();
        rr.initial_cost = r.at("initial_cost").get<double>();
        rr.final_cost = r.at("final_cost").get<double>();
        rr.merges = r.at("merges").get<std::int64_t>();
        s.rounds.push_back(rr);
      }
      out.optimizer = std::move(s);
    }
    if (doc.contains("typicality")) {
      for (const auto& t : doc.at("typicality")) {
        TypicalityRanking r{t.at("variable").get<std::string>(), t.at("cluster").get<std::size_t>(), {}};
        for (const auto& e : t.at("entries")) {
          r.entries.push_back({e.at("value_id").get<std::int32_t>(), e.at("value").get<std::string>(),
                               e.at("frequency").get<std::int64_t>(), e.at("tau").get<double>()});
        }
        out.typicality.push_back(std::move(r));
      }
    }
    if (doc.contains("matrices")) {
      for (const auto& m : doc.at("matrices")) out.matrices.push_back(matrix_from(m));
    }
  } catch (const Json::exception& e) {
    throw std::runtime_error(std::string("malformed result document: ") + e.what());
  }
  return out;
}

void ResultDocument::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ResultDocument ResultDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

GridModel ResultDocument::bind(GridModel::DatasetPtr dataset) const {
  if (dataset->n_records() != n_records || dataset->n_variables() != variables.size()) {
    throw std::invalid_argument("table does not match the result document (record or variable count)");
  }
  for (std::size_t k = 0; k < variables.size(); ++k) {
    const auto& col = dataset->column(k);
    if (dataset->variable(k).name != variables[k].name || col.kind != variables[k].kind) {
      throw std::invalid_argument("table does not match the result document (variable " + variables[k].name + ")");
    }
    if (col.kind == VariableKind::Categorical &&
        (col.dictionary != variables[k].values || col.value_counts != variables[k].value_counts)) {
      throw std::invalid_argument("table does not match the result document (values of " + variables[k].name + ")");
    }
  }
  return GridModel::from_partitions(std::move(dataset), partitions);
}

MergeHierarchy ResultDocument::bind_hierarchy(GridModel::DatasetPtr dataset) const {
  bind(dataset);
  MergeHierarchy h = hierarchy;
  h.dataset = std::move(dataset);
  return h;
}

}  // namespace datagrid
