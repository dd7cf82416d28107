#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "datagrid/cost.hpp"
#include "datagrid/hierarchy.hpp"
#include "datagrid/insights.hpp"
#include "datagrid/optimizer.hpp"
#include "datagrid/result_document.hpp"
#include "datagrid/synthetic.hpp"
#include "json.hpp"

using namespace datagrid;
using Json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kMaxEmbeddedMatrices = 5000;

char parse_delimiter(const std::string& text) {
  if (text == "tab" || text == "\\t" || text == "\t") return '\t';
  if (text == "comma") return ',';
  if (text == "semicolon") return ';';
  if (text == "space") return ' ';
  if (text.size() != 1) throw std::invalid_argument("--delimiter must be a single character, tab, comma, semicolon or space");
  return text[0];
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || v < 0) throw std::invalid_argument("invalid " + what + ": " + text);
  return static_cast<std::size_t>(v);
}

// name=part pairs, repeated or comma separated
std::map<std::string, std::size_t> parse_assignments(const std::vector<std::string>& items, const std::string& what) {
  std::map<std::string, std::size_t> out;
  for (const auto& item : items) {
    for (const auto& pair : split(item, ',')) {
      const auto eq = pair.find('=');
      if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected name=value in " + what + ": " + pair);
      out[pair.substr(0, eq)] = parse_count(pair.substr(eq + 1), what);
    }
  }
  return out;
}

std::vector<std::string> flatten_names(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    for (const auto& name : split(item, ',')) out.push_back(name);
  }
  return out;
}

struct TableFlags {
  std::vector<std::string> vars;
  std::string schema_path;
  std::string delimiter;
  bool no_header = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--var", vars, "Variable as name:kind (kind: numerical|categorical), in column order");
    cmd->add_option("--schema", schema_path, "JSON schema file {variables:[{name,kind}], delimiter, has_header}");
    cmd->add_option("--delimiter", delimiter, "Field delimiter (default tab)");
    cmd->add_flag("--no-header", no_header, "The table has no header line");
  }

  Schema schema() const {
    Schema s;
    if (!schema_path.empty()) s = Schema::from_json_file(schema_path);
    if (!vars.empty()) {
      s.variables.clear();
      for (const auto& v : vars) s.variables.push_back(Schema::parse_variable_flag(v));
    }
    if (!delimiter.empty()) s.delimiter = parse_delimiter(delimiter);
    if (no_header) s.has_header = false;
    s.validate();
    return s;
  }
};

std::shared_ptr<const Dataset> load(const std::string& path, const Schema& schema) {
  auto ds = std::make_shared<const Dataset>(load_table(path, schema));
  if (ds->dropped_rows() > 0) {
    std::cerr << "datagrid: dropped " << ds->dropped_rows() << " rows with unparseable numerical fields\n";
  }
  return ds;
}

// Result document plus its table, loaded with the document's schema unless overridden.
struct Bound {
  ResultDocument doc;
  std::shared_ptr<const Dataset> dataset;
  GridModel model;
};

Bound bind(const std::string& result_path, const std::string& table_path, const std::string& delimiter, bool no_header) {
  auto doc = ResultDocument::load(result_path);
  Schema s = doc.schema();
  if (!delimiter.empty()) s.delimiter = parse_delimiter(delimiter);
  if (no_header) s.has_header = false;
  auto ds = load(table_path, s);
  auto model = doc.bind(ds);
  return {std::move(doc), std::move(ds), std::move(model)};
}

std::vector<InsightMatrix> all_matrices(const GridModel& m) {
  std::vector<InsightMatrix> out;
  const std::size_t K = m.n_variables();
  auto guard = [&] {
    if (out.size() > kMaxEmbeddedMatrices) {
      throw std::runtime_error("--embed-matrices would produce more than " + std::to_string(kMaxEmbeddedMatrices) +
                               " matrices");
    }
  };
  for (std::size_t r = 0; r < K; ++r) {
    for (std::size_t c = r + 1; c < K; ++c) {
      std::vector<std::size_t> others;
      for (std::size_t k = 0; k < K; ++k) {
        if (k != r && k != c) others.push_back(k);
      }
      std::vector<std::size_t> pick(others.size(), 0);
      while (true) {
        Selection sel;
        for (std::size_t i = 0; i < others.size(); ++i) sel[m.partition(others[i]).variable] = pick[i];
        const auto& rv = m.partition(r).variable;
        const auto& cv = m.partition(c).variable;
        auto freq = frequency_matrix(m, rv, cv, sel);
        if (freq.slice_total > 0) {
          out.push_back(std::move(freq));
          out.push_back(cmi_matrix(m, rv, cv, sel));
          guard();
        }
        std::size_t i = 0;
        while (i < others.size() && ++pick[i] == m.part_count(others[i])) pick[i++] = 0;
        if (i == others.size()) break;
      }
    }
  }
  for (std::size_t s = 0; s < K; ++s) {
    for (std::size_t r = 0; r < K; ++r) {
      for (std::size_t c = r + 1; c < K; ++c) {
        if (s == r || s == c) continue;
        for (std::size_t j = 0; j < m.part_count(s); ++j) {
          out.push_back(contrast_matrix(m, m.partition(s).variable, j, m.partition(r).variable, m.partition(c).variable));
          guard();
        }
      }
    }
  }
  return out;
}

std::vector<TypicalityRanking> all_typicality(const GridModel& m) {
  std::vector<TypicalityRanking> out;
  for (std::size_t k = 0; k < m.n_variables(); ++k) {
    if (m.partition(k).kind != VariableKind::Categorical || m.part_count(k) < 2) continue;
    for (std::size_t j = 0; j < m.part_count(k); ++j) out.push_back(typicality(m, m.partition(k).variable, j));
  }
  return out;
}

Json describe_json(const ResultDocument& doc, const std::vector<VariablePartition>& parts) {
  Json out = Json::array();
  for (std::size_t k = 0; k < parts.size(); ++k) {
    Json ps = Json::array();
    const auto views = doc.describe(k, parts[k]);
    for (std::size_t j = 0; j < views.size(); ++j) {
      Json p{{"index", j}, {"label", views[j].label}, {"count", views[j].count}};
      if (!views[j].values.empty()) {
        Json values = Json::array();
        for (const auto& [v, n] : views[j].values) values.push_back({{"value", v}, {"count", n}});
        p["values"] = std::move(values);
      }
      ps.push_back(std::move(p));
    }
    out.push_back({{"variable", parts[k].variable}, {"parts", std::move(ps)}});
  }
  return out;
}

std::string fmt_double(double v) {
  return Json(v).dump();
}

// ------------------------------------------------------------ subcommands

struct TrainArgs {
  std::string table;
  TableFlags flags;
  std::uint64_t seed = 0;
  int vns_rounds = 10;
  std::optional<std::int64_t> max_initial_parts;
  std::vector<std::string> freeze;
  int threads = 1;
  std::string out;
  bool embed_matrices = false;
  bool typicality = false;
};

int run_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto ds = load(a.table, a.flags.schema());
  OptimizerConfig cfg;
  cfg.seed = a.seed;
  cfg.vns_rounds = a.vns_rounds;
  cfg.max_initial_parts = a.max_initial_parts;
  cfg.freeze = flatten_names(a.freeze);
  cfg.threads = a.threads;
  const auto report = vns_optimize(ds, cfg);
  const auto hierarchy = build_hierarchy(report.best_model, cfg.freeze);
  auto doc = ResultDocument::build(report.best_model, hierarchy, OptimizerSummary::from_report(report, cfg));
  if (a.typicality) doc.typicality = all_typicality(report.best_model);
  if (a.embed_matrices) doc.matrices = all_matrices(report.best_model);
  write_text(a.out, doc.to_json());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "datagrid: N=" << ds->n_records() << " parts=" << report.best_model.total_parts()
            << " cost=" << fmt_double(report.best_cost) << " null=" << fmt_double(report.null_cost)
            << " wall=" << wall << "s\n";
  return 0;
}

struct SimplifyArgs {
  std::string result;
  std::optional<std::size_t> clusters;
  std::vector<std::string> per_var;
  std::optional<double> info_ratio;
  std::string out;
  std::string pareto;
};

int run_simplify(const SimplifyArgs& a) {
  const int targets = (a.clusters ? 1 : 0) + (a.per_var.empty() ? 0 : 1) + (a.info_ratio ? 1 : 0);
  if (targets != 1) throw std::invalid_argument("give exactly one of --clusters, --per-var, --info-ratio");
  const auto doc = ResultDocument::load(a.result);
  GranularityTarget target;
  if (a.clusters) target = TotalParts{*a.clusters};
  if (a.info_ratio) target = InfoRatio{*a.info_ratio};
  if (!a.per_var.empty()) target = PartsPerVariable{parse_assignments(a.per_var, "--per-var")};
  const auto& h = doc.hierarchy;
  const std::size_t steps = steps_for(h, target);
  const auto parts = partitions_after(h, steps);
  std::size_t total = 0;
  Json counts = Json::object();
  for (const auto& p : parts) {
    total += p.size();
    counts[p.variable] = p.size();
  }
  const double cost_after = steps == 0 ? h.cost_opt : h.records[steps - 1].cost_after;
  const double raw = steps == 0 ? 1.0 : h.records[steps - 1].raw_info_ratio_after;
  Json report{{"steps", steps},
              {"total_parts", total},
              {"parts_per_variable", std::move(counts)},
              {"info_ratio", info_ratio_after(h, steps)},
              {"raw_info_ratio", raw},
              {"cost", cost_after},
              {"partitions", describe_json(doc, parts)}};
  write_text(a.out, report.dump(2) + "\n");
  if (!a.pareto.empty()) {
    std::string csv = "total_parts,info_ratio\n";
    for (const auto& [n, ir] : pareto_curve(h)) csv += std::to_string(n) + "," + fmt_double(ir) + "\n";
    write_text(a.pareto, csv);
  }
  return 0;
}

struct BoundArgs {
  std::string result;
  std::string table;
  std::string delimiter;
  bool no_header = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("result", result, "Result JSON written by train")->required();
    cmd->add_option("table", table, "The table the result was trained on")->required();
    cmd->add_option("--delimiter", delimiter, "Override the table delimiter recorded in the result");
    cmd->add_flag("--no-header", no_header, "The table has no header line");
  }
};

struct TypicalityArgs {
  BoundArgs in;
  std::string variable;
  std::size_t cluster = 0;
  std::optional<std::size_t> top;
  std::string out;
};

int run_typicality(const TypicalityArgs& a) {
  const auto b = bind(a.in.result, a.in.table, a.in.delimiter, a.in.no_header);
  write_text(a.out, to_csv(typicality(b.model, a.variable, a.cluster), a.top));
  return 0;
}

struct MatrixArgs {
  BoundArgs in;
  std::string rows;
  std::string cols;
  std::vector<std::string> select;
  std::string target;
  std::size_t target_part = 0;
  std::string out;
  std::string json;
};

int run_matrix(MatrixKind kind, const MatrixArgs& a) {
  const auto b = bind(a.in.result, a.in.table, a.in.delimiter, a.in.no_header);
  InsightMatrix m;
  if (kind == MatrixKind::Contrast) {
    if (a.target.empty()) throw std::invalid_argument("--target is required");
    m = contrast_matrix(b.model, a.target, a.target_part, a.rows, a.cols);
  } else {
    const auto sel = parse_assignments(a.select, "--select");
    m = kind == MatrixKind::Cmi ? cmi_matrix(b.model, a.rows, a.cols, sel) : frequency_matrix(b.model, a.rows, a.cols, sel);
  }
  write_text(a.out, to_csv(m));
  if (!a.json.empty()) {
    ResultDocument only;
    only.matrices.push_back(m);
    auto full = Json::parse(only.to_json());
    write_text(a.json, full.contains("matrices") ? full["matrices"][0].dump(2) + "\n" : "{}\n");
  }
  return 0;
}

struct SyntheticArgs {
  std::vector<std::string> vars;
  double noise = 0.05;
  std::vector<double> cells;
  std::int64_t records = 1000;
  std::uint64_t seed = 0;
  std::string delimiter;
  std::string out;
  std::string truth;
};

int run_gen_synthetic(const SyntheticArgs& a) {
  PlantSpec spec;
  for (const auto& v : a.vars) {
    const auto fields = split(v, ':');
    if (fields.size() < 3 || fields.size() > 4) {
      throw std::invalid_argument("--var expects name:kind:parts[:values_per_part], got " + v);
    }
    PlantedVariable pv;
    pv.name = fields[0];
    pv.kind = parse_variable_kind(fields[1]);
    pv.parts = parse_count(fields[2], "part count");
    pv.values_per_part = fields.size() == 4 ? parse_count(fields[3], "values per part")
                                            : (pv.kind == VariableKind::Categorical ? 4 : 0);
    spec.variables.push_back(pv);
  }
  spec.noise = a.noise;
  if (!a.cells.empty()) spec.cell_probabilities = a.cells;
  spec.n_records = a.records;
  spec.seed = a.seed;
  const auto planted = generate(spec);
  write_table(planted.dataset, a.out);
  if (!a.delimiter.empty()) {
    // generated fields never contain tabs, so swapping the separator is safe
    const char d = parse_delimiter(a.delimiter);
    std::ifstream in(a.out, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    for (auto& c : text) {
      if (c == d && d != '\t') throw std::invalid_argument("a generated field contains the delimiter");
      if (c == '\t') c = d;
    }
    write_text(a.out, text);
  }
  const std::string truth_path = a.truth.empty() ? a.out + ".truth.json" : a.truth;
  write_text(truth_path, planted.truth.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"datagrid: parameter-free data grid coclustering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "datagrid 0.3.0");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit the optimal data grid and write a result JSON");
  train_cmd->add_option("table", train.table, "Delimited input table")->required();
  train.flags.attach(train_cmd);
  train_cmd->add_option("--seed", train.seed, "Master seed");
  train_cmd->add_option("--vns-rounds", train.vns_rounds, "Multi-start rounds")->check(CLI::PositiveNumber);
  train_cmd->add_option("--max-initial-parts", train.max_initial_parts, "Parts per variable of the starting grids (default ceil(sqrt(N)))")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--freeze", train.freeze, "Variables whose partition is kept fixed");
  train_cmd->add_option("--threads", train.threads, "Worker threads for the rounds")->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", train.out, "Result JSON path (default stdout)");
  train_cmd->add_flag("--embed-matrices", train.embed_matrices, "Store frequency, cmi and contrast matrices of the optimum");
  train_cmd->add_flag("--typicality", train.typicality, "Store typicality rankings of every categorical cluster");

  SimplifyArgs simplify;
  auto* simplify_cmd = app.add_subcommand("simplify", "Coarsen the optimum along the merge hierarchy");
  simplify_cmd->add_option("result", simplify.result, "Result JSON")->required();
  simplify_cmd->add_option("--clusters", simplify.clusters, "Target total number of parts");
  simplify_cmd->add_option("--per-var", simplify.per_var, "Target parts per variable, name=count[,name=count]");
  simplify_cmd->add_option("--info-ratio", simplify.info_ratio, "Keep the coarsest model with at least this information ratio");
  simplify_cmd->add_option("--out", simplify.out, "Report JSON path (default stdout)");
  simplify_cmd->add_option("--pareto", simplify.pareto, "Write the (parts, information ratio) curve as CSV");

  TypicalityArgs typ;
  auto* typ_cmd = app.add_subcommand("typicality", "Rank the values of a cluster by typicality");
  typ.in.attach(typ_cmd);
  typ_cmd->add_option("--variable", typ.variable, "Categorical variable")->required();
  typ_cmd->add_option("--cluster", typ.cluster, "Cluster index")->required();
  typ_cmd->add_option("--top", typ.top, "Keep the first t values");
  typ_cmd->add_option("--out", typ.out, "CSV path (default stdout)");

  MatrixArgs cmi;
  MatrixArgs freq;
  MatrixArgs contrast;
  auto matrix_cmd = [&](const char* name, const char* help, MatrixArgs& m, bool with_target) {
    auto* cmd = app.add_subcommand(name, help);
    m.in.attach(cmd);
    cmd->add_option("--rows", m.rows, "Row variable")->required();
    cmd->add_option("--cols", m.cols, "Column variable")->required();
    if (with_target) {
      cmd->add_option("--target", m.target, "Target variable")->required();
      cmd->add_option("--target-part", m.target_part, "Target part index");
    } else {
      cmd->add_option("--select", m.select, "Fixed part on every other variable, name=part[,name=part]");
    }
    cmd->add_option("--out", m.out, "CSV path (default stdout)");
    cmd->add_option("--json", m.json, "Also write the matrix as JSON");
    return cmd;
  };
  auto* cmi_cmd = matrix_cmd("cmi", "Contribution of each cell to the mutual information of a slice", cmi, false);
  auto* freq_cmd = matrix_cmd("freq", "Cell counts of a slice", freq, false);
  auto* contrast_cmd = matrix_cmd("contrast", "Contrast of a target part over two variables", contrast, true);

  SyntheticArgs syn;
  auto* syn_cmd = app.add_subcommand("gen-synthetic", "Generate a table with planted grid structure");
  syn_cmd->add_option("--var", syn.vars, "Planted variable name:kind:parts[:values_per_part]")->required();
  syn_cmd->add_option("--noise", syn.noise, "Noise of the diagonal-dominant cell law, in [0,1]");
  syn_cmd->add_option("--cells", syn.cells, "Explicit cell probabilities, row-major")->delimiter(',');
  syn_cmd->add_option("--records", syn.records, "Number of records")->check(CLI::PositiveNumber);
  syn_cmd->add_option("--seed", syn.seed, "Seed");
  syn_cmd->add_option("--delimiter", syn.delimiter, "Field delimiter (default tab)");
  syn_cmd->add_option("--out", syn.out, "Table path")->required();
  syn_cmd->add_option("--truth", syn.truth, "Ground-truth JSON path (default <out>.truth.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "datagrid: error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (*train_cmd) return run_train(train);
    if (*simplify_cmd) return run_simplify(simplify);
    if (*typ_cmd) return run_typicality(typ);
    if (*cmi_cmd) return run_matrix(MatrixKind::Cmi, cmi);
    if (*freq_cmd) return run_matrix(MatrixKind::Frequency, freq);
    if (*contrast_cmd) return run_matrix(MatrixKind::Contrast, contrast);
    if (*syn_cmd) return run_gen_synthetic(syn);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "datagrid: error: " << msg << "\n";
    return 1;
  }
  return 1;
}
