#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "datagrid/cost.hpp"
#include "datagrid/dataset.hpp"
#include "datagrid/grid.hpp"
#include "datagrid/hierarchy.hpp"
#include "datagrid/insights.hpp"
#include "datagrid/optimizer.hpp"
#include "datagrid/result_document.hpp"
#include "datagrid/synthetic.hpp"

namespace py = pybind11;
using namespace datagrid;

namespace {

// Python-facing handle; the C++ side shares datasets through shared_ptr<const>.
struct PyDataset {
  std::shared_ptr<const Dataset> ptr;
};

Schema make_schema(const std::vector<std::pair<std::string, std::string>>& variables, const std::string& delimiter,
                   bool has_header) {
  if (delimiter.size() != 1) throw std::invalid_argument("delimiter must be one character");
  Schema s;
  for (const auto& [name, kind] : variables) s.variables.push_back({name, parse_variable_kind(kind)});
  s.delimiter = delimiter[0];
  s.has_header = has_header;
  s.validate();
  return s;
}

py::list partition_to_py(const VariablePartition& p) {
  py::list parts;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.kind == VariableKind::Numerical) {
      parts.append(py::make_tuple(p.interval(j).lo_rank, p.interval(j).hi_rank));
    } else {
      parts.append(py::cast(p.group(j).value_ids));
    }
  }
  return parts;
}

py::dict record_to_py(const MergeRecord& r) {
  py::dict d;
  d["step"] = r.step;
  d["variable"] = r.variable;
  d["a"] = r.a;
  d["b"] = r.b;
  d["delta"] = r.delta;
  d["cost_after"] = r.cost_after;
  d["info_ratio"] = r.info_ratio_after;
  d["raw_info_ratio"] = r.raw_info_ratio_after;
  return d;
}

GranularityTarget make_target(std::optional<std::size_t> clusters,
                              std::optional<std::map<std::string, std::size_t>> per_var,
                              std::optional<double> info_ratio) {
  const int given = (clusters ? 1 : 0) + (per_var ? 1 : 0) + (info_ratio ? 1 : 0);
  if (given != 1) throw std::invalid_argument("give exactly one of clusters, per_var, info_ratio");
  if (clusters) return TotalParts{*clusters};
  if (per_var) return PartsPerVariable{*per_var};
  return InfoRatio{*info_ratio};
}

py::list matrix_rows(const InsightMatrix& m) {
  py::list rows;
  for (std::size_t i = 0; i < m.rows; ++i) {
    py::list row;
    for (std::size_t j = 0; j < m.cols; ++j) row.append(m.at(i, j));
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Data grid coclustering core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::length_error& e) {
      PyErr_SetString(PyExc_OverflowError, e.what());
    }
  });

  py::class_<PyDataset>(m, "Dataset")
      .def_property_readonly("n_records", [](const PyDataset& d) { return d.ptr->n_records(); })
      .def_property_readonly("n_variables", [](const PyDataset& d) { return d.ptr->n_variables(); })
      .def_property_readonly("dropped_rows", [](const PyDataset& d) { return d.ptr->dropped_rows(); })
      .def_property_readonly("names",
                             [](const PyDataset& d) {
                               std::vector<std::string> out;
                               for (const auto& v : d.ptr->schema().variables) out.push_back(v.name);
                               return out;
                             })
      .def_property_readonly("kinds",
                             [](const PyDataset& d) {
                               std::vector<std::string> out;
                               for (const auto& v : d.ptr->schema().variables) out.emplace_back(to_string(v.kind));
                               return out;
                             })
      .def("value_counts", [](const PyDataset& d, const std::string& var) { return value_counts(*d.ptr, var); })
      .def("save", [](const PyDataset& d, const std::string& path) { write_table(*d.ptr, path); })
      .def("__repr__", [](const PyDataset& d) {
        return "<Dataset N=" + std::to_string(d.ptr->n_records()) + " K=" + std::to_string(d.ptr->n_variables()) + ">";
      });

  m.def(
      "load_table",
      [](const std::string& path, const std::vector<std::pair<std::string, std::string>>& variables,
         const std::string& delimiter, bool has_header) {
        return PyDataset{std::make_shared<const Dataset>(load_table(path, make_schema(variables, delimiter, has_header)))};
      },
      py::arg("path"), py::arg("variables"), py::arg("delimiter") = "\t", py::arg("has_header") = true,
      "Load a delimited table; variables is a list of (name, 'numerical'|'categorical').");

  py::class_<GroundTruth>(m, "GroundTruth")
      .def("to_json", &GroundTruth::to_json)
      .def_static("from_json", &GroundTruth::from_json)
      .def("atom_labels", [](const GroundTruth& t, const PyDataset& d, std::size_t k) { return t.atom_labels(*d.ptr, k); });

  m.def(
      "generate_planted",
      [](const std::vector<std::tuple<std::string, std::string, std::size_t, std::size_t>>& variables,
         std::int64_t n_records, double noise, std::uint64_t seed, std::optional<std::vector<double>> cells) {
        PlantSpec spec;
        for (const auto& [name, kind, parts, vpp] : variables) {
          spec.variables.push_back({name, parse_variable_kind(kind), parts, vpp});
        }
        spec.n_records = n_records;
        spec.noise = noise;
        spec.seed = seed;
        spec.cell_probabilities = std::move(cells);
        auto planted = generate(spec);
        return py::make_tuple(PyDataset{std::make_shared<const Dataset>(std::move(planted.dataset))},
                              std::move(planted.truth));
      },
      py::arg("variables"), py::arg("n_records") = 1000, py::arg("noise") = 0.05, py::arg("seed") = 0,
      py::arg("cells") = py::none(),
      "Planted table; variables are (name, kind, parts, values_per_part). Returns (Dataset, GroundTruth).");

  py::class_<GridModel>(m, "GridModel")
      .def_property_readonly("n_variables", &GridModel::n_variables)
      .def_property_readonly("part_counts", &GridModel::part_counts)
      .def_property_readonly("total_parts", &GridModel::total_parts)
      .def_property_readonly("dataset", [](const GridModel& g) { return PyDataset{g.dataset_ptr()}; })
      .def("partition", [](const GridModel& g, std::size_t k) { return partition_to_py(g.partition(k)); },
           "Parts of variable k: (lo_rank, hi_rank) intervals or lists of value ids.")
      .def("part_label", &GridModel::part_label)
      .def("part_total", &GridModel::part_total)
      .def("merge_parts", &GridModel::merge_parts)
      .def("__repr__", [](const GridModel& g) { return "<GridModel parts=" + std::to_string(g.total_parts()) + ">"; });

  m.def("null_model", [](const PyDataset& d) { return GridModel::null_model(d.ptr); });
  m.def(
      "from_atom_labels",
      [](const PyDataset& d, const std::vector<std::vector<std::int32_t>>& labels) {
        return GridModel::from_atom_labels(d.ptr, labels);
      },
      py::arg("dataset"), py::arg("atom_labels"));

  py::class_<CostBreakdown>(m, "CostBreakdown")
      .def_readonly("prior_numerical_part_counts", &CostBreakdown::prior_numerical_part_counts)
      .def_readonly("prior_categorical_group_counts", &CostBreakdown::prior_categorical_group_counts)
      .def_readonly("prior_partition_choice", &CostBreakdown::prior_partition_choice)
      .def_readonly("prior_cell_distribution", &CostBreakdown::prior_cell_distribution)
      .def_readonly("prior_group_value_distribution", &CostBreakdown::prior_group_value_distribution)
      .def_readonly("likelihood_cells", &CostBreakdown::likelihood_cells)
      .def_readonly("likelihood_within_parts", &CostBreakdown::likelihood_within_parts)
      .def_readonly("total", &CostBreakdown::total);

  m.def("cost", &cost, py::arg("model"));
  m.def("delta_merge", &delta_merge, py::arg("model"), py::arg("k"), py::arg("a"), py::arg("b"));

  py::class_<OptimizationReport>(m, "OptimizationReport")
      .def_readonly("best_model", &OptimizationReport::best_model)
      .def_readonly("best_cost", &OptimizationReport::best_cost)
      .def_readonly("null_cost", &OptimizationReport::null_cost)
      .def_readonly("best_round", &OptimizationReport::best_round);

  m.def(
      "train",
      [](const PyDataset& d, std::uint64_t seed, int vns_rounds, std::optional<std::int64_t> max_initial_parts,
         std::vector<std::string> freeze, int threads) {
        OptimizerConfig cfg;
        cfg.seed = seed;
        cfg.vns_rounds = vns_rounds;
        cfg.max_initial_parts = max_initial_parts;
        cfg.freeze = std::move(freeze);
        cfg.threads = threads;
        py::gil_scoped_release release;
        return vns_optimize(d.ptr, cfg);
      },
      py::arg("dataset"), py::arg("seed") = 0, py::arg("vns_rounds") = 10, py::arg("max_initial_parts") = py::none(),
      py::arg("freeze") = std::vector<std::string>{}, py::arg("threads") = 1);

  py::class_<MergeHierarchy>(m, "Hierarchy")
      .def_readonly("cost_opt", &MergeHierarchy::cost_opt)
      .def_readonly("cost_null", &MergeHierarchy::cost_null)
      .def_readonly("frozen", &MergeHierarchy::frozen)
      .def_property_readonly("records",
                             [](const MergeHierarchy& h) {
                               py::list out;
                               for (const auto& r : h.records) out.append(record_to_py(r));
                               return out;
                             })
      .def("steps_for",
           [](const MergeHierarchy& h, std::optional<std::size_t> clusters,
              std::optional<std::map<std::string, std::size_t>> per_var, std::optional<double> info_ratio) {
             return steps_for(h, make_target(clusters, per_var, info_ratio));
           },
           py::arg("clusters") = py::none(), py::arg("per_var") = py::none(), py::arg("info_ratio") = py::none())
      .def("model_at",
           [](const MergeHierarchy& h, std::optional<std::size_t> clusters,
              std::optional<std::map<std::string, std::size_t>> per_var, std::optional<double> info_ratio) {
             return model_at(h, make_target(clusters, per_var, info_ratio));
           },
           py::arg("clusters") = py::none(), py::arg("per_var") = py::none(), py::arg("info_ratio") = py::none())
      .def("model_after", [](const MergeHierarchy& h, std::size_t steps) { return model_after(h, steps); })
      .def("info_ratio_after", [](const MergeHierarchy& h, std::size_t steps) { return info_ratio_after(h, steps); })
      .def("pareto", [](const MergeHierarchy& h) { return pareto_curve(h); });

  m.def("build_hierarchy", &build_hierarchy, py::arg("model"), py::arg("freeze") = std::vector<std::string>{});

  py::class_<InsightMatrix>(m, "InsightMatrix")
      .def_property_readonly("kind", [](const InsightMatrix& x) { return to_string(x.kind); })
      .def_readonly("row_variable", &InsightMatrix::row_variable)
      .def_readonly("col_variable", &InsightMatrix::col_variable)
      .def_readonly("row_labels", &InsightMatrix::row_labels)
      .def_readonly("col_labels", &InsightMatrix::col_labels)
      .def_readonly("slice_total", &InsightMatrix::slice_total)
      .def_readonly("total_mi", &InsightMatrix::total_mi)
      .def_property_readonly("values", &matrix_rows)
      .def("to_csv", [](const InsightMatrix& x) { return to_csv(x); });

  m.def("frequency_matrix", &frequency_matrix, py::arg("model"), py::arg("rows"), py::arg("cols"),
        py::arg("selection") = Selection{});
  m.def("cmi_matrix", &cmi_matrix, py::arg("model"), py::arg("rows"), py::arg("cols"),
        py::arg("selection") = Selection{});
  m.def("contrast_matrix", &contrast_matrix, py::arg("model"), py::arg("target"), py::arg("target_part"),
        py::arg("rows"), py::arg("cols"));

  m.def(
      "typicality",
      [](const GridModel& g, const std::string& variable, std::size_t cluster) {
        std::vector<std::tuple<std::string, std::int64_t, double>> out;
        for (const auto& e : typicality(g, variable, cluster).entries) out.emplace_back(e.value, e.frequency, e.tau);
        return out;
      },
      py::arg("model"), py::arg("variable"), py::arg("cluster"),
      "(value, frequency, tau) by descending typicality.");

  m.def("adjusted_rand_index", &adjusted_rand_index, py::arg("a"), py::arg("b"));
  m.def("recovery_ari", &recovery_ari, py::arg("model"), py::arg("truth"), py::arg("k"));

  m.def(
      "result_document_json",
      [](const GridModel& optimum, const MergeHierarchy& h) { return ResultDocument::build(optimum, h).to_json(); },
      py::arg("optimum"), py::arg("hierarchy"));
}
