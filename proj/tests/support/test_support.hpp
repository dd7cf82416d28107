#pragma once

// Shared helpers for the C++ test binaries: small dataset builders and an
// independent cost evaluation straight from the records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "datagrid/dataset.hpp"
#include "datagrid/grid.hpp"

namespace testing_support {

using datagrid::Dataset;
using datagrid::GridModel;
using datagrid::VariableKind;

inline std::shared_ptr<const Dataset> make_dataset(const std::vector<std::pair<std::string, VariableKind>>& vars,
                                                   const std::vector<std::vector<std::string>>& rows) {
  datagrid::Schema schema;
  for (const auto& [name, kind] : vars) schema.variables.push_back({name, kind});
  datagrid::DatasetBuilder b(schema);
  for (const auto& r : rows) b.add_row(std::span<const std::string>(r));
  return std::make_shared<const Dataset>(std::move(b).build());
}

/// Random table: categorical variables draw from "c0".."c{V-1}", numerical
/// ones from small integers so that ties occur.
inline std::shared_ptr<const Dataset> random_dataset(std::mt19937_64& rng, std::size_t n,
                                                     const std::vector<VariableKind>& kinds, int max_values) {
  std::vector<std::pair<std::string, VariableKind>> vars;
  for (std::size_t k = 0; k < kinds.size(); ++k) vars.emplace_back("x" + std::to_string(k), kinds[k]);
  std::vector<std::vector<std::string>> rows(n, std::vector<std::string>(kinds.size()));
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const int V = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_values));
    for (std::size_t i = 0; i < n; ++i) {
      const int v = static_cast<int>(rng() % static_cast<std::uint64_t>(V));
      rows[i][k] = kinds[k] == VariableKind::Categorical ? "c" + std::to_string(v) : std::to_string(v);
    }
  }
  return make_dataset(vars, rows);
}

/// Random partition labels over the atoms of every variable (numerical
/// labels non-decreasing).
inline GridModel random_model(std::mt19937_64& rng, std::shared_ptr<const Dataset> ds) {
  std::vector<std::vector<std::int32_t>> labels(ds->n_variables());
  for (std::size_t k = 0; k < ds->n_variables(); ++k) {
    const auto atoms = ds->column(k).atom_count();
    const auto parts = 1 + rng() % atoms;
    auto& lab = labels[k];
    if (ds->kind(k) == VariableKind::Categorical) {
      for (std::size_t a = 0; a < atoms; ++a) lab.push_back(static_cast<std::int32_t>(rng() % parts));
    } else {
      std::int32_t cur = 0;
      for (std::size_t a = 0; a < atoms; ++a) {
        if (a > 0 && rng() % 2 == 0) ++cur;
        lab.push_back(cur);
      }
    }
  }
  return GridModel::from_atom_labels(ds, labels);
}

inline double lf(double n) { return std::lgamma(n + 1.0); }
inline double lbinom(double n, double k) { return lf(n) - lf(k) - lf(n - k); }

/// Number of partitions of v labelled items into at most j groups, exact.
inline double stirling_sum(int v, int j) {
  std::vector<std::vector<double>> s(static_cast<std::size_t>(v) + 1, std::vector<double>(static_cast<std::size_t>(v) + 1, 0.0));
  s[0][0] = 1.0;
  for (int n = 1; n <= v; ++n) {
    for (int k = 1; k <= n; ++k) s[n][k] = k * s[n - 1][k] + s[n - 1][k - 1];
  }
  double total = 0.0;
  for (int k = 1; k <= std::min(v, j); ++k) total += s[v][k];
  return total;
}

/// Cost evaluated from scratch: part of each record looked up from the
/// partitions directly (not from the model's indexes).
inline double oracle_cost(const GridModel& m) {
  const Dataset& ds = m.dataset();
  const auto N = static_cast<double>(ds.n_records());
  const std::size_t K = ds.n_variables();
  std::vector<std::vector<int>> part(K, std::vector<int>(static_cast<std::size_t>(ds.n_records())));
  double total = 0.0;
  double G = 1.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& p = m.partition(k);
    const auto& col = ds.column(k);
    G *= static_cast<double>(p.size());
    for (std::size_t r = 0; r < part[k].size(); ++r) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        bool in = false;
        if (p.kind == VariableKind::Numerical) {
          const auto rank = col.ranks[r];
          in = rank >= p.interval(j).lo_rank && rank < p.interval(j).hi_rank;
        } else {
          const auto& ids = p.group(j).value_ids;
          in = std::find(ids.begin(), ids.end(), col.atom[r]) != ids.end();
        }
        if (in) part[k][r] = static_cast<int>(j);
      }
    }
    std::vector<double> nj(p.size(), 0.0);
    for (const int j : part[k]) nj[static_cast<std::size_t>(j)] += 1.0;
    for (const double x : nj) total += lf(x);
    if (p.kind == VariableKind::Numerical) {
      total += std::log(N);
    } else {
      const auto V = static_cast<int>(col.dictionary.size());
      total += std::log(static_cast<double>(V));
      total += std::log(stirling_sum(V, static_cast<int>(p.size())));
      for (std::size_t j = 0; j < p.size(); ++j) {
        const auto mj = static_cast<double>(p.group(j).value_ids.size());
        total += lbinom(nj[j] + mj - 1.0, mj - 1.0);
      }
      std::map<int, double> nv;
      for (const auto a : col.atom) nv[a] += 1.0;
      for (const auto& [v, c] : nv) total -= lf(c);
    }
  }
  total += lbinom(N + G - 1.0, G - 1.0);
  std::map<std::vector<int>, double> cells;
  for (std::size_t r = 0; r < static_cast<std::size_t>(ds.n_records()); ++r) {
    std::vector<int> key(K);
    for (std::size_t k = 0; k < K; ++k) key[k] = part[k][r];
    cells[key] += 1.0;
  }
  total += lf(N);
  for (const auto& [key, c] : cells) total -= lf(c);
  return total;
}

}  // namespace testing_support
