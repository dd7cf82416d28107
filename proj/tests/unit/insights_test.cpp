#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "datagrid/cost.hpp"
#include "datagrid/insights.hpp"
#include "test_support.hpp"

using namespace datagrid;

namespace {

// One value per part: a model whose cells are exactly the given counts.
GridModel grid_from_counts(const std::vector<std::size_t>& shape, const std::vector<int>& counts) {
  std::vector<std::pair<std::string, VariableKind>> vars;
  for (std::size_t k = 0; k < shape.size(); ++k) vars.emplace_back("v" + std::to_string(k), VariableKind::Categorical);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    std::vector<std::string> row(shape.size());
    std::size_t rest = cell;
    for (std::size_t k = shape.size(); k-- > 0;) {
      row[k] = "p" + std::to_string(rest % shape[k]);
      rest /= shape[k];
    }
    for (int i = 0; i < counts[cell]; ++i) rows.push_back(row);
  }
  const auto ds = testing_support::make_dataset(vars, rows);
  std::vector<std::vector<std::int32_t>> labels;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    const auto& col = ds->column(k);
    std::vector<std::int32_t> lab;
    for (const auto& v : col.dictionary) lab.push_back(std::stoi(v.substr(1)));
    labels.push_back(lab);
  }
  return GridModel::from_atom_labels(ds, labels);
}

double plugin_mi(const std::vector<std::vector<double>>& t) {
  double n = 0.0;
  std::vector<double> r(t.size(), 0.0);
  std::vector<double> c(t[0].size(), 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      n += t[i][j];
      r[i] += t[i][j];
      c[j] += t[i][j];
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      if (t[i][j] > 0) mi += t[i][j] / n * std::log(t[i][j] * n / (r[i] * c[j]));
    }
  }
  return mi;
}

}  // namespace

TEST(Cmi, IndependenceIsExactlyZero) {
  const auto m = grid_from_counts({2, 2}, {1, 1, 1, 1});
  const auto x = cmi_matrix(m, "v0", "v1");
  for (const double v : x.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(x.total_mi, 0.0);
}

TEST(Cmi, DiagonalGivesLog2) {
  const auto m = grid_from_counts({2, 2}, {2, 0, 0, 2});
  const auto x = cmi_matrix(m, "v0", "v1");
  EXPECT_NEAR(x.at(0, 0), 0.5 * std::log(2.0), 1e-15);
  EXPECT_NEAR(x.at(1, 1), 0.5 * std::log(2.0), 1e-15);
  EXPECT_EQ(x.at(0, 1), 0.0);
  EXPECT_NEAR(x.total_mi, std::log(2.0), 1e-12);
}

TEST(Cmi, DeficitIsNegative) {
  const auto m = grid_from_counts({2, 2}, {5, 1, 1, 5});
  const auto x = cmi_matrix(m, "v0", "v1");
  EXPECT_LT(x.at(0, 1), 0.0);
  EXPECT_GT(x.at(0, 0), 0.0);
}

TEST(Cmi, SliceTotalsMatchPluginMi) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> counts(3 * 4 * 2);
    for (auto& c : counts) c = static_cast<int>(rng() % 7);
    counts[0] = std::max(counts[0], 1);
    counts[1] = std::max(counts[1], 1);
    const auto m = grid_from_counts({3, 4, 2}, counts);
    for (std::size_t s = 0; s < m.part_count(2); ++s) {
      std::vector<std::vector<double>> t(m.part_count(0), std::vector<double>(m.part_count(1), 0.0));
      const auto& cells = m.cells();
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto key = cells.coords(i);
        if (static_cast<std::size_t>(key[2]) == s) t[key[0]][key[1]] += static_cast<double>(cells.count(i));
      }
      double tot = 0.0;
      for (const auto& row : t) for (const double v : row) tot += v;
      if (tot == 0.0) {
        EXPECT_THROW(cmi_matrix(m, "v0", "v1", {{"v2", s}}), std::invalid_argument);
        continue;
      }
      const auto x = cmi_matrix(m, "v0", "v1", {{"v2", s}});
      EXPECT_NEAR(x.total_mi, plugin_mi(t), 1e-9);
      EXPECT_GE(x.total_mi, -1e-12);
      const auto f = frequency_matrix(m, "v0", "v1", {{"v2", s}});
      EXPECT_EQ(f.slice_total, tot);
    }
  }
}

TEST(Cmi, SelectionErrors) {
  const auto m = grid_from_counts({2, 2, 2}, {1, 1, 1, 1, 1, 1, 1, 1});
  EXPECT_THROW(cmi_matrix(m, "v0", "v1"), std::invalid_argument);
  EXPECT_THROW(cmi_matrix(m, "v0", "v0", {{"v2", 0}}), std::invalid_argument);
  EXPECT_THROW(cmi_matrix(m, "v0", "v1", {{"v2", 5}}), std::invalid_argument);
  EXPECT_THROW(cmi_matrix(m, "v0", "v1", {{"v1", 0}, {"v2", 0}}), std::invalid_argument);
}

TEST(Contrast, MatchesBruteForceFormula) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> counts(8);
    for (auto& c : counts) c = 1 + static_cast<int>(rng() % 9);
    const auto m = grid_from_counts({2, 2, 2}, counts);
    double N = 0.0;
    for (const int c : counts) N += c;
    double full = 0.0;
    double summed = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
      const auto x = contrast_matrix(m, "v0", s, "v1", "v2");
      double ns = 0.0;
      for (std::size_t i = 0; i < 4; ++i) ns += counts[s * 4 + i];
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          const double nsij = counts[s * 4 + i * 2 + j];
          const double nij = counts[i * 2 + j] + counts[4 + i * 2 + j];
          const double expect = nsij / N * std::log((nsij / N) / ((nij / N) * (ns / N)));
          EXPECT_NEAR(x.at(i, j), expect, 1e-12);
          full += expect;
        }
      }
      summed += x.total_mi;
    }
    EXPECT_NEAR(summed, full, 1e-9);
  }
}

TEST(Contrast, SinglePartTargetAndIndependentTargetAreZero) {
  const auto one = grid_from_counts({1, 2, 2}, {3, 1, 2, 5});
  const auto x = contrast_matrix(one, "v0", 0, "v1", "v2");
  for (const double v : x.values) EXPECT_EQ(v, 0.0);
  // both target parts share the (row, col) distribution
  const auto same = grid_from_counts({2, 2, 2}, {1, 2, 3, 4, 2, 4, 6, 8});
  const auto y = contrast_matrix(same, "v0", 1, "v1", "v2");
  for (const double v : y.values) EXPECT_NEAR(v, 0.0, 1e-15);
  EXPECT_THROW(contrast_matrix(same, "v0", 0, "v0", "v2"), std::invalid_argument);
  EXPECT_THROW(contrast_matrix(same, "v0", 3, "v1", "v2"), std::invalid_argument);
}

TEST(Typicality, MatchesFullRecomputationAndTwoClusterReduction) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = testing_support::random_dataset(rng, 30 + rng() % 60, {VariableKind::Categorical, VariableKind::Numerical}, 8);
    if (ds->column(0).dictionary.size() < 2) continue;
    const auto m = testing_support::random_model(rng, ds);
    const std::size_t J = m.part_count(0);
    if (J < 2) {
      EXPECT_THROW(typicality(m, "x0", 0), std::invalid_argument);
      continue;
    }
    const double base = cost(m).total;
    const auto N = static_cast<double>(ds->n_records());
    for (std::size_t c = 0; c < J; ++c) {
      const auto r = typicality(m, "x0", c);
      ASSERT_EQ(r.entries.size(), m.partition(0).group(c).value_ids.size());
      for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_GE(r.entries[i - 1].tau, r.entries[i].tau);
      for (const auto& e : r.entries) {
        double sum = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
          if (j == c) continue;
          sum += m.part_total(0, j) / N * (cost(m.move_value(0, e.value_id, c, j)).total - base);
        }
        const double oracle = sum / (1.0 - m.part_total(0, c) / N);
        EXPECT_NEAR(e.tau, oracle, 1e-9);
        if (J == 2) EXPECT_NEAR(e.tau, cost(m.move_value(0, e.value_id, c, 1 - c)).total - base, 1e-9);
      }
    }
  }
}

TEST(Typicality, Errors) {
  const auto ds = testing_support::make_dataset({{"c", VariableKind::Categorical}, {"x", VariableKind::Numerical}},
                                                {{"a", "1"}, {"b", "2"}});
  const auto null = GridModel::null_model(ds);
  EXPECT_THROW(typicality(null, "c", 0), std::invalid_argument);
  EXPECT_THROW(typicality(null, "x", 0), std::invalid_argument);
}

TEST(Csv, MatrixAndRankingExport) {
  const auto m = grid_from_counts({2, 2}, {2, 0, 0, 2});
  const auto csv = to_csv(frequency_matrix(m, "v0", "v1"));
  EXPECT_EQ(csv, "v0\\v1,{p0},{p1}\n{p0},2,0\n{p1},0,2\n");
  TypicalityRanking r{"v", 0, {{0, "a,b", 3, 1.5}, {1, "c", 1, 0.25}}};
  EXPECT_EQ(to_csv(r, 1), "rank,value,frequency,typicality\n1,\"a,b\",3,1.5\n");
}
