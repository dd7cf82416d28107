#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "datagrid/cost.hpp"
#include "test_support.hpp"

using namespace datagrid;
using testing_support::make_dataset;
using testing_support::oracle_cost;

TEST(Cost, TwoRecordToyNullModel) {
  const auto ds = make_dataset({{"u", VariableKind::Categorical}, {"w", VariableKind::Categorical}}, {{"a", "x"}, {"b", "y"}});
  const auto c = cost(GridModel::null_model(ds));
  EXPECT_NEAR(c.total, 4 * std::log(2.0) + 2 * std::log(3.0), 1e-12);
  EXPECT_NEAR(c.prior_categorical_group_counts, 2 * std::log(2.0), 1e-12);
  EXPECT_NEAR(c.prior_group_value_distribution, 2 * std::log(3.0), 1e-12);
  EXPECT_NEAR(c.likelihood_within_parts, 2 * std::log(2.0), 1e-12);
  EXPECT_EQ(c.prior_cell_distribution, 0.0);
  EXPECT_EQ(c.likelihood_cells, 0.0);
  EXPECT_NEAR(c.component_sum(), c.total, 1e-15);
}

TEST(Cost, MatchesIndependentEvaluation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<VariableKind> kinds = {
        rng() % 2 ? VariableKind::Categorical : VariableKind::Numerical, VariableKind::Categorical,
        rng() % 2 ? VariableKind::Categorical : VariableKind::Numerical};
    const auto ds = testing_support::random_dataset(rng, 1 + rng() % 60, kinds, 9);
    const auto m = testing_support::random_model(rng, ds);
    const double oracle = oracle_cost(m);
    EXPECT_NEAR(cost(m).total, oracle, 1e-9 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(Cost, NumericalPriorIsLogN) {
  const auto ds = make_dataset({{"x", VariableKind::Numerical}, {"y", VariableKind::Numerical}},
                               {{"1", "1"}, {"2", "2"}, {"3", "3"}});
  const auto c = cost(GridModel::null_model(ds));
  EXPECT_NEAR(c.prior_numerical_part_counts, 2 * std::log(3.0), 1e-12);
  EXPECT_NEAR(c.total, testing_support::oracle_cost(GridModel::null_model(ds)), 1e-12);
}

TEST(Cost, DeltasMatchFullRecomputation) {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const auto ds = testing_support::random_dataset(
        rng, 2 + rng() % 30, {VariableKind::Categorical, VariableKind::Numerical, VariableKind::Categorical}, 5);
    const auto m = testing_support::random_model(rng, ds);
    const double base = cost(m).total;
    for (std::size_t k = 0; k < m.n_variables(); ++k) {
      const std::size_t J = m.part_count(k);
      const bool cat = m.partition(k).kind == VariableKind::Categorical;
      for (std::size_t a = 0; a < J; ++a) {
        for (std::size_t b = a + 1; b < J; ++b) {
          if (!cat && b != a + 1) continue;
          EXPECT_NEAR(delta_merge(m, k, a, b), cost(m.merge_parts(k, a, b)).total - base, 1e-9);
          ++checked;
        }
        if (cat) {
          for (const auto v : m.partition(k).group(a).value_ids) {
            for (std::size_t to = 0; to < J; ++to) {
              if (to == a) continue;
              EXPECT_NEAR(delta_move(m, k, v, a, to), cost(m.move_value(k, v, a, to)).total - base, 1e-9);
              ++checked;
            }
          }
        } else if (a + 1 < J) {
          const auto& col = ds->column(k);
          for (const auto& blk : col.blocks) {
            if (blk.lo_rank <= m.partition(k).interval(a).lo_rank || blk.lo_rank >= m.partition(k).interval(a + 1).hi_rank) continue;
            EXPECT_NEAR(delta_boundary(m, k, a, blk.lo_rank), cost(m.move_boundary(k, a, blk.lo_rank)).total - base, 1e-9);
            ++checked;
          }
        }
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(Cost, DeltaArgumentErrors) {
  const auto ds = make_dataset({{"u", VariableKind::Categorical}, {"x", VariableKind::Numerical}},
                               {{"a", "1"}, {"b", "2"}, {"c", "3"}});
  const auto m = GridModel::from_atom_labels(ds, {{0, 1, 1}, {0, 1, 2}});
  EXPECT_THROW(delta_merge(m, 0, 1, 1), std::invalid_argument);
  EXPECT_THROW(delta_merge(m, 1, 0, 2), std::invalid_argument);
  EXPECT_THROW(delta_move(m, 0, 0, 1, 0), std::invalid_argument);
  EXPECT_THROW(delta_move(m, 1, 0, 0, 1), std::invalid_argument);
  EXPECT_THROW(delta_boundary(m, 0, 0, 2), std::invalid_argument);
  EXPECT_THROW(delta_boundary(m, 1, 0, 1), std::invalid_argument);
}
