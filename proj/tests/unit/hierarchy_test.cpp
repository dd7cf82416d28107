#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "datagrid/cost.hpp"
#include "datagrid/hierarchy.hpp"
#include "test_support.hpp"

using namespace datagrid;

TEST(InformationRatio, EndpointsAndMidpoint) {
  EXPECT_EQ(information_ratio(80.0, 80.0, 100.0), 1.0);
  EXPECT_EQ(information_ratio(100.0, 80.0, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(information_ratio(90.0, 80.0, 100.0), 0.5);
  EXPECT_EQ(information_ratio(105.0, 80.0, 100.0), 0.0);
  EXPECT_EQ(information_ratio(70.0, 80.0, 100.0), 1.0);
  EXPECT_EQ(information_ratio(5.0, 100.0, 100.0), 1.0);
}

TEST(Hierarchy, NullModelGivesNoRecords) {
  std::mt19937_64 rng(1);
  const auto ds = testing_support::random_dataset(rng, 20, {VariableKind::Categorical, VariableKind::Numerical}, 4);
  const auto h = build_hierarchy(GridModel::null_model(ds));
  EXPECT_TRUE(h.records.empty());
  EXPECT_EQ(pareto_curve(h).size(), 1u);
}

TEST(Hierarchy, RecordsReplayAndMatchRecomputation) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = testing_support::random_dataset(
        rng, 10 + rng() % 60, {VariableKind::Categorical, VariableKind::Numerical, VariableKind::Categorical}, 6);
    const auto m = testing_support::random_model(rng, ds);
    const auto h = build_hierarchy(m);
    EXPECT_EQ(h.records.size(), m.total_parts() - m.n_variables());
    GridModel cur = m;
    double prev = h.cost_opt;
    for (std::size_t s = 0; s < h.records.size(); ++s) {
      const auto& r = h.records[s];
      EXPECT_EQ(r.step, static_cast<int>(s) + 1);
      const auto next = cur.merge_parts(r.variable_index, r.a, r.b);
      EXPECT_NEAR(r.delta, cost(next).total - cost(cur).total, 1e-9);
      EXPECT_NEAR(r.cost_after, prev + r.delta, 1e-9);
      EXPECT_NEAR(r.raw_info_ratio_after, information_ratio(r.cost_after, h.cost_opt, h.cost_null), 1e-12);
      EXPECT_LE(r.info_ratio_after, r.raw_info_ratio_after);
      if (s > 0) EXPECT_LE(r.info_ratio_after, h.records[s - 1].info_ratio_after);
      prev = r.cost_after;
      cur = next;
    }
    EXPECT_NEAR(cost(cur).total, h.cost_null, 1e-9);
    EXPECT_EQ(model_after(h, h.records.size()).partitions(), cur.partitions());
    if (!h.records.empty()) EXPECT_EQ(h.records.back().info_ratio_after, 0.0);
  }
}

TEST(Hierarchy, FreezeKeepsVariable) {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 60; ++i) rows.push_back({"a" + std::to_string(i % 5), "b" + std::to_string((i * 7) % 4)});
  const auto ds = testing_support::make_dataset({{"x0", VariableKind::Categorical}, {"x1", VariableKind::Categorical}}, rows);
  const auto full = GridModel::from_atom_labels(ds, {{0, 1, 2, 3, 4}, {0, 1, 2, 3}});
  const auto h = build_hierarchy(full, {"x1"});
  EXPECT_EQ(h.records.size(), 4u);
  for (const auto& r : h.records) EXPECT_EQ(r.variable, "x0");
  EXPECT_EQ(model_after(h, h.records.size()).part_count(1), 4u);
  EXPECT_THROW(steps_for(h, PartsPerVariable{{{"x1", 1}}}), std::invalid_argument);
  EXPECT_EQ(steps_for(h, PartsPerVariable{{{"x1", 4}, {"x0", 1}}}), 4u);
}

TEST(Hierarchy, GranularityTargets) {
  std::mt19937_64 rng(31);
  const auto ds = testing_support::random_dataset(rng, 80, {VariableKind::Categorical, VariableKind::Numerical}, 8);
  std::vector<std::int32_t> l0(ds->column(0).atom_count());
  std::vector<std::int32_t> l1(ds->column(1).atom_count());
  for (std::size_t i = 0; i < l0.size(); ++i) l0[i] = static_cast<std::int32_t>(i);
  for (std::size_t i = 0; i < l1.size(); ++i) l1[i] = static_cast<std::int32_t>(i);
  const auto m = GridModel::from_atom_labels(ds, {l0, l1});
  const auto h = build_hierarchy(m);
  ASSERT_GT(h.records.size(), 3u);
  EXPECT_EQ(info_ratio_after(h, steps_for(h, InfoRatio{1.0})), 1.0);
  EXPECT_EQ(steps_for(h, InfoRatio{0.0}), h.records.size());
  EXPECT_EQ(model_at(h, TotalParts{m.total_parts()}).partitions(), m.partitions());
  EXPECT_EQ(model_at(h, TotalParts{4}).total_parts(), 4u);
  EXPECT_EQ(steps_for(h, TotalParts{2}), h.records.size());
  EXPECT_THROW(steps_for(h, TotalParts{1}), std::invalid_argument);
  const auto per = model_at(h, PartsPerVariable{{{"x0", 2}}});
  EXPECT_LE(per.part_count(0), 2u);
  EXPECT_THROW(steps_for(h, PartsPerVariable{{{"x0", l0.size() + 1}}}), std::invalid_argument);
  EXPECT_THROW(steps_for(h, PartsPerVariable{{{"zz", 1}}}), std::invalid_argument);
  EXPECT_THROW(steps_for(h, InfoRatio{1.5}), std::invalid_argument);
  const double r = 0.6;
  const auto s = steps_for(h, InfoRatio{r});
  EXPECT_GE(info_ratio_after(h, s), r);
  for (std::size_t t = s + 1; t <= h.records.size(); ++t) EXPECT_LT(info_ratio_after(h, t), r);

  const auto curve = pareto_curve(h);
  ASSERT_EQ(curve.size(), h.records.size() + 1);
  EXPECT_EQ(curve.front().first, m.total_parts());
  EXPECT_EQ(curve.front().second, 1.0);
  EXPECT_EQ(curve.back().first, 2u);
  EXPECT_EQ(curve.back().second, 0.0);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_EQ(curve[i].first + 1, curve[i - 1].first);
}

TEST(Hierarchy, PartitionReplayNeedsNoDataset) {
  std::mt19937_64 rng(5);
  const auto ds = testing_support::random_dataset(rng, 40, {VariableKind::Categorical, VariableKind::Numerical}, 6);
  const auto m = testing_support::random_model(rng, ds);
  auto h = build_hierarchy(m);
  const auto expected = model_after(h, h.records.size() / 2).partitions();
  h.dataset.reset();
  EXPECT_EQ(partitions_after(h, h.records.size() / 2), expected);
  EXPECT_THROW(model_after(h, 0), std::logic_error);
}
