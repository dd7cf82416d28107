#include <gtest/gtest.h>

#include <random>

#include "datagrid/grid.hpp"
#include "test_support.hpp"

using namespace datagrid;
using testing_support::make_dataset;

namespace {

std::shared_ptr<const Dataset> small() {
  return make_dataset({{"c", VariableKind::Categorical}, {"x", VariableKind::Numerical}},
                      {{"a", "1"}, {"b", "2"}, {"a", "2"}, {"c", "3"}, {"b", "4"}, {"a", "5"}});
}

}  // namespace

TEST(GridModel, NullModelHasOneCell) {
  const auto m = GridModel::null_model(small());
  EXPECT_EQ(m.total_parts(), 2u);
  ASSERT_EQ(m.cells().size(), 1u);
  EXPECT_EQ(m.cells().count(0), 6);
  EXPECT_DOUBLE_EQ(m.grid_size(), 1.0);
  EXPECT_TRUE(m.consistent_with_rebuild());
}

TEST(GridModel, InitialModelRespectsTieBlocks) {
  const auto ds = small();
  const auto m = GridModel::initial_model(ds, 3);
  EXPECT_LE(m.part_count(0), 3u);
  EXPECT_LE(m.part_count(1), 3u);
  for (std::size_t j = 0; j < m.part_count(1); ++j) {
    const auto& iv = m.partition(1).interval(j);
    const auto& col = ds->column(1);
    EXPECT_EQ(col.blocks[static_cast<std::size_t>(col.block_of_rank(iv.lo_rank))].lo_rank, iv.lo_rank);
  }
  EXPECT_TRUE(m.consistent_with_rebuild());
}

TEST(GridModel, FromPartitionsValidates) {
  const auto ds = small();
  VariablePartition c{"c", VariableKind::Categorical, {ValueGroup{{0, 1}}, ValueGroup{{2}}}};
  // ranks 2 and 3 share the value 2: a cut at rank 3 splits the tie-block
  VariablePartition bad{"x", VariableKind::Numerical, {Interval{1, 3}, Interval{3, 7}}};
  EXPECT_THROW(GridModel::from_partitions(ds, {c, bad}), std::invalid_argument);
  VariablePartition gap{"x", VariableKind::Numerical, {Interval{1, 2}, Interval{4, 7}}};
  EXPECT_THROW(GridModel::from_partitions(ds, {c, gap}), std::invalid_argument);
  VariablePartition missing{"c", VariableKind::Categorical, {ValueGroup{{0}}, ValueGroup{{2}}}};
  VariablePartition ok{"x", VariableKind::Numerical, {Interval{1, 2}, Interval{2, 7}}};
  EXPECT_THROW(GridModel::from_partitions(ds, {missing, ok}), std::invalid_argument);
  const auto m = GridModel::from_partitions(ds, {c, ok});
  EXPECT_EQ(m.part_total(0, 0), 5);
  EXPECT_EQ(m.part_total(1, 0), 1);
  EXPECT_EQ(m.part_label(1, 0), "[1;1.5)");
  EXPECT_EQ(m.part_label(1, 1), "[1.5;5]");
  EXPECT_EQ(m.part_label(0, 0), "{a,b}");
}

TEST(GridModel, MergeMoveBoundaryKeepCountsConsistent) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ds = testing_support::random_dataset(
        rng, 5 + rng() % 40, {VariableKind::Categorical, VariableKind::Numerical, VariableKind::Categorical}, 7);
    GridModel m = testing_support::random_model(rng, ds);
    for (int step = 0; step < 10; ++step) {
      const std::size_t k = rng() % m.n_variables();
      const std::size_t J = m.part_count(k);
      const int op = static_cast<int>(rng() % 3);
      if (op == 0 && J >= 2) {
        const std::size_t a = rng() % (J - 1);
        const std::size_t b = m.partition(k).kind == VariableKind::Numerical ? a + 1 : a + 1 + rng() % (J - 1 - a);
        m = m.merge_parts(k, b, a);
      } else if (op == 1 && m.partition(k).kind == VariableKind::Categorical && J >= 2) {
        const std::size_t from = rng() % J;
        const auto& ids = m.partition(k).group(from).value_ids;
        const std::int32_t v = ids[rng() % ids.size()];
        std::size_t to = rng() % J;
        if (to == from) to = (to + 1) % J;
        m = m.move_value(k, v, from, to);
      } else if (op == 2 && m.partition(k).kind == VariableKind::Numerical && J >= 2) {
        const std::size_t boundary = rng() % (J - 1);
        const auto& l = m.partition(k).interval(boundary);
        const auto& r = m.partition(k).interval(boundary + 1);
        const auto& col = ds->column(k);
        std::vector<std::int64_t> edges;
        for (const auto& blk : col.blocks) {
          if (blk.lo_rank > l.lo_rank && blk.lo_rank < r.hi_rank) edges.push_back(blk.lo_rank);
        }
        m = m.move_boundary(k, boundary, edges[rng() % edges.size()]);
      }
      ASSERT_TRUE(m.consistent_with_rebuild());
      ASSERT_EQ(m.cells().total(), ds->n_records());
    }
  }
}

TEST(GridModel, MoveValueDeletesEmptiedGroup) {
  const auto ds = small();
  VariablePartition c{"c", VariableKind::Categorical, {ValueGroup{{0}}, ValueGroup{{1}}, ValueGroup{{2}}}};
  VariablePartition x{"x", VariableKind::Numerical, {Interval{1, 7}}};
  const auto m = GridModel::from_partitions(ds, {c, x});
  const auto moved = m.move_value(0, 1, 1, 2);
  ASSERT_EQ(moved.part_count(0), 2u);
  EXPECT_EQ(moved.partition(0).group(1).value_ids, (std::vector<std::int32_t>{1, 2}));
  EXPECT_THROW(m.move_value(0, 0, 1, 2), std::invalid_argument);
}

TEST(GridModel, MergeRejectsNonAdjacentIntervals) {
  const auto ds = small();
  VariablePartition c{"c", VariableKind::Categorical, {ValueGroup{{0, 1, 2}}}};
  VariablePartition x{"x", VariableKind::Numerical, {Interval{1, 2}, Interval{2, 4}, Interval{4, 7}}};
  const auto m = GridModel::from_partitions(ds, {c, x});
  EXPECT_THROW(m.merge_parts(1, 0, 2), std::invalid_argument);
  const auto merged = m.merge_parts(1, 2, 1);
  EXPECT_EQ(merged.partition(1).interval(1), (Interval{2, 7}));
}

TEST(CellTable, FromEntriesSumsAndSorts) {
  const auto t = CellTable::from_entries(2, {1, 0, 0, 1, 1, 0, 0, 0}, {2, 1, 3, 0});
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.at(std::vector<std::int32_t>{1, 0}), 5);
  EXPECT_EQ(t.at(std::vector<std::int32_t>{0, 1}), 1);
  EXPECT_EQ(t.at(std::vector<std::int32_t>{0, 0}), 0);
  EXPECT_THROW(CellTable::from_entries(1, {0}, {-1}), std::logic_error);
}
