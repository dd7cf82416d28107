#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "datagrid/dataset.hpp"
#include "test_support.hpp"

using namespace datagrid;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path;
}

Schema two_vars(char delim = '\t') {
  Schema s;
  s.variables = {{"color", VariableKind::Categorical}, {"size", VariableKind::Numerical}};
  s.delimiter = delim;
  return s;
}

}  // namespace

TEST(Dataset, LoadsDictionaryRanksAndTies) {
  const auto path = write_temp("dg_ds1.tsv", "color\tsize\nred\t3\nblue\t1\nred\t3\n\t2\n");
  const Dataset ds = load_table(path, two_vars());
  EXPECT_EQ(ds.n_records(), 4);
  const auto& color = ds.column(0);
  ASSERT_EQ(color.dictionary.size(), 3u);
  EXPECT_EQ(color.dictionary[0], "red");
  EXPECT_EQ(color.dictionary[2], std::string(kMissingCategory));
  EXPECT_EQ(color.value_counts[0], 2);
  const auto& size = ds.column(1);
  ASSERT_EQ(size.blocks.size(), 3u);
  EXPECT_EQ(size.blocks[2].value, 3.0);
  EXPECT_EQ(size.blocks[2].lo_rank, 3);
  EXPECT_EQ(size.blocks[2].hi_rank, 5);
  EXPECT_EQ(size.ranks[1], 1);
  EXPECT_EQ(size.ranks[3], 2);
  EXPECT_EQ(size.block_of_rank(4), 2);
  EXPECT_DOUBLE_EQ(size.cut_value(1), 1.5);
}

TEST(Dataset, DropsUnparseableNumericalRows) {
  const auto path = write_temp("dg_ds2.csv", "color,size\na,1\nb,oops\nc,\nd,nan\ne,2.5\n");
  const Dataset ds = load_table(path, two_vars(','));
  EXPECT_EQ(ds.n_records(), 2);
  EXPECT_EQ(ds.dropped_rows(), 3);
}

TEST(Dataset, RejectsBadInput) {
  EXPECT_THROW(load_table(write_temp("dg_ds3.tsv", "color\tweight\nred\t1\n"), two_vars()), std::runtime_error);
  EXPECT_THROW(load_table(write_temp("dg_ds4.tsv", "color\tsize\nred\t1\textra\n"), two_vars()), std::runtime_error);
  EXPECT_THROW(load_table(write_temp("dg_ds5.tsv", "color\tsize\nred\tx\n"), two_vars()), std::runtime_error);
  Schema dup;
  dup.variables = {{"a", VariableKind::Categorical}, {"a", VariableKind::Numerical}};
  EXPECT_THROW(dup.validate(), std::invalid_argument);
  EXPECT_THROW(Schema::parse_variable_flag("a:float"), std::invalid_argument);
  EXPECT_EQ(Schema::parse_variable_flag("a:num").kind, VariableKind::Numerical);
}

TEST(Dataset, NoHeaderAndRoundTrip) {
  Schema s = two_vars(',');
  s.has_header = false;
  const auto path = write_temp("dg_ds6.csv", "x,0.1\ny,0.2\r\n\nx,0.3\n");
  const Dataset ds = load_table(path, s);
  EXPECT_EQ(ds.n_records(), 3);
  const auto out = std::filesystem::temp_directory_path() / "dg_ds6_out.csv";
  write_table(ds, out);
  const Dataset again = load_table(out, s);
  EXPECT_EQ(again.column(0).dictionary, ds.column(0).dictionary);
  EXPECT_EQ(again.column(1).raw, ds.column(1).raw);
}

TEST(Dataset, AtomIndexCoversEveryRecordOnce) {
  std::mt19937_64 rng(7);
  const auto ds = testing_support::random_dataset(rng, 200, {VariableKind::Categorical, VariableKind::Numerical}, 6);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& col = ds->column(k);
    std::vector<int> seen(200, 0);
    for (std::int32_t a = 0; a < static_cast<std::int32_t>(col.atom_count()); ++a) {
      for (const auto r : col.records_of(a)) {
        EXPECT_EQ(col.atom[static_cast<std::size_t>(r)], a);
        ++seen[static_cast<std::size_t>(r)];
      }
    }
    for (const int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(Dataset, ValueCountsOrder) {
  const auto ds = testing_support::make_dataset({{"a", VariableKind::Categorical}, {"b", VariableKind::Categorical}},
                                                {{"z", "1"}, {"y", "1"}, {"y", "1"}, {"x", "1"}, {"z", "1"}});
  const auto vc = value_counts(*ds, "a");
  ASSERT_EQ(vc.size(), 3u);
  EXPECT_EQ(vc[0].first, "y");
  EXPECT_EQ(vc[1].first, "z");
  EXPECT_EQ(vc[2].first, "x");
}
