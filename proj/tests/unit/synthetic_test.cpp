#include <gtest/gtest.h>

#include <cmath>

#include "datagrid/synthetic.hpp"

using namespace datagrid;

namespace {

PlantSpec two_by_two(double noise) {
  PlantSpec s;
  s.variables = {{"a", VariableKind::Categorical, 2, 3}, {"b", VariableKind::Numerical, 2, 5}};
  s.noise = noise;
  s.n_records = 2000;
  s.seed = 42;
  return s;
}

}  // namespace

TEST(Generate, NoNoiseStaysOnDiagonal) {
  const auto p = generate(two_by_two(0.0));
  for (const auto c : p.record_cells) EXPECT_TRUE(c == 0 || c == 3);
  const auto labels_a = p.truth.atom_labels(p.dataset, 0);
  const auto labels_b = p.truth.atom_labels(p.dataset, 1);
  for (std::size_t r = 0; r < static_cast<std::size_t>(p.dataset.n_records()); ++r) {
    EXPECT_EQ(labels_a[static_cast<std::size_t>(p.dataset.column(0).atom[r])],
              labels_b[static_cast<std::size_t>(p.dataset.column(1).atom[r])]);
  }
  EXPECT_EQ(p.dataset.column(1).blocks.size(), 10u);
}

TEST(Generate, FullNoiseIsUniform) {
  const auto d = two_by_two(1.0).cell_distribution();
  for (const double p : d) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(Generate, ExplicitTensorWithinThreeSigma) {
  PlantSpec s;
  s.variables = {{"a", VariableKind::Categorical, 2, 2}, {"b", VariableKind::Categorical, 3, 2}};
  s.cell_probabilities = std::vector<double>{0.05, 0.1, 0.15, 0.2, 0.3, 0.2};
  s.n_records = 100000;
  s.seed = 3;
  const auto p = generate(s);
  std::vector<double> freq(6, 0.0);
  for (const auto c : p.record_cells) freq[c] += 1.0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double q = (*s.cell_probabilities)[i];
    const double sigma = std::sqrt(q * (1 - q) / 100000.0);
    EXPECT_LE(std::abs(freq[i] / 100000.0 - q), 3 * sigma) << i;
  }
}

TEST(Generate, DeterministicForSeed) {
  const auto a = generate(two_by_two(0.3));
  const auto b = generate(two_by_two(0.3));
  EXPECT_EQ(a.record_cells, b.record_cells);
  EXPECT_EQ(a.dataset.column(1).raw, b.dataset.column(1).raw);
  EXPECT_EQ(a.dataset.column(0).dictionary, b.dataset.column(0).dictionary);
}

TEST(Generate, RejectsImpossibleSpecs) {
  auto s = two_by_two(0.1);
  s.variables[0].values_per_part = 0;
  EXPECT_THROW(generate(s), std::invalid_argument);
  s = two_by_two(1.5);
  EXPECT_THROW(generate(s), std::invalid_argument);
  s = two_by_two(0.1);
  s.cell_probabilities = std::vector<double>{0.5, 0.5};
  EXPECT_THROW(generate(s), std::invalid_argument);
  s.cell_probabilities = std::vector<double>{0.5, 0.5, 0.5, -0.5};
  EXPECT_THROW(generate(s), std::invalid_argument);
}

TEST(GroundTruthJson, RoundTrip) {
  const auto p = generate(two_by_two(0.1));
  const auto back = GroundTruth::from_json(p.truth.to_json());
  EXPECT_EQ(back.atom_labels(p.dataset, 0), p.truth.atom_labels(p.dataset, 0));
  EXPECT_EQ(back.atom_labels(p.dataset, 1), p.truth.atom_labels(p.dataset, 1));
}

TEST(Ari, HandValues) {
  EXPECT_EQ(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 2, 2}), 1.0);
  EXPECT_EQ(adjusted_rand_index({0, 1, 2, 3}, {0, 0, 0, 0}), 0.0);
  EXPECT_EQ(adjusted_rand_index({0, 0, 0}, {1, 1, 1}), 1.0);
  // sklearn: adjusted_rand_score([0,0,1,1],[0,0,1,2]) = 0.5714285714285715
  EXPECT_NEAR(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 2}), 0.5714285714285715, 1e-12);
  EXPECT_THROW(adjusted_rand_index({0}, {0, 1}), std::invalid_argument);
}

TEST(Ari, SymmetricAndPermutationInvariant) {
  const std::vector<std::int32_t> a = {0, 0, 1, 2, 2, 2, 1, 0, 3};
  const std::vector<std::int32_t> b = {1, 1, 0, 0, 2, 2, 0, 1, 1};
  std::vector<std::int32_t> relabeled;
  for (const auto x : b) relabeled.push_back(7 - x);
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), adjusted_rand_index(b, a));
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, b), adjusted_rand_index(a, relabeled));
}
