#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace datagrid {

/// Natural log of n!. Tabulated below 2^20, Stirling-series beyond.
double log_factorial(std::int64_t n);

/// log C(n, k); throws std::invalid_argument unless 0 <= k <= n.
double log_binomial(std::int64_t n, std::int64_t k);

/// log C(n + m, n) for a possibly huge real-valued m (m must be a
/// non-negative integer value). Used for the cell-distribution prior where
/// m = G - 1 and G is the product of the part counts.
double log_multiset(std::int64_t n, double m);

/// log(Gamma(x + n) / Gamma(x)) for x >= 1, n >= 0.
double log_rising_factorial(double x, double n);

/// Cache of log B(V, J), B being the number of partitions of V labelled
/// values into at most J non-empty groups (sum of Stirling numbers of the
/// second kind S(V, 1..J)). Safe for concurrent use.
class CombinatoricsTable {
 public:
  /// log B(V, J); J is clamped to V. V >= 1, J >= 1.
  double log_partition_count(std::int64_t values, std::int64_t max_groups);

  /// log B(V, J) for J = 1..max_groups (index J-1).
  std::vector<double> log_partition_counts(std::int64_t values, std::int64_t max_groups);

  static CombinatoricsTable& shared();

 private:
  const std::vector<double>& row_locked(std::int64_t values, std::int64_t max_groups);

  std::mutex mutex_;
  // values -> cumulative log B(V, 1..computed J)
  std::unordered_map<std::int64_t, std::vector<double>> rows_;
};

/// Convenience wrapper over the shared table.
double log_B(std::int64_t values, std::int64_t max_groups);

}  // namespace datagrid
