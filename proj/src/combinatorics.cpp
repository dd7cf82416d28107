#include "datagrid/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace datagrid {
namespace {

constexpr std::int64_t kTableSize = std::int64_t{1} << 20;
constexpr double kStirlingThreshold = 1.0e5;

const std::vector<double>& factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(static_cast<std::size_t>(kTableSize));
    long double acc = 0.0L;
    t[0] = 0.0;
    for (std::int64_t i = 1; i < kTableSize; ++i) {
      acc += std::log(static_cast<long double>(i));
      t[static_cast<std::size_t>(i)] = static_cast<double>(acc);
    }
    return t;
  }();
  return table;
}

// Asymptotic tail of log Gamma(y) beyond the (y - 1/2) log y - y + log(2 pi)/2 part.
double stirling_tail(double y) {
  const double inv = 1.0 / y;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)));
}

double log_gamma_large(double y) {
  return (y - 0.5) * std::log(y) - y + 0.5 * std::log(2.0 * std::numbers::pi) + stirling_tail(y);
}

bool is_integral(double x) { return std::floor(x) == x; }

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

double log_factorial(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("log_factorial: negative argument");
  if (n < kTableSize) return factorial_table()[static_cast<std::size_t>(n)];
  return log_gamma_large(static_cast<double>(n) + 1.0);
}

double log_rising_factorial(double x, double n) {
  if (n == 0.0) return 0.0;
  if (x >= kStirlingThreshold) {
    const double y = x + n;
    return (x - 0.5) * std::log1p(n / x) + n * std::log(y) - n + stirling_tail(y) - stirling_tail(x);
  }
  if (is_integral(x) && is_integral(n)) {
    return log_factorial(static_cast<std::int64_t>(x + n) - 1) -
           log_factorial(static_cast<std::int64_t>(x) - 1);
  }
  return std::lgamma(x + n) - std::lgamma(x);
}

double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) throw std::invalid_argument("log_binomial: requires 0 <= k <= n");
  const std::int64_t small = std::min(k, n - k);
  if (small == 0) return 0.0;
  if (n < kTableSize) {
    const auto& t = factorial_table();
    return t[static_cast<std::size_t>(n)] - t[static_cast<std::size_t>(k)] -
           t[static_cast<std::size_t>(n - k)];
  }
  return log_rising_factorial(static_cast<double>(n - small + 1), static_cast<double>(small)) -
         log_factorial(small);
}

double log_multiset(std::int64_t n, double m) {
  if (n < 0 || m < 0.0) throw std::invalid_argument("log_multiset: negative argument");
  if (n == 0 || m == 0.0) return 0.0;
  if (m < static_cast<double>(kTableSize) && static_cast<double>(n) + m < static_cast<double>(kTableSize)) {
    return log_binomial(n + static_cast<std::int64_t>(m), n);
  }
  return log_rising_factorial(m + 1.0, static_cast<double>(n)) - log_factorial(n);
}

CombinatoricsTable& CombinatoricsTable::shared() {
  static CombinatoricsTable table;
  return table;
}

const std::vector<double>& CombinatoricsTable::row_locked(std::int64_t values, std::int64_t max_groups) {
  auto& row = rows_[values];
  if (static_cast<std::int64_t>(row.size()) >= max_groups) return row;

  // log S(n, j) by the recurrence S(n, j) = j S(n-1, j) + S(n-1, j-1), j <= max_groups.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto width = static_cast<std::size_t>(max_groups) + 1;
  std::vector<double> prev(width, kNegInf);
  std::vector<double> cur(width, kNegInf);
  prev[0] = 0.0;  // S(0, 0) = 1
  for (std::int64_t n = 1; n <= values; ++n) {
    cur[0] = kNegInf;
    const std::int64_t top = std::min(n, max_groups);
    for (std::int64_t j = 1; j <= top; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const double stay = prev[uj] == kNegInf ? kNegInf : std::log(static_cast<double>(j)) + prev[uj];
      cur[uj] = log_sum_exp(stay, prev[uj - 1]);
    }
    for (auto j = static_cast<std::size_t>(top) + 1; j < width; ++j) cur[j] = kNegInf;
    std::swap(prev, cur);
  }

  row.assign(static_cast<std::size_t>(max_groups), 0.0);
  double acc = kNegInf;
  for (std::int64_t j = 1; j <= max_groups; ++j) {
    acc = log_sum_exp(acc, prev[static_cast<std::size_t>(j)]);
    row[static_cast<std::size_t>(j - 1)] = acc;
  }
  return row;
}

double CombinatoricsTable::log_partition_count(std::int64_t values, std::int64_t max_groups) {
  if (values < 1 || max_groups < 1) throw std::invalid_argument("log_B: requires V >= 1 and J >= 1");
  max_groups = std::min(max_groups, values);
  if (max_groups == 1) return 0.0;
  std::lock_guard lock(mutex_);
  return row_locked(values, max_groups)[static_cast<std::size_t>(max_groups - 1)];
}

std::vector<double> CombinatoricsTable::log_partition_counts(std::int64_t values, std::int64_t max_groups) {
  if (values < 1 || max_groups < 1) throw std::invalid_argument("log_B: requires V >= 1 and J >= 1");
  const std::int64_t clamped = std::min(max_groups, values);
  std::vector<double> out;
  {
    std::lock_guard lock(mutex_);
    const auto& row = row_locked(values, clamped);
    out.assign(row.begin(), row.begin() + clamped);
  }
  out.resize(static_cast<std::size_t>(max_groups), out.back());
  return out;
}

double log_B(std::int64_t values, std::int64_t max_groups) {
  return CombinatoricsTable::shared().log_partition_count(values, max_groups);
}

}  // namespace datagrid
