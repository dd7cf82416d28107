#include "datagrid/cost.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "datagrid/combinatorics.hpp"

namespace datagrid {
namespace {

using Key = std::vector<std::int32_t>;

double grid_size_with(const GridModel& model, std::size_t k, std::size_t parts_k) {
  double g = 1.0;
  for (std::size_t d = 0; d < model.n_variables(); ++d) {
    g *= static_cast<double>(d == k ? parts_k : model.part_count(d));
  }
  return g;
}

double cell_prior(std::int64_t n, double g) { return log_multiset(n, g - 1.0); }

// Prior terms that depend on J_k only: log B(V_k, J_k) and the cell-distribution prior.
double part_count_prior_delta(const GridModel& model, std::size_t k, std::size_t new_parts) {
  const std::size_t J = model.part_count(k);
  const std::int64_t n = model.dataset().n_records();
  double d = cell_prior(n, grid_size_with(model, k, new_parts)) - cell_prior(n, grid_size_with(model, k, J));
  if (model.partition(k).kind == VariableKind::Categorical) {
    const auto V = static_cast<std::int64_t>(model.dataset().column(k).dictionary.size());
    d += log_B(V, static_cast<std::int64_t>(new_parts)) - log_B(V, static_cast<std::int64_t>(J));
  }
  return d;
}

// Change of the cell likelihood when `moves` (other-key -> count, keyed with
// coordinate k = origin) leave part `origin` for part `dest`.
double moved_cells_delta(const GridModel& model, std::size_t k, const std::map<Key, std::int64_t>& moves,
                         std::size_t dest) {
  double d = 0.0;
  for (const auto& [key, x] : moves) {
    const std::int64_t n_from = model.cells().at(key);
    Key to_key = key;
    to_key[k] = static_cast<std::int32_t>(dest);
    const std::int64_t n_to = model.cells().at(to_key);
    d -= log_factorial(n_from - x) + log_factorial(n_to + x) - log_factorial(n_from) - log_factorial(n_to);
  }
  return d;
}

}  // namespace

double group_value_term(std::int64_t part_total, std::int64_t values_in_part) {
  if (values_in_part <= 0) return 0.0;
  return log_binomial(part_total + values_in_part - 1, values_in_part - 1);
}

CostBreakdown cost(const GridModel& model) {
  const Dataset& ds = model.dataset();
  const std::int64_t n = ds.n_records();
  CostBreakdown c;
  for (std::size_t k = 0; k < model.n_variables(); ++k) {
    const auto& col = ds.column(k);
    const std::size_t J = model.part_count(k);
    for (std::size_t j = 0; j < J; ++j) c.likelihood_within_parts += log_factorial(model.part_total(k, j));
    if (col.kind == VariableKind::Numerical) {
      c.prior_numerical_part_counts += std::log(static_cast<double>(n));
      continue;
    }
    const auto V = static_cast<std::int64_t>(col.dictionary.size());
    c.prior_categorical_group_counts += std::log(static_cast<double>(V));
    c.prior_partition_choice += log_B(V, static_cast<std::int64_t>(J));
    for (std::size_t j = 0; j < J; ++j) {
      c.prior_group_value_distribution += group_value_term(model.part_total(k, j), model.part_atom_count(k, j));
    }
    for (const auto nv : col.value_counts) c.likelihood_within_parts -= log_factorial(nv);
  }
  c.prior_cell_distribution = cell_prior(n, model.grid_size());
  c.likelihood_cells = log_factorial(n);
  const auto& cells = model.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) c.likelihood_cells -= log_factorial(cells.count(i));
  c.total = c.component_sum();
  return c;
}

double delta_merge(const GridModel& model, std::size_t k, std::size_t a, std::size_t b) {
  if (k >= model.n_variables()) throw std::invalid_argument("delta_merge: variable index out of range");
  const std::size_t J = model.part_count(k);
  if (a >= J || b >= J) throw std::invalid_argument("delta_merge: part index out of range");
  if (a == b) throw std::invalid_argument("delta_merge: cannot merge a part with itself");
  const bool categorical = model.partition(k).kind == VariableKind::Categorical;
  if (!categorical && (a > b ? a - b : b - a) != 1) throw std::invalid_argument("delta_merge: intervals must be adjacent");

  const std::int64_t na = model.part_total(k, a);
  const std::int64_t nb = model.part_total(k, b);
  double d = part_count_prior_delta(model, k, J - 1);
  d += log_factorial(na + nb) - log_factorial(na) - log_factorial(nb);
  if (categorical) {
    const std::int64_t ma = model.part_atom_count(k, a);
    const std::int64_t mb = model.part_atom_count(k, b);
    d += group_value_term(na + nb, ma + mb) - group_value_term(na, ma) - group_value_term(nb, mb);
  }
  // Only cell pairs (a, r), (b, r) that are both non-empty change the likelihood.
  const auto& cells = model.cells();
  Key partner(model.n_variables());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = cells.coords(i);
    if (static_cast<std::size_t>(key[k]) != a) continue;
    partner.assign(key.begin(), key.end());
    partner[k] = static_cast<std::int32_t>(b);
    const std::int64_t x = cells.count(i);
    const std::int64_t y = cells.at(partner);
    if (y == 0) continue;
    d -= log_factorial(x + y) - log_factorial(x) - log_factorial(y);
  }
  return d;
}

double delta_move(const GridModel& model, std::size_t k, std::int32_t value_id, std::size_t from, std::size_t to) {
  if (k >= model.n_variables()) throw std::invalid_argument("delta_move: variable index out of range");
  if (model.partition(k).kind != VariableKind::Categorical) throw std::invalid_argument("delta_move: variable is numerical");
  const std::size_t J = model.part_count(k);
  if (from >= J || to >= J) throw std::invalid_argument("delta_move: part index out of range");
  if (from == to) throw std::invalid_argument("delta_move: source and destination are the same part");
  const auto& col = model.dataset().column(k);
  if (value_id < 0 || static_cast<std::size_t>(value_id) >= col.dictionary.size() ||
      model.part_of_atom(k, value_id) != static_cast<std::int32_t>(from)) {
    throw std::invalid_argument("delta_move: value is not in the source part");
  }

  const std::int64_t nv = col.atom_frequency(value_id);
  const std::int64_t nf = model.part_total(k, from);
  const std::int64_t nt = model.part_total(k, to);
  const std::int64_t mf = model.part_atom_count(k, from);
  const std::int64_t mt = model.part_atom_count(k, to);

  double d = 0.0;
  if (mf == 1) d += part_count_prior_delta(model, k, J - 1);
  d += group_value_term(nf - nv, mf - 1) + group_value_term(nt + nv, mt + 1) - group_value_term(nf, mf) -
       group_value_term(nt, mt);
  d += log_factorial(nf - nv) + log_factorial(nt + nv) - log_factorial(nf) - log_factorial(nt);

  std::map<Key, std::int64_t> moves;
  Key key(model.n_variables());
  for (const auto rec : col.records_of(value_id)) {
    for (std::size_t q = 0; q < key.size(); ++q) key[q] = model.part_of_record(q, static_cast<std::size_t>(rec));
    ++moves[key];
  }
  return d + moved_cells_delta(model, k, moves, to);
}

double delta_boundary(const GridModel& model, std::size_t k, std::size_t boundary, std::int64_t new_rank) {
  if (k >= model.n_variables()) throw std::invalid_argument("delta_boundary: variable index out of range");
  if (model.partition(k).kind != VariableKind::Numerical) throw std::invalid_argument("delta_boundary: variable is categorical");
  if (boundary + 1 >= model.part_count(k)) throw std::invalid_argument("delta_boundary: boundary index out of range");
  const auto& left = model.partition(k).interval(boundary);
  const auto& right = model.partition(k).interval(boundary + 1);
  if (new_rank <= left.lo_rank || new_rank >= right.hi_rank) {
    throw std::invalid_argument("delta_boundary: the move would empty an interval");
  }
  const auto& col = model.dataset().column(k);
  const auto b_new = col.block_of_rank(new_rank);
  if (col.blocks[static_cast<std::size_t>(b_new)].lo_rank != new_rank) {
    throw std::invalid_argument("delta_boundary: new boundary splits a tie-block");
  }
  const auto b_old = col.block_of_rank(right.lo_rank);
  if (b_new == b_old) return 0.0;
  const std::size_t origin = b_new < b_old ? boundary : boundary + 1;
  const std::size_t dest = b_new < b_old ? boundary + 1 : boundary;

  std::map<Key, std::int64_t> moves;
  std::int64_t moved = 0;
  Key key(model.n_variables());
  for (auto b = std::min(b_new, b_old); b < std::max(b_new, b_old); ++b) {
    for (const auto rec : col.records_of(b)) {
      for (std::size_t q = 0; q < key.size(); ++q) key[q] = model.part_of_record(q, static_cast<std::size_t>(rec));
      ++moves[key];
      ++moved;
    }
  }
  const std::int64_t no = model.part_total(k, origin);
  const std::int64_t nd = model.part_total(k, dest);
  double d = log_factorial(no - moved) + log_factorial(nd + moved) - log_factorial(no) - log_factorial(nd);
  return d + moved_cells_delta(model, k, moves, dest);
}

}  // namespace datagrid
