#include "work_grid.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "datagrid/combinatorics.hpp"
#include "datagrid/cost.hpp"

namespace datagrid::detail {
namespace {

// Categorical pair caches are dense; beyond this many slots the merge deltas
// are evaluated on demand instead.
constexpr std::uint64_t kMaxDenseSlots = 4096;

}  // namespace

WorkGrid::WorkGrid(const GridModel& model, std::vector<bool> frozen)
    : dataset_(model.dataset_ptr()),
      K_(model.n_variables()),
      N_(model.dataset().n_records()),
      frozen_(std::move(frozen)) {
  if (frozen_.empty()) frozen_.assign(K_, false);
  if (frozen_.size() != K_) throw std::invalid_argument("WorkGrid: frozen mask size differs from K");
  const Dataset& ds = *dataset_;

  radix_.resize(K_);
  stride_.assign(K_, 1);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 63;
  std::uint64_t span = 1;
  for (std::size_t k = 0; k < K_; ++k) {
    radix_[k] = model.part_count(k);
    if (span > kLimit / radix_[k]) {
      throw std::length_error("grid too large for the optimizer: reduce max_initial_parts");
    }
    span *= radix_[k];
  }
  for (std::size_t k = K_; k-- > 1;) stride_[k - 1] = stride_[k] * radix_[k];

  std::size_t max_atoms = 0;
  for (std::size_t k = 0; k < K_; ++k) max_atoms = std::max(max_atoms, ds.column(k).atom_count());
  lf_.resize(static_cast<std::size_t>(N_) + max_atoms + 2);
  for (std::size_t i = 0; i < lf_.size(); ++i) lf_[i] = log_factorial(static_cast<std::int64_t>(i));

  kind_.resize(K_);
  log_b_.resize(K_);
  slot_of_atom_.resize(K_);
  slot_total_.resize(K_);
  slot_atoms_.resize(K_);
  live_.resize(K_);
  slot_values_.resize(K_);
  block_begin_.resize(K_);
  block_end_.resize(K_);
  slot_cells_.resize(K_);
  pair_cache_.resize(K_);
  cache_valid_.assign(K_, false);

  for (std::size_t k = 0; k < K_; ++k) {
    const Column& col = ds.column(k);
    const std::size_t J = model.part_count(k);
    kind_[k] = col.kind;
    slot_of_atom_[k] = model.atom_parts(k);
    slot_total_[k] = model.part_totals(k);
    slot_atoms_[k].resize(J);
    live_[k].resize(J);
    std::iota(live_[k].begin(), live_[k].end(), 0);
    slot_cells_[k].resize(J);
    for (std::size_t j = 0; j < J; ++j) slot_atoms_[k][j] = model.part_atom_count(k, j);
    if (col.kind == VariableKind::Categorical) {
      log_b_[k] = CombinatoricsTable::shared().log_partition_counts(static_cast<std::int64_t>(col.dictionary.size()),
                                                                    static_cast<std::int64_t>(J));
      slot_values_[k].resize(J);
      for (std::size_t j = 0; j < J; ++j) slot_values_[k][j] = model.partition(k).group(j).value_ids;
    } else {
      block_begin_[k].resize(J);
      block_end_[k].resize(J);
      for (std::size_t j = 0; j < J; ++j) std::tie(block_begin_[k][j], block_end_[k][j]) = model.interval_blocks(k, j);
    }
  }

  const auto& cells = model.cells();
  cells_.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto coords = cells.coords(c);
    Key key = 0;
    for (std::size_t k = 0; k < K_; ++k) key += static_cast<Key>(coords[k]) * stride_[k];
    cells_.emplace(key, cells.count(c));
    for (std::size_t k = 0; k < K_; ++k) slot_cells_[k][static_cast<std::size_t>(coords[k])].insert(key);
  }
  cost_ = datagrid::cost(model).total;
}

std::size_t WorkGrid::part_index(std::size_t k, std::int32_t slot) const {
  const auto& live = live_[k];
  return static_cast<std::size_t>(std::lower_bound(live.begin(), live.end(), slot) - live.begin());
}

GridModel WorkGrid::to_model() const { return GridModel::from_atom_labels(dataset_, slot_of_atom_); }

double WorkGrid::cell_prior(double grid) const { return log_multiset(N_, grid - 1.0); }

double WorkGrid::part_drop_prior(std::size_t k) const {
  double g = 1.0;
  double g_after = 1.0;
  for (std::size_t d = 0; d < K_; ++d) {
    const auto j = static_cast<double>(live_[d].size());
    g *= j;
    g_after *= d == k ? j - 1.0 : j;
  }
  double delta = cell_prior(g_after) - cell_prior(g);
  if (kind_[k] == VariableKind::Categorical) {
    const std::size_t J = live_[k].size();
    delta += log_b_[k][J - 2] - log_b_[k][J - 1];
  }
  return delta;
}

void WorkGrid::add_to_cell(Key key, std::int64_t amount) {
  auto it = cells_.find(key);
  if (it == cells_.end()) {
    if (amount <= 0) throw std::logic_error("WorkGrid: negative cell count");
    cells_.emplace(key, amount);
    for (std::size_t d = 0; d < K_; ++d) slot_cells_[d][static_cast<std::size_t>(coord(key, d))].insert(key);
    return;
  }
  it->second += amount;
  if (it->second < 0) throw std::logic_error("WorkGrid: negative cell count");
  if (it->second == 0) {
    cells_.erase(it);
    for (std::size_t d = 0; d < K_; ++d) slot_cells_[d][static_cast<std::size_t>(coord(key, d))].erase(key);
  }
}

void WorkGrid::retire_slot(std::size_t k, std::int32_t slot) {
  auto& live = live_[k];
  live.erase(std::lower_bound(live.begin(), live.end(), slot));
  slot_cells_[k][static_cast<std::size_t>(slot)] = {};
}

std::int32_t WorkGrid::next_live(std::size_t k, std::int32_t slot) const {
  const auto& live = live_[k];
  const auto it = std::upper_bound(live.begin(), live.end(), slot);
  return it == live.end() ? -1 : *it;
}

double& WorkGrid::pair_slot(std::size_t k, std::int32_t a, std::int32_t b) {
  const auto lo = static_cast<std::size_t>(std::min(a, b));
  const auto hi = static_cast<std::size_t>(std::max(a, b));
  if (kind_[k] == VariableKind::Categorical) return pair_cache_[k][lo * radix_[k] + hi];
  return pair_cache_[k][lo];
}

double WorkGrid::pair_cell_term(std::size_t k, std::int32_t a, std::int32_t b) const {
  const auto& sa = slot_cells_[k][static_cast<std::size_t>(a)];
  const auto& sb = slot_cells_[k][static_cast<std::size_t>(b)];
  const bool a_small = sa.size() <= sb.size();
  const auto& small = a_small ? sa : sb;
  const std::int32_t from = a_small ? a : b;
  const std::int32_t to = a_small ? b : a;
  double term = 0.0;
  for (const Key key : small) {
    const std::int64_t y = cell(with_coord(key, k, from, to));
    if (y != 0) term -= pair_gain(cells_.at(key), y);
  }
  return term;
}

void WorkGrid::build_pair_cache(std::size_t k) {
  if (kind_[k] == VariableKind::Categorical) {
    if (radix_[k] > kMaxDenseSlots) return;
    pair_cache_[k].assign(radix_[k] * radix_[k], 0.0);
    std::vector<std::tuple<Key, std::int32_t, std::int64_t>> rows;
    rows.reserve(cells_.size());
    for (const auto& [key, n] : cells_) {
      const std::int32_t c = coord(key, k);
      rows.emplace_back(key - static_cast<Key>(c) * stride_[k], c, n);
    }
    std::sort(rows.begin(), rows.end());
    std::size_t i = 0;
    while (i < rows.size()) {
      std::size_t j = i;
      while (j < rows.size() && std::get<0>(rows[j]) == std::get<0>(rows[i])) ++j;
      for (std::size_t p = i; p < j; ++p) {
        for (std::size_t q = p + 1; q < j; ++q) {
          pair_slot(k, std::get<1>(rows[p]), std::get<1>(rows[q])) -= pair_gain(std::get<2>(rows[p]), std::get<2>(rows[q]));
        }
      }
      i = j;
    }
  } else {
    pair_cache_[k].assign(radix_[k], 0.0);
    const auto& live = live_[k];
    for (std::size_t i = 0; i + 1 < live.size(); ++i) pair_slot(k, live[i], live[i + 1]) = pair_cell_term(k, live[i], live[i + 1]);
  }
  cache_valid_[k] = true;
}

void WorkGrid::invalidate_caches() { std::fill(cache_valid_.begin(), cache_valid_.end(), false); }

double WorkGrid::merge_delta(std::size_t k, std::int32_t a, std::int32_t b) {
  if (!cache_valid_[k]) build_pair_cache(k);
  const double cells_term = cache_valid_[k] ? pair_slot(k, a, b) : pair_cell_term(k, a, b);
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  const std::int64_t na = slot_total_[k][ua];
  const std::int64_t nb = slot_total_[k][ub];
  double d = part_drop_prior(k) + cells_term + lf(na + nb) - lf(na) - lf(nb);
  if (kind_[k] == VariableKind::Categorical) {
    const std::int64_t ma = slot_atoms_[k][ua];
    const std::int64_t mb = slot_atoms_[k][ub];
    d += group_term(na + nb, ma + mb) - group_term(na, ma) - group_term(nb, mb);
  }
  return d;
}

std::optional<MergeCandidate> WorkGrid::best_merge() {
  std::optional<MergeCandidate> best;
  for (std::size_t k = 0; k < K_; ++k) {
    const auto& live = live_[k];
    if (frozen_[k] || live.size() < 2) continue;
    if (!cache_valid_[k]) build_pair_cache(k);
    const bool cached = cache_valid_[k];
    const double prior = part_drop_prior(k);
    auto consider = [&](std::int32_t a, std::int32_t b, double cells_term) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ub = static_cast<std::size_t>(b);
      const std::int64_t na = slot_total_[k][ua];
      const std::int64_t nb = slot_total_[k][ub];
      double d = prior + cells_term + lf(na + nb) - lf(na) - lf(nb);
      if (kind_[k] == VariableKind::Categorical) {
        const std::int64_t ma = slot_atoms_[k][ua];
        const std::int64_t mb = slot_atoms_[k][ub];
        d += group_term(na + nb, ma + mb) - group_term(na, ma) - group_term(nb, mb);
      }
      if (!best || d < best->delta) best = MergeCandidate{k, a, b, d};
    };
    if (kind_[k] == VariableKind::Categorical) {
      for (std::size_t i = 0; i < live.size(); ++i) {
        for (std::size_t j = i + 1; j < live.size(); ++j) {
          consider(live[i], live[j], cached ? pair_slot(k, live[i], live[j]) : pair_cell_term(k, live[i], live[j]));
        }
      }
    } else {
      for (std::size_t i = 0; i + 1 < live.size(); ++i) consider(live[i], live[i + 1], pair_slot(k, live[i], live[i + 1]));
    }
  }
  return best;
}

void WorkGrid::update_caches_for_merge(std::size_t k, std::int32_t a, std::int32_t b) {
  struct Row {
    Key rest;
    std::int32_t part;
    std::int64_t na;
    std::int64_t nb;
  };
  std::vector<Row> rows;
  for (std::size_t other = 0; other < K_; ++other) {
    if (other == k || !cache_valid_[other] || frozen_[other] || live_[other].size() < 2) continue;
    rows.clear();
    for (const auto side : {a, b}) {
      for (const Key key : slot_cells_[k][static_cast<std::size_t>(side)]) {
        const std::int32_t p = coord(key, other);
        const Key rest = key - static_cast<Key>(side) * stride_[k] - static_cast<Key>(p) * stride_[other];
        const std::int64_t n = cells_.at(key);
        rows.push_back(side == a ? Row{rest, p, n, 0} : Row{rest, p, 0, n});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
      return x.rest != y.rest ? x.rest < y.rest : x.part < y.part;
    });
    // Fold the a/b halves of each (rest, part) together.
    std::size_t w = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (w > 0 && rows[w - 1].rest == rows[r].rest && rows[w - 1].part == rows[r].part) {
        rows[w - 1].na += rows[r].na;
        rows[w - 1].nb += rows[r].nb;
      } else {
        rows[w++] = rows[r];
      }
    }
    rows.resize(w);

    auto correction = [&](const Row& p, const Row& q) {
      return pair_gain(p.na + p.nb, q.na + q.nb) - pair_gain(p.na, q.na) - pair_gain(p.nb, q.nb);
    };
    const bool categorical = kind_[other] == VariableKind::Categorical;
    std::size_t i = 0;
    while (i < rows.size()) {
      std::size_t j = i;
      while (j < rows.size() && rows[j].rest == rows[i].rest) ++j;
      if (categorical) {
        for (std::size_t p = i; p < j; ++p) {
          for (std::size_t q = p + 1; q < j; ++q) pair_slot(other, rows[p].part, rows[q].part) -= correction(rows[p], rows[q]);
        }
      } else {
        for (std::size_t p = i; p + 1 < j; ++p) {
          if (next_live(other, rows[p].part) == rows[p + 1].part) {
            pair_slot(other, rows[p].part, rows[p + 1].part) -= correction(rows[p], rows[p + 1]);
          }
        }
      }
      i = j;
    }
  }
}

void WorkGrid::apply_merge(const MergeCandidate& m) {
  const std::size_t k = m.variable;
  const std::int32_t a = std::min(m.a, m.b);
  const std::int32_t b = std::max(m.a, m.b);
  const auto ua = static_cast<std::size_t>(a);
  const auto ub = static_cast<std::size_t>(b);
  if (kind_[k] == VariableKind::Numerical && next_live(k, a) != b) {
    throw std::invalid_argument("WorkGrid: intervals must be adjacent");
  }
  update_caches_for_merge(k, a, b);

  const std::vector<Key> moving(slot_cells_[k][ub].begin(), slot_cells_[k][ub].end());
  for (const Key key : moving) {
    const std::int64_t n = cells_.at(key);
    add_to_cell(key, -n);
    add_to_cell(with_coord(key, k, b, a), n);
  }
  slot_total_[k][ua] += slot_total_[k][ub];
  slot_atoms_[k][ua] += slot_atoms_[k][ub];
  slot_total_[k][ub] = 0;
  slot_atoms_[k][ub] = 0;
  if (kind_[k] == VariableKind::Categorical) {
    auto& dst = slot_values_[k][ua];
    auto& src = slot_values_[k][ub];
    for (const auto v : src) slot_of_atom_[k][static_cast<std::size_t>(v)] = a;
    dst.insert(dst.end(), src.begin(), src.end());
    src.clear();
  } else {
    for (auto blk = block_begin_[k][ub]; blk < block_end_[k][ub]; ++blk) slot_of_atom_[k][static_cast<std::size_t>(blk)] = a;
    block_end_[k][ua] = block_end_[k][ub];
  }
  retire_slot(k, b);
  cost_ += m.delta;
  ++merges_;

  if (cache_valid_[k]) {
    if (kind_[k] == VariableKind::Categorical) {
      for (const auto x : live_[k]) {
        if (x != a) pair_slot(k, a, x) = pair_cell_term(k, a, x);
      }
    } else {
      const auto pos = part_index(k, a);
      if (pos > 0) {
        const auto prev = live_[k][pos - 1];
        pair_slot(k, prev, a) = pair_cell_term(k, prev, a);
      }
      const auto next = next_live(k, a);
      if (next >= 0) pair_slot(k, a, next) = pair_cell_term(k, a, next);
    }
  }
}

std::vector<std::vector<WorkGrid::Entry>> WorkGrid::atom_profiles(std::size_t k) const {
  const Dataset& ds = *dataset_;
  const Column& col = ds.column(k);
  std::vector<std::vector<Entry>> out(col.atom_count());
  std::vector<Key> rests;
  for (std::size_t atom = 0; atom < out.size(); ++atom) {
    rests.clear();
    for (const auto rec : col.records_of(static_cast<std::int32_t>(atom))) {
      Key rest = 0;
      for (std::size_t d = 0; d < K_; ++d) {
        if (d == k) continue;
        const auto a = ds.column(d).atom[static_cast<std::size_t>(rec)];
        rest += static_cast<Key>(slot_of_atom_[d][static_cast<std::size_t>(a)]) * stride_[d];
      }
      rests.push_back(rest);
    }
    std::sort(rests.begin(), rests.end());
    auto& prof = out[atom];
    for (const Key r : rests) {
      if (!prof.empty() && prof.back().rest == r) {
        ++prof.back().count;
      } else {
        prof.push_back({r, 1});
      }
    }
  }
  return out;
}

bool WorkGrid::improve_values(std::size_t k, int max_passes) {
  if (frozen_[k] || kind_[k] != VariableKind::Categorical || live_[k].size() < 2) return false;
  const Column& col = dataset_->column(k);
  const auto profiles = atom_profiles(k);
  const Key s = stride_[k];
  bool moved_any = false;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t v = 0; v < profiles.size(); ++v) {
      if (live_[k].size() < 2) break;
      const auto& prof = profiles[v];
      const std::int32_t g = slot_of_atom_[k][v];
      const auto ug = static_cast<std::size_t>(g);
      const std::int64_t nv = col.value_counts[v];
      const std::int64_t ng = slot_total_[k][ug];
      const std::int64_t mg = slot_atoms_[k][ug];

      double base = lf(ng - nv) - lf(ng) + group_term(ng - nv, mg - 1) - group_term(ng, mg);
      if (mg == 1) base += part_drop_prior(k);
      for (const auto& e : prof) {
        const std::int64_t n = cell(e.rest + static_cast<Key>(g) * s);
        base -= lf(n - e.count) - lf(n);
      }

      std::int32_t best_to = -1;
      double best = 0.0;
      for (const auto h : live_[k]) {
        if (h == g) continue;
        const auto uh = static_cast<std::size_t>(h);
        const std::int64_t nh = slot_total_[k][uh];
        const std::int64_t mh = slot_atoms_[k][uh];
        double d = base + lf(nh + nv) - lf(nh) + group_term(nh + nv, mh + 1) - group_term(nh, mh);
        for (const auto& e : prof) {
          const std::int64_t n = cell(e.rest + static_cast<Key>(h) * s);
          d -= lf(n + e.count) - lf(n);
        }
        if (best_to < 0 || d < best) {
          best = d;
          best_to = h;
        }
      }
      if (best_to < 0 || !(best < 0.0)) continue;

      const auto uh = static_cast<std::size_t>(best_to);
      for (const auto& e : prof) {
        add_to_cell(e.rest + static_cast<Key>(g) * s, -e.count);
        add_to_cell(e.rest + static_cast<Key>(best_to) * s, e.count);
      }
      slot_total_[k][ug] -= nv;
      slot_total_[k][uh] += nv;
      --slot_atoms_[k][ug];
      ++slot_atoms_[k][uh];
      auto& src = slot_values_[k][ug];
      src.erase(std::find(src.begin(), src.end(), static_cast<std::int32_t>(v)));
      slot_values_[k][uh].push_back(static_cast<std::int32_t>(v));
      slot_of_atom_[k][v] = best_to;
      if (slot_atoms_[k][ug] == 0) retire_slot(k, g);
      cost_ += best;
      moved = true;
    }
    if (!moved) break;
    moved_any = true;
  }
  if (moved_any) invalidate_caches();
  return moved_any;
}

bool WorkGrid::improve_boundaries(std::size_t k, int max_passes) {
  if (frozen_[k] || kind_[k] != VariableKind::Numerical || live_[k].size() < 2) return false;
  const Column& col = dataset_->column(k);
  const auto profiles = atom_profiles(k);
  const Key s = stride_[k];
  absl::flat_hash_map<Key, std::pair<std::int64_t, std::int64_t>> scratch;
  std::vector<double> deltas;
  bool moved_any = false;

  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i + 1 < live_[k].size(); ++i) {
      const std::int32_t L = live_[k][i];
      const std::int32_t R = live_[k][i + 1];
      const auto uL = static_cast<std::size_t>(L);
      const auto uR = static_cast<std::size_t>(R);
      const std::int32_t lo = block_begin_[k][uL];
      const std::int32_t mid = block_begin_[k][uR];
      const std::int32_t hi = block_end_[k][uR];
      if (hi - lo < 3) continue;  // no alternative boundary position
      const std::int64_t nl0 = slot_total_[k][uL];
      const std::int64_t nr0 = slot_total_[k][uR];
      const double parts0 = lf(nl0) + lf(nr0);
      // deltas[t - lo - 1] for boundary positions t in (lo, hi)
      deltas.assign(static_cast<std::size_t>(hi - lo - 1), 0.0);

      auto counts_of = [&](Key rest) -> std::pair<std::int64_t, std::int64_t>& {
        auto [it, inserted] = scratch.try_emplace(rest, 0, 0);
        if (inserted) it->second = {cell(rest + static_cast<Key>(L) * s), cell(rest + static_cast<Key>(R) * s)};
        return it->second;
      };

      // Boundary moves left: blocks leave L for R.
      scratch.clear();
      double cells_delta = 0.0;
      std::int64_t nl = nl0;
      std::int64_t nr = nr0;
      for (std::int32_t t = mid - 1; t > lo; --t) {
        for (const auto& e : profiles[static_cast<std::size_t>(t)]) {
          auto& [cl, cr] = counts_of(e.rest);
          cells_delta -= lf(cl - e.count) - lf(cl) + lf(cr + e.count) - lf(cr);
          cl -= e.count;
          cr += e.count;
        }
        const auto size = col.blocks[static_cast<std::size_t>(t)].size();
        nl -= size;
        nr += size;
        deltas[static_cast<std::size_t>(t - lo - 1)] = cells_delta + lf(nl) + lf(nr) - parts0;
      }
      // Boundary moves right: blocks leave R for L.
      scratch.clear();
      cells_delta = 0.0;
      nl = nl0;
      nr = nr0;
      for (std::int32_t t = mid + 1; t < hi; ++t) {
        for (const auto& e : profiles[static_cast<std::size_t>(t - 1)]) {
          auto& [cl, cr] = counts_of(e.rest);
          cells_delta -= lf(cr - e.count) - lf(cr) + lf(cl + e.count) - lf(cl);
          cl += e.count;
          cr -= e.count;
        }
        const auto size = col.blocks[static_cast<std::size_t>(t - 1)].size();
        nl += size;
        nr -= size;
        deltas[static_cast<std::size_t>(t - lo - 1)] = cells_delta + lf(nl) + lf(nr) - parts0;
      }

      std::int32_t best_t = mid;
      double best = 0.0;
      for (std::int32_t t = lo + 1; t < hi; ++t) {
        if (t == mid) continue;
        const double d = deltas[static_cast<std::size_t>(t - lo - 1)];
        if (d < best) {
          best = d;
          best_t = t;
        }
      }
      if (best_t == mid) continue;

      const bool to_right = best_t < mid;
      const std::int32_t from = to_right ? L : R;
      const std::int32_t to = to_right ? R : L;
      for (auto blk = std::min(best_t, mid); blk < std::max(best_t, mid); ++blk) {
        for (const auto& e : profiles[static_cast<std::size_t>(blk)]) {
          add_to_cell(e.rest + static_cast<Key>(from) * s, -e.count);
          add_to_cell(e.rest + static_cast<Key>(to) * s, e.count);
        }
        const auto size = col.blocks[static_cast<std::size_t>(blk)].size();
        slot_total_[k][static_cast<std::size_t>(from)] -= size;
        slot_total_[k][static_cast<std::size_t>(to)] += size;
        --slot_atoms_[k][static_cast<std::size_t>(from)];
        ++slot_atoms_[k][static_cast<std::size_t>(to)];
        slot_of_atom_[k][static_cast<std::size_t>(blk)] = to;
      }
      block_end_[k][uL] = best_t;
      block_begin_[k][uR] = best_t;
      cost_ += best;
      moved = true;
    }
    if (!moved) break;
    moved_any = true;
  }
  if (moved_any) invalidate_caches();
  return moved_any;
}

}  // namespace datagrid::detail
