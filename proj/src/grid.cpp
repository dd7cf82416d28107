#include "datagrid/grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace datagrid {
namespace {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------- CellTable

std::optional<std::size_t> CellTable::find(std::span<const std::int32_t> key) const {
  std::size_t lo = 0;
  std::size_t hi = size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    const auto c = coords(mid);
    if (std::lexicographical_compare(c.begin(), c.end(), key.begin(), key.end())) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo < size() && std::ranges::equal(coords(lo), key)) return lo;
  return std::nullopt;
}

std::int64_t CellTable::at(std::span<const std::int32_t> key) const {
  const auto i = find(key);
  return i ? counts_[*i] : 0;
}

std::int64_t CellTable::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

CellTable CellTable::from_entries(std::size_t arity, std::vector<std::int32_t> coords, std::vector<std::int64_t> counts) {
  CellTable out(arity);
  const std::size_t n = counts.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) { return std::span<const std::int32_t>(coords).subspan(i * arity, arity); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = key(a);
    const auto kb = key(b);
    return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
  });
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::int64_t sum = 0;
    while (j < n && std::ranges::equal(key(order[j]), key(order[i]))) sum += counts[order[j++]];
    if (sum > 0) {
      const auto k = key(order[i]);
      out.coords_.insert(out.coords_.end(), k.begin(), k.end());
      out.counts_.push_back(sum);
    } else if (sum < 0) {
      throw std::logic_error("negative cell count");
    }
    i = j;
  }
  return out;
}

void merge_partition_parts(VariablePartition& partition, std::size_t a, std::size_t b) {
  const std::size_t J = partition.size();
  require(a < J && b < J, "merge_parts: part index out of range");
  require(a != b, "merge_parts: cannot merge a part with itself");
  const std::size_t lo = std::min(a, b);
  const std::size_t hi = std::max(a, b);
  auto& parts = partition.parts;
  if (partition.kind == VariableKind::Numerical) {
    require(hi == lo + 1, "merge_parts: intervals must be adjacent");
    std::get<Interval>(parts[lo]).hi_rank = std::get<Interval>(parts[hi]).hi_rank;
  } else {
    auto& dst = std::get<ValueGroup>(parts[lo]).value_ids;
    const auto& src = std::get<ValueGroup>(parts[hi]).value_ids;
    dst.insert(dst.end(), src.begin(), src.end());
    std::sort(dst.begin(), dst.end());
  }
  parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(hi));
}

// ---------------------------------------------------------------- GridModel

GridModel GridModel::null_model(DatasetPtr dataset) {
  std::vector<VariablePartition> parts;
  for (std::size_t k = 0; k < dataset->n_variables(); ++k) {
    VariablePartition p{dataset->variable(k).name, dataset->kind(k), {}};
    if (p.kind == VariableKind::Numerical) {
      p.parts.emplace_back(Interval{1, dataset->n_records() + 1});
    } else {
      ValueGroup g;
      g.value_ids.resize(dataset->column(k).dictionary.size());
      std::iota(g.value_ids.begin(), g.value_ids.end(), 0);
      p.parts.emplace_back(std::move(g));
    }
    parts.push_back(std::move(p));
  }
  return from_partitions(std::move(dataset), std::move(parts));
}

GridModel GridModel::initial_model(DatasetPtr dataset, std::optional<std::int64_t> max_parts) {
  const std::int64_t n = dataset->n_records();
  const std::int64_t limit =
      max_parts.value_or(static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
  require(limit >= 1, "initial_model: max_parts must be >= 1");
  std::vector<std::vector<std::int32_t>> labels(dataset->n_variables());
  for (std::size_t k = 0; k < dataset->n_variables(); ++k) {
    const Column& col = dataset->column(k);
    auto& lab = labels[k];
    lab.assign(col.atom_count(), 0);
    if (col.kind == VariableKind::Numerical) {
      const std::int64_t parts = std::min<std::int64_t>(limit, static_cast<std::int64_t>(col.blocks.size()));
      // Snap each equal-frequency cut to the nearest tie-block edge.
      std::vector<std::int32_t> cuts;
      for (std::int64_t i = 1; i < parts; ++i) {
        const std::int64_t target = 1 + (i * n + parts / 2) / parts;
        const std::int32_t b = col.block_of_rank(std::min(target, n));
        const auto& blk = col.blocks[static_cast<std::size_t>(b)];
        const std::int32_t edge = (target - blk.lo_rank <= blk.hi_rank - target) ? b : b + 1;
        if (edge > 0 && edge < static_cast<std::int32_t>(col.blocks.size()) && (cuts.empty() || cuts.back() < edge)) {
          cuts.push_back(edge);
        }
      }
      std::int32_t part = 0;
      std::size_t next = 0;
      for (std::int32_t b = 0; b < static_cast<std::int32_t>(col.blocks.size()); ++b) {
        if (next < cuts.size() && cuts[next] == b) {
          ++part;
          ++next;
        }
        lab[static_cast<std::size_t>(b)] = part;
      }
    } else {
      const auto groups = std::min<std::int64_t>(limit, static_cast<std::int64_t>(col.dictionary.size()));
      std::vector<std::int32_t> order(col.dictionary.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        const auto ca = col.value_counts[static_cast<std::size_t>(a)];
        const auto cb = col.value_counts[static_cast<std::size_t>(b)];
        if (ca != cb) return ca > cb;
        return col.dictionary[static_cast<std::size_t>(a)] < col.dictionary[static_cast<std::size_t>(b)];
      });
      for (std::size_t i = 0; i < order.size(); ++i) {
        lab[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(static_cast<std::int64_t>(i) % groups);
      }
    }
  }
  return from_atom_labels(std::move(dataset), labels);
}

GridModel GridModel::from_atom_labels(DatasetPtr dataset, const std::vector<std::vector<std::int32_t>>& atom_labels) {
  require(atom_labels.size() == dataset->n_variables(), "from_atom_labels: one label vector per variable");
  std::vector<VariablePartition> parts;
  for (std::size_t k = 0; k < dataset->n_variables(); ++k) {
    const Column& col = dataset->column(k);
    const auto& lab = atom_labels[k];
    require(lab.size() == col.atom_count(), "from_atom_labels: label count differs from atom count");
    std::vector<std::int32_t> distinct(lab.begin(), lab.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    auto compact = [&](std::int32_t label) {
      return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), label) - distinct.begin());
    };
    VariablePartition p{dataset->variable(k).name, col.kind, {}};
    if (col.kind == VariableKind::Numerical) {
      for (std::size_t b = 1; b < lab.size(); ++b) {
        require(lab[b] >= lab[b - 1], "from_atom_labels: numerical labels must be non-decreasing");
      }
      std::vector<Interval> iv(distinct.size(), Interval{0, 0});
      for (std::size_t b = 0; b < lab.size(); ++b) {
        auto& it = iv[compact(lab[b])];
        if (it.lo_rank == 0) it.lo_rank = col.blocks[b].lo_rank;
        it.hi_rank = col.blocks[b].hi_rank;
      }
      for (auto& it : iv) p.parts.emplace_back(it);
    } else {
      std::vector<ValueGroup> groups(distinct.size());
      for (std::size_t v = 0; v < lab.size(); ++v) groups[compact(lab[v])].value_ids.push_back(static_cast<std::int32_t>(v));
      for (auto& g : groups) p.parts.emplace_back(std::move(g));
    }
    parts.push_back(std::move(p));
  }
  return from_partitions(std::move(dataset), std::move(parts));
}

GridModel GridModel::from_partitions(DatasetPtr dataset, std::vector<VariablePartition> partitions) {
  require(dataset != nullptr, "GridModel: null dataset");
  require(partitions.size() == dataset->n_variables(), "GridModel: one partition per variable required");
  GridModel m;
  m.dataset_ = std::move(dataset);
  m.partitions_ = std::move(partitions);
  m.index_partitions();
  m.count_cells();
  return m;
}

void GridModel::index_partitions() {
  const std::int64_t n = dataset_->n_records();
  atom_part_.assign(partitions_.size(), {});
  for (std::size_t k = 0; k < partitions_.size(); ++k) {
    auto& p = partitions_[k];
    const Column& col = dataset_->column(k);
    p.variable = dataset_->variable(k).name;
    require(p.kind == col.kind, "GridModel: partition kind differs from variable kind");
    require(!p.parts.empty(), "GridModel: empty partition");
    auto& ap = atom_part_[k];
    ap.assign(col.atom_count(), -1);
    if (col.kind == VariableKind::Numerical) {
      std::int64_t expect = 1;
      for (std::size_t j = 0; j < p.parts.size(); ++j) {
        const auto* iv = std::get_if<Interval>(&p.parts[j]);
        require(iv != nullptr, "GridModel: numerical variable needs intervals");
        require(iv->lo_rank == expect && iv->lo_rank < iv->hi_rank, "GridModel: intervals must be contiguous and non-empty");
        const auto first = col.block_of_rank(iv->lo_rank);
        require(col.blocks[static_cast<std::size_t>(first)].lo_rank == iv->lo_rank, "GridModel: interval splits a tie-block");
        require(iv->hi_rank == n + 1 ||
                    col.blocks[static_cast<std::size_t>(col.block_of_rank(iv->hi_rank))].lo_rank == iv->hi_rank,
                "GridModel: interval splits a tie-block");
        const auto last = col.block_of_rank(iv->hi_rank - 1);
        for (auto b = first; b <= last; ++b) ap[static_cast<std::size_t>(b)] = static_cast<std::int32_t>(j);
        expect = iv->hi_rank;
      }
      require(expect == n + 1, "GridModel: intervals must cover all ranks");
    } else {
      for (std::size_t j = 0; j < p.parts.size(); ++j) {
        auto* g = std::get_if<ValueGroup>(&p.parts[j]);
        require(g != nullptr, "GridModel: categorical variable needs value groups");
        require(!g->value_ids.empty(), "GridModel: empty value group");
        std::sort(g->value_ids.begin(), g->value_ids.end());
        for (const auto v : g->value_ids) {
          require(v >= 0 && static_cast<std::size_t>(v) < ap.size(), "GridModel: value id out of range");
          require(ap[static_cast<std::size_t>(v)] == -1, "GridModel: value groups overlap");
          ap[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(j);
        }
      }
      require(std::find(ap.begin(), ap.end(), -1) == ap.end(), "GridModel: value groups must cover every value");
    }
  }
}

void GridModel::count_cells() {
  const std::size_t K = partitions_.size();
  const auto n = static_cast<std::size_t>(dataset_->n_records());
  std::vector<std::int32_t> coords(n * K);
  part_totals_.assign(K, {});
  for (std::size_t k = 0; k < K; ++k) {
    part_totals_[k].assign(partitions_[k].size(), 0);
    const auto& atom = dataset_->column(k).atom;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = atom_part_[k][static_cast<std::size_t>(atom[i])];
      coords[i * K + k] = j;
      ++part_totals_[k][static_cast<std::size_t>(j)];
    }
  }
  cells_ = CellTable::from_entries(K, std::move(coords), std::vector<std::int64_t>(n, 1));
}

std::vector<std::size_t> GridModel::part_counts() const {
  std::vector<std::size_t> out;
  for (const auto& p : partitions_) out.push_back(p.size());
  return out;
}

std::size_t GridModel::total_parts() const {
  std::size_t s = 0;
  for (const auto& p : partitions_) s += p.size();
  return s;
}

double GridModel::grid_size() const {
  double g = 1.0;
  for (const auto& p : partitions_) g *= static_cast<double>(p.size());
  return g;
}

std::int64_t GridModel::part_atom_count(std::size_t k, std::size_t j) const {
  if (partitions_[k].kind == VariableKind::Categorical) {
    return static_cast<std::int64_t>(partitions_[k].group(j).value_ids.size());
  }
  const auto [first, last] = interval_blocks(k, j);
  return last - first;
}

std::pair<std::int32_t, std::int32_t> GridModel::interval_blocks(std::size_t k, std::size_t j) const {
  const auto& iv = partitions_[k].interval(j);
  const Column& col = dataset_->column(k);
  return {col.block_of_rank(iv.lo_rank), col.block_of_rank(iv.hi_rank - 1) + 1};
}

GridModel GridModel::merge_parts(std::size_t k, std::size_t a, std::size_t b) const {
  require(k < partitions_.size(), "merge_parts: variable index out of range");
  const std::size_t J = partitions_[k].size();
  require(a < J && b < J, "merge_parts: part index out of range");
  require(a != b, "merge_parts: cannot merge a part with itself");
  const std::size_t lo = std::min(a, b);
  const std::size_t hi = std::max(a, b);
  const bool numerical = partitions_[k].kind == VariableKind::Numerical;
  if (numerical) require(hi == lo + 1, "merge_parts: intervals must be adjacent");

  GridModel out;
  out.dataset_ = dataset_;
  out.partitions_ = partitions_;
  merge_partition_parts(out.partitions_[k], lo, hi);

  auto remap = [&](std::int32_t j) {
    const auto uj = static_cast<std::size_t>(j);
    if (uj == hi) return static_cast<std::int32_t>(lo);
    return uj > hi ? j - 1 : j;
  };
  out.atom_part_ = atom_part_;
  for (auto& j : out.atom_part_[k]) j = remap(j);
  out.part_totals_ = part_totals_;
  auto& totals = out.part_totals_[k];
  totals[lo] += totals[hi];
  totals.erase(totals.begin() + static_cast<std::ptrdiff_t>(hi));

  const std::size_t K = partitions_.size();
  std::vector<std::int32_t> coords;
  std::vector<std::int64_t> counts;
  coords.reserve(cells_.size() * K);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto key = cells_.coords(c);
    for (std::size_t d = 0; d < K; ++d) coords.push_back(d == k ? remap(key[d]) : key[d]);
    counts.push_back(cells_.count(c));
  }
  out.cells_ = CellTable::from_entries(K, std::move(coords), std::move(counts));
  return out;
}

GridModel GridModel::move_value(std::size_t k, std::int32_t value_id, std::size_t from, std::size_t to) const {
  require(k < partitions_.size(), "move_value: variable index out of range");
  require(partitions_[k].kind == VariableKind::Categorical, "move_value: variable is numerical");
  const std::size_t J = partitions_[k].size();
  require(from < J && to < J, "move_value: part index out of range");
  require(from != to, "move_value: source and destination are the same part");
  require(value_id >= 0 && static_cast<std::size_t>(value_id) < atom_part_[k].size() &&
              atom_part_[k][static_cast<std::size_t>(value_id)] == static_cast<std::int32_t>(from),
          "move_value: value is not in the source part");

  const std::size_t K = partitions_.size();
  const Column& col = dataset_->column(k);
  std::vector<std::int32_t> coords;
  std::vector<std::int64_t> counts;
  coords.reserve((cells_.size() + 2 * static_cast<std::size_t>(col.atom_frequency(value_id))) * K);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto key = cells_.coords(c);
    coords.insert(coords.end(), key.begin(), key.end());
    counts.push_back(cells_.count(c));
  }
  std::vector<std::int32_t> key(K);
  for (const auto rec : col.records_of(value_id)) {
    for (std::size_t d = 0; d < K; ++d) key[d] = part_of_record(d, static_cast<std::size_t>(rec));
    coords.insert(coords.end(), key.begin(), key.end());
    counts.push_back(-1);
    key[k] = static_cast<std::int32_t>(to);
    coords.insert(coords.end(), key.begin(), key.end());
    counts.push_back(1);
  }

  GridModel out;
  out.dataset_ = dataset_;
  out.partitions_ = partitions_;
  out.atom_part_ = atom_part_;
  out.part_totals_ = part_totals_;
  auto& parts = out.partitions_[k].parts;
  auto& src = std::get<ValueGroup>(parts[from]).value_ids;
  src.erase(std::find(src.begin(), src.end(), value_id));
  auto& dst = std::get<ValueGroup>(parts[to]).value_ids;
  dst.insert(std::upper_bound(dst.begin(), dst.end(), value_id), value_id);
  out.atom_part_[k][static_cast<std::size_t>(value_id)] = static_cast<std::int32_t>(to);
  const std::int64_t moved = col.atom_frequency(value_id);
  out.part_totals_[k][from] -= moved;
  out.part_totals_[k][to] += moved;

  CellTable cells = CellTable::from_entries(K, std::move(coords), std::move(counts));
  if (src.empty()) {
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(from));
    out.part_totals_[k].erase(out.part_totals_[k].begin() + static_cast<std::ptrdiff_t>(from));
    const auto gone = static_cast<std::int32_t>(from);
    for (auto& j : out.atom_part_[k]) j -= (j > gone) ? 1 : 0;
    // Shifting indices above the deleted part keeps the lexicographic order.
    std::vector<std::int32_t> c2;
    std::vector<std::int64_t> n2;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto kk = cells.coords(c);
      for (std::size_t d = 0; d < K; ++d) c2.push_back(d == k && kk[d] > gone ? kk[d] - 1 : kk[d]);
      n2.push_back(cells.count(c));
    }
    cells = CellTable::from_entries(K, std::move(c2), std::move(n2));
  }
  out.cells_ = std::move(cells);
  return out;
}

GridModel GridModel::move_boundary(std::size_t k, std::size_t boundary, std::int64_t new_rank) const {
  require(k < partitions_.size(), "move_boundary: variable index out of range");
  require(partitions_[k].kind == VariableKind::Numerical, "move_boundary: variable is categorical");
  require(boundary + 1 < partitions_[k].size(), "move_boundary: boundary index out of range");
  const Interval left = partitions_[k].interval(boundary);
  const Interval right = partitions_[k].interval(boundary + 1);
  require(new_rank > left.lo_rank && new_rank < right.hi_rank, "move_boundary: the move would empty an interval");
  const Column& col = dataset_->column(k);
  const auto b_new = col.block_of_rank(new_rank);
  require(col.blocks[static_cast<std::size_t>(b_new)].lo_rank == new_rank, "move_boundary: new boundary splits a tie-block");
  const auto b_old = col.block_of_rank(right.lo_rank);

  const std::size_t K = partitions_.size();
  std::vector<std::int32_t> coords;
  std::vector<std::int64_t> counts;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto key = cells_.coords(c);
    coords.insert(coords.end(), key.begin(), key.end());
    counts.push_back(cells_.count(c));
  }

  GridModel out;
  out.dataset_ = dataset_;
  out.partitions_ = partitions_;
  out.atom_part_ = atom_part_;
  out.part_totals_ = part_totals_;
  std::get<Interval>(out.partitions_[k].parts[boundary]).hi_rank = new_rank;
  std::get<Interval>(out.partitions_[k].parts[boundary + 1]).lo_rank = new_rank;

  // Blocks in [min, max) switch side.
  const auto first = std::min(b_new, b_old);
  const auto last = std::max(b_new, b_old);
  const auto dest = static_cast<std::int32_t>(b_new < b_old ? boundary + 1 : boundary);
  const auto origin = static_cast<std::int32_t>(b_new < b_old ? boundary : boundary + 1);
  std::vector<std::int32_t> key(K);
  for (auto b = first; b < last; ++b) {
    out.atom_part_[k][static_cast<std::size_t>(b)] = dest;
    for (const auto rec : col.records_of(b)) {
      for (std::size_t d = 0; d < K; ++d) key[d] = part_of_record(d, static_cast<std::size_t>(rec));
      coords.insert(coords.end(), key.begin(), key.end());
      counts.push_back(-1);
      key[k] = dest;
      coords.insert(coords.end(), key.begin(), key.end());
      counts.push_back(1);
    }
    const auto moved = col.blocks[static_cast<std::size_t>(b)].size();
    out.part_totals_[k][static_cast<std::size_t>(origin)] -= moved;
    out.part_totals_[k][static_cast<std::size_t>(dest)] += moved;
  }
  out.cells_ = CellTable::from_entries(K, std::move(coords), std::move(counts));
  return out;
}

bool GridModel::consistent_with_rebuild() const {
  const GridModel fresh = from_partitions(dataset_, partitions_);
  if (!(fresh.cells_ == cells_) || fresh.part_totals_ != part_totals_ || fresh.atom_part_ != atom_part_) return false;
  if (cells_.total() != dataset_->n_records()) return false;
  if (static_cast<std::int64_t>(cells_.size()) > dataset_->n_records()) return false;
  for (std::size_t k = 0; k < partitions_.size(); ++k) {
    std::vector<std::int64_t> sums(partitions_[k].size(), 0);
    for (std::size_t c = 0; c < cells_.size(); ++c) sums[static_cast<std::size_t>(cells_.coords(c)[k])] += cells_.count(c);
    if (sums != part_totals_[k]) return false;
  }
  return true;
}

std::pair<double, double> GridModel::interval_bounds(std::size_t k, std::size_t j) const {
  const auto [first, last] = interval_blocks(k, j);
  const Column& col = dataset_->column(k);
  const double lo = first == 0 ? col.blocks.front().value : col.cut_value(first);
  const double hi = static_cast<std::size_t>(last) >= col.blocks.size() ? col.blocks.back().value : col.cut_value(last);
  return {lo, hi};
}

std::string GridModel::part_label(std::size_t k, std::size_t j) const {
  const auto& p = partitions_[k];
  if (p.kind == VariableKind::Numerical) {
    const auto [lo, hi] = interval_bounds(k, j);
    const bool last = j + 1 == p.size();
    return "[" + format_number(lo) + ";" + format_number(hi) + (last ? "]" : ")");
  }
  const auto& col = dataset_->column(k);
  std::vector<std::int32_t> ids = p.group(j).value_ids;
  std::stable_sort(ids.begin(), ids.end(), [&](std::int32_t a, std::int32_t b) {
    return col.value_counts[static_cast<std::size_t>(a)] > col.value_counts[static_cast<std::size_t>(b)];
  });
  std::string out = "{";
  const std::size_t shown = std::min<std::size_t>(ids.size(), 3);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i) out += ",";
    out += col.dictionary[static_cast<std::size_t>(ids[i])];
  }
  if (ids.size() > shown) out += ",...";
  return out + "}";
}

}  // namespace datagrid
