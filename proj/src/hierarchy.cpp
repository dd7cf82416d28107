#include "datagrid/hierarchy.hpp"

#include <algorithm>
#include <stdexcept>

#include "datagrid/cost.hpp"
#include "datagrid/optimizer.hpp"
#include "work_grid.hpp"

namespace datagrid {

std::size_t MergeHierarchy::base_total_parts() const {
  std::size_t total = 0;
  for (const auto& p : base) total += p.size();
  return total;
}

double information_ratio(double cost_m, double cost_opt, double cost_null) {
  const double denom = cost_opt - cost_null;
  if (denom == 0.0) return 1.0;
  return std::clamp((cost_m - cost_null) / denom, 0.0, 1.0);
}

MergeHierarchy build_hierarchy(const GridModel& m_star, const std::vector<std::string>& freeze) {
  MergeHierarchy h;
  h.base = m_star.partitions();
  h.dataset = m_star.dataset_ptr();
  h.frozen = freeze;
  h.cost_opt = cost(m_star).total;
  h.cost_null = cost(GridModel::null_model(m_star.dataset_ptr())).total;

  const auto mask = freeze_mask(m_star.dataset(), freeze);
  detail::WorkGrid w(m_star, mask);
  double current = h.cost_opt;
  double envelope = 1.0;
  int step = 0;
  while (const auto m = w.best_merge()) {
    MergeRecord rec;
    rec.step = ++step;
    rec.variable_index = m->variable;
    rec.variable = m_star.partition(m->variable).variable;
    rec.a = w.part_index(m->variable, m->a);
    rec.b = w.part_index(m->variable, m->b);
    rec.merged = std::min(rec.a, rec.b);
    rec.delta = m->delta;
    w.apply_merge(*m);
    current += m->delta;
    rec.cost_after = current;
    rec.raw_info_ratio_after = information_ratio(current, h.cost_opt, h.cost_null);
    envelope = std::min(envelope, rec.raw_info_ratio_after);
    rec.info_ratio_after = envelope;
    h.records.push_back(std::move(rec));
  }
  const bool all_free = std::none_of(mask.begin(), mask.end(), [](bool b) { return b; });
  if (all_free && !h.records.empty()) {
    h.records.back().info_ratio_after = 0.0;
    h.records.back().raw_info_ratio_after = 0.0;
  }
  return h;
}

double info_ratio_after(const MergeHierarchy& h, std::size_t steps) {
  if (steps > h.records.size()) throw std::out_of_range("hierarchy: step beyond the last record");
  return steps == 0 ? 1.0 : h.records[steps - 1].info_ratio_after;
}

std::size_t steps_for(const MergeHierarchy& h, const GranularityTarget& target) {
  const std::size_t S = h.records.size();
  if (const auto* ir = std::get_if<InfoRatio>(&target)) {
    if (!(ir->r >= 0.0 && ir->r <= 1.0)) throw std::invalid_argument("info ratio target must lie in [0, 1]");
    for (std::size_t s = S; s > 0; --s) {
      if (h.records[s - 1].info_ratio_after >= ir->r) return s;
    }
    return 0;
  }
  if (const auto* tp = std::get_if<TotalParts>(&target)) {
    const std::size_t start = h.base_total_parts();
    if (tp->n >= start) return 0;
    if (tp->n < start - S) {
      throw std::invalid_argument("total parts target below the coarsest reachable model (" +
                                  std::to_string(start - S) + ")");
    }
    return start - tp->n;
  }
  const auto& ppv = std::get<PartsPerVariable>(target).parts;
  std::vector<std::size_t> goal(h.base.size());
  std::vector<std::size_t> count(h.base.size());
  for (std::size_t k = 0; k < h.base.size(); ++k) goal[k] = count[k] = h.base[k].size();
  for (const auto& [name, n] : ppv) {
    const auto it = std::find_if(h.base.begin(), h.base.end(), [&](const auto& p) { return p.variable == name; });
    if (it == h.base.end()) throw std::invalid_argument("unknown variable in part target: " + name);
    const auto k = static_cast<std::size_t>(it - h.base.begin());
    if (n < 1) throw std::invalid_argument("part target for " + name + " must be >= 1");
    if (n > it->size()) {
      throw std::invalid_argument("part target for " + name + " exceeds its optimal part count (" +
                                  std::to_string(it->size()) + ")");
    }
    if (std::find(h.frozen.begin(), h.frozen.end(), name) != h.frozen.end() && n < it->size()) {
      throw std::invalid_argument("variable " + name + " is frozen at " + std::to_string(it->size()) + " parts");
    }
    goal[k] = n;
  }
  auto done = [&] {
    for (std::size_t k = 0; k < goal.size(); ++k) {
      if (count[k] > goal[k]) return false;
    }
    return true;
  };
  if (done()) return 0;
  for (std::size_t s = 0; s < S; ++s) {
    --count[h.records[s].variable_index];
    if (done()) return s + 1;
  }
  throw std::invalid_argument("part targets not reachable by the hierarchy");
}

std::vector<VariablePartition> partitions_after(const MergeHierarchy& h, std::size_t steps) {
  if (steps > h.records.size()) throw std::out_of_range("hierarchy: step beyond the last record");
  auto parts = h.base;
  for (std::size_t s = 0; s < steps; ++s) {
    const auto& r = h.records[s];
    if (r.variable_index >= parts.size()) throw std::invalid_argument("hierarchy: record variable out of range");
    merge_partition_parts(parts[r.variable_index], r.a, r.b);
  }
  return parts;
}

GridModel model_after(const MergeHierarchy& h, std::size_t steps) {
  if (!h.dataset) throw std::logic_error("hierarchy: a dataset is required to build a model");
  return GridModel::from_partitions(h.dataset, partitions_after(h, steps));
}

GridModel model_at(const MergeHierarchy& h, const GranularityTarget& target) {
  return model_after(h, steps_for(h, target));
}

std::vector<std::pair<std::size_t, double>> pareto_curve(const MergeHierarchy& h) {
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t parts = h.base_total_parts();
  out.emplace_back(parts, 1.0);
  for (const auto& r : h.records) out.emplace_back(--parts, r.info_ratio_after);
  return out;
}

}  // namespace datagrid
