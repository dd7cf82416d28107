#include "datagrid/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "datagrid/cost.hpp"
#include "random.hpp"
#include "work_grid.hpp"

namespace datagrid {
namespace {

constexpr int kMaxOuterIterations = 20;

void check_step(const detail::WorkGrid& w, double previous) {
  const double full = cost(w.to_model()).total;
  const double tol = 1e-7 * std::max(1.0, std::abs(full));
  if (std::abs(full - w.cost()) > tol) throw std::logic_error("optimizer: tracked cost drifted from full recomputation");
  if (full > previous + tol) throw std::logic_error("optimizer: accepted step increased the cost");
}

void greedy(detail::WorkGrid& w, bool check) {
  while (const auto m = w.best_merge()) {
    if (!(m->delta < 0.0)) break;
    const double before = w.cost();
    w.apply_merge(*m);
    if (check) check_step(w, before);
  }
}

bool post_sweeps(detail::WorkGrid& w, int sweeps, bool check) {
  bool any = false;
  for (int s = 0; s < sweeps; ++s) {
    bool moved = false;
    for (std::size_t k = 0; k < w.n_variables(); ++k) {
      const double before = w.cost();
      const bool changed = w.improve_values(k) || w.improve_boundaries(k);
      if (changed && check) check_step(w, before);
      moved = moved || changed;
    }
    if (!moved) break;
    any = true;
  }
  return any;
}

}  // namespace

std::vector<bool> freeze_mask(const Dataset& dataset, const std::vector<std::string>& freeze) {
  std::vector<bool> mask(dataset.n_variables(), false);
  for (const auto& name : freeze) mask[dataset.variable_index(name)] = true;
  return mask;
}

std::uint64_t round_seed(std::uint64_t master, int round) {
  return detail::splitmix64(master + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(round + 1));
}

GridModel randomized_initial_model(GridModel::DatasetPtr dataset, std::int64_t max_parts, std::uint64_t seed) {
  if (max_parts < 1) throw std::invalid_argument("randomized_initial_model: max_parts must be >= 1");
  std::mt19937_64 rng(seed);
  const std::int64_t n = dataset->n_records();
  std::vector<std::vector<std::int32_t>> labels(dataset->n_variables());
  for (std::size_t k = 0; k < dataset->n_variables(); ++k) {
    const Column& col = dataset->column(k);
    auto& lab = labels[k];
    lab.assign(col.atom_count(), 0);
    if (col.kind == VariableKind::Categorical) {
      const auto groups = std::min<std::int64_t>(max_parts, static_cast<std::int64_t>(lab.size()));
      std::vector<std::int32_t> order(lab.size());
      std::iota(order.begin(), order.end(), 0);
      detail::shuffle(order, rng);
      for (std::size_t i = 0; i < order.size(); ++i) {
        lab[static_cast<std::size_t>(order[i])] = static_cast<std::int32_t>(static_cast<std::int64_t>(i) % groups);
      }
    } else {
      const auto parts = std::min<std::int64_t>(max_parts, static_cast<std::int64_t>(col.blocks.size()));
      const std::int64_t width = n / parts;
      std::vector<std::int32_t> cuts;
      for (std::int64_t i = 1; i < parts; ++i) {
        std::int64_t target = 1 + (i * n + parts / 2) / parts;
        if (width > 1) {
          target += static_cast<std::int64_t>(detail::uniform_below(rng, static_cast<std::uint64_t>(width))) - width / 2;
        }
        target = std::clamp<std::int64_t>(target, 2, n);
        const std::int32_t b = col.block_of_rank(target);
        const auto& blk = col.blocks[static_cast<std::size_t>(b)];
        const std::int32_t edge = (target - blk.lo_rank <= blk.hi_rank - target) ? b : b + 1;
        if (edge > 0 && edge < static_cast<std::int32_t>(col.blocks.size())) cuts.push_back(edge);
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      std::int32_t part = 0;
      std::size_t next = 0;
      for (std::int32_t b = 0; b < static_cast<std::int32_t>(col.blocks.size()); ++b) {
        while (next < cuts.size() && cuts[next] == b) {
          ++part;
          ++next;
        }
        lab[static_cast<std::size_t>(b)] = part;
      }
    }
  }
  return GridModel::from_atom_labels(std::move(dataset), labels);
}

GridModel greedy_merge_optimize(const GridModel& model, const std::vector<std::string>& freeze) {
  detail::WorkGrid w(model, freeze_mask(model.dataset(), freeze));
  greedy(w, false);
  if (w.merges_applied() == 0) return model;
  return w.to_model();
}

GridModel post_optimize(const GridModel& model, int sweeps, const std::vector<std::string>& freeze) {
  detail::WorkGrid w(model, freeze_mask(model.dataset(), freeze));
  if (!post_sweeps(w, sweeps, false)) return model;
  return w.to_model();
}

OptimizationReport vns_optimize(GridModel::DatasetPtr dataset, const OptimizerConfig& config) {
  if (config.vns_rounds < 1) throw std::invalid_argument("vns_optimize: vns_rounds must be >= 1");
  const auto mask = freeze_mask(*dataset, config.freeze);
  const std::int64_t max_parts = config.max_initial_parts.value_or(
      static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(dataset->n_records())))));
  if (max_parts < 1) throw std::invalid_argument("vns_optimize: max_initial_parts must be >= 1");

  // Frozen variables keep the deterministic initial partition in every round.
  const GridModel deterministic = GridModel::initial_model(dataset, max_parts);

  const auto rounds = static_cast<std::size_t>(config.vns_rounds);
  std::vector<RoundReport> reports(rounds);
  std::vector<std::optional<GridModel>> finals(rounds);

  auto run_round = [&](std::size_t r) {
    const auto start = std::chrono::steady_clock::now();
    RoundReport& rep = reports[r];
    rep.round = static_cast<int>(r);
    rep.seed = round_seed(config.seed, static_cast<int>(r));
    GridModel init = randomized_initial_model(dataset, max_parts, rep.seed);
    if (std::find(mask.begin(), mask.end(), true) != mask.end()) {
      auto parts = init.partitions();
      for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) parts[k] = deterministic.partition(k);
      }
      init = GridModel::from_partitions(dataset, std::move(parts));
    }
    detail::WorkGrid w(init, mask);
    rep.initial_cost = w.cost();
    post_sweeps(w, config.post_opt_sweeps, config.check_steps);
    for (int it = 0; it < kMaxOuterIterations; ++it) {
      const double before = w.cost();
      greedy(w, config.check_steps);
      post_sweeps(w, config.post_opt_sweeps, config.check_steps);
      if (!(w.cost() < before)) break;
    }
    GridModel fin = w.to_model();
    rep.final_cost = cost(fin).total;
    rep.merges = w.merges_applied();
    finals[r].emplace(std::move(fin));
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const auto workers = static_cast<std::size_t>(std::clamp(config.threads, 1, config.vns_rounds));
  if (workers == 1) {
    for (std::size_t r = 0; r < rounds; ++r) run_round(r);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t r = t; r < rounds; r += workers) run_round(r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  GridModel null = GridModel::null_model(dataset);
  const double null_cost = cost(null).total;
  OptimizationReport report{std::move(null), null_cost, std::nullopt, null_cost, std::move(reports)};
  for (std::size_t r = 0; r < rounds; ++r) {
    if (report.rounds[r].final_cost < report.best_cost) {
      report.best_cost = report.rounds[r].final_cost;
      report.best_model = *finals[r];
      report.best_round = static_cast<int>(r);
    }
  }
  return report;
}

}  // namespace datagrid
