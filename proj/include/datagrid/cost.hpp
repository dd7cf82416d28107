#pragma once

#include <cstdint>

#include "datagrid/grid.hpp"

namespace datagrid {

/// Terms of the MAP cost (negative log posterior), in nats.
struct CostBreakdown {
  double prior_numerical_part_counts = 0.0;     // sum over numerical k of log N
  double prior_categorical_group_counts = 0.0;  // sum over categorical k of log V_k
  double prior_partition_choice = 0.0;          // sum over categorical k of log B(V_k, J_k)
  double prior_cell_distribution = 0.0;         // log C(N + G - 1, G - 1)
  double prior_group_value_distribution = 0.0;  // sum log C(N_j + m_j - 1, m_j - 1), categorical
  double likelihood_cells = 0.0;                // log N! - sum over cells of log N_cell!
  double likelihood_within_parts = 0.0;         // sum log N_j! - sum over values of log n_v!
  double total = 0.0;

  double component_sum() const {
    return prior_numerical_part_counts + prior_categorical_group_counts + prior_partition_choice +
           prior_cell_distribution + prior_group_value_distribution + likelihood_cells + likelihood_within_parts;
  }
};

CostBreakdown cost(const GridModel& model);

/// cost(after merge) - cost(model), evaluated from the affected terms only.
double delta_merge(const GridModel& model, std::size_t k, std::size_t a, std::size_t b);

/// cost(after moving value_id from `from` to `to`) - cost(model).
double delta_move(const GridModel& model, std::size_t k, std::int32_t value_id, std::size_t from, std::size_t to);

/// cost(after move_boundary) - cost(model).
double delta_boundary(const GridModel& model, std::size_t k, std::size_t boundary, std::int64_t new_rank);

/// log C(N_j + m_j - 1, m_j - 1); zero for an empty group.
double group_value_term(std::int64_t part_total, std::int64_t values_in_part);

}  // namespace datagrid
