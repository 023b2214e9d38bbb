#pragma once

#include <span>
#include <string>
#include <vector>

#include "perim/scenario.hpp"
#include "perim/simulate.hpp"

namespace perim {

/// Realized run metrics, all computed from true plant values.
/// total_travel_cost = network_travel_time + intersection_delay exactly.
struct RunSummary {
  double total_travel_cost = 0.0;       ///< veh*hr
  double network_travel_time = 0.0;     ///< veh*hr
  double intersection_delay = 0.0;      ///< veh*hr
  double accumulation_total_variation = 0.0; ///< veh
  double plateau_mean_abs_dev = 0.0;    ///< mean |n - n_cr| over the window
  double plateau_max_abs_dev = 0.0;
  double mean_solve_time_s = 0.0;
};

/// C * sum over cycles of (n11 + n12 + total queues), start-of-cycle states.
double total_travel_cost(const RunLog& log, double cycle_hr);

/// Sum of |n(k+1) - n(k)|; throws on series shorter than two points.
double total_variation(std::span<const double> series);

RunSummary summarize(const RunLog& log, const Scenario& scenario);

/// Per-run mean of several summaries (used for seed averaging).
RunSummary mean_summary(const std::vector<RunSummary>& summaries);

} // namespace perim
