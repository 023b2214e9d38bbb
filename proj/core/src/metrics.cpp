#include "perim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace perim {

namespace {
double cycle_queue_total(const CycleRecord& rec) {
  double q = 0.0;
  for (const auto& per : rec.queues)
    for (double v : per) q += v;
  return q;
}
} // namespace

double total_travel_cost(const RunLog& log, double cycle_hr) {
  double cost = 0.0;
  for (const auto& rec : log.cycles)
    cost += cycle_hr * (rec.n11_true + rec.n12_true + cycle_queue_total(rec));
  return cost;
}

double total_variation(std::span<const double> series) {
  if (series.size() < 2)
    throw std::invalid_argument("total_variation needs at least two points");
  double tv = 0.0;
  for (std::size_t k = 1; k < series.size(); ++k) tv += std::abs(series[k] - series[k - 1]);
  return tv;
}

RunSummary summarize(const RunLog& log, const Scenario& scenario) {
  RunSummary s;
  const double C = scenario.cycle_hr;
  std::vector<double> accumulation;
  accumulation.reserve(log.cycles.size());
  double solve_total = 0.0;
  for (const auto& rec : log.cycles) {
    const double n = rec.n11_true + rec.n12_true;
    accumulation.push_back(n);
    s.network_travel_time += C * n;
    s.intersection_delay += C * cycle_queue_total(rec);
    solve_total += rec.solve_time_s;
  }
  s.total_travel_cost = s.network_travel_time + s.intersection_delay;
  if (accumulation.size() >= 2) s.accumulation_total_variation = total_variation(accumulation);
  const int lo = std::min<int>(scenario.plateau_start, accumulation.size());
  const int hi = std::min<int>(scenario.plateau_end, static_cast<int>(accumulation.size()) - 1);
  int count = 0;
  for (int k = lo; k <= hi; ++k) {
    const double dev = std::abs(accumulation[k] - scenario.mfd.n_cr);
    s.plateau_mean_abs_dev += dev;
    s.plateau_max_abs_dev = std::max(s.plateau_max_abs_dev, dev);
    ++count;
  }
  if (count > 0) s.plateau_mean_abs_dev /= count;
  if (!log.cycles.empty()) s.mean_solve_time_s = solve_total / log.cycles.size();
  return s;
}

RunSummary mean_summary(const std::vector<RunSummary>& summaries) {
  RunSummary m;
  if (summaries.empty()) return m;
  const double w = 1.0 / static_cast<double>(summaries.size());
  for (const auto& s : summaries) {
    m.total_travel_cost += w * s.total_travel_cost;
    m.network_travel_time += w * s.network_travel_time;
    m.intersection_delay += w * s.intersection_delay;
    m.accumulation_total_variation += w * s.accumulation_total_variation;
    m.plateau_mean_abs_dev += w * s.plateau_mean_abs_dev;
    m.plateau_max_abs_dev += w * s.plateau_max_abs_dev;
    m.mean_solve_time_s += w * s.mean_solve_time_s;
  }
  return m;
}

} // namespace perim
