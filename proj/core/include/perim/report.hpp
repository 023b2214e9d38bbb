#pragma once

#include <string>
#include <vector>

#include "perim/metrics.hpp"
#include "perim/simulate.hpp"

namespace perim {

/// Writes the per-cycle time series. Column order is part of the interface:
/// cycle, n11_true, n12_true, n11_meas, n12_meas, beta21, beta12,
/// total_queue, queue_i{1..|I|}, g_i{1..|I|}_p{1..4}, solve_time_s.
/// Values are printed with round-trip precision.
void write_timeseries_csv(const RunLog& log, const std::string& path);

/// Minimal parsed form of a timeseries file, enough to recompute a summary.
struct TimeseriesData {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const; ///< -1 when absent
};

TimeseriesData read_timeseries_csv(const std::string& path);

/// Recomputes the run summary from an exported time series (column subset).
RunSummary summary_from_timeseries(const TimeseriesData& data, const Scenario& scenario);

/// summary.json with RunSummary field names as keys, 9 significant digits.
void write_summary_json(const RunSummary& summary, const std::string& path);
RunSummary read_summary_json(const std::string& path);

struct ComparisonRow {
  std::string controller;
  RunSummary summary;
};

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path);

struct PenetrationRow {
  double penetration = 0.0;
  std::string controller;
  RunSummary summary;
};

void write_penetration_csv(const std::vector<PenetrationRow>& rows, const std::string& path);

} // namespace perim
