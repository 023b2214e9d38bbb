#include "perim/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "perim/errors.hpp"

namespace perim {

using nlohmann::json;

namespace {

std::string fmt_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_sig9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

} // namespace

void write_timeseries_csv(const RunLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  const int nI = static_cast<int>(log.intersections.size());
  out << "cycle,n11_true,n12_true,n11_meas,n12_meas,beta21,beta12,total_queue";
  for (int i = 1; i <= nI; ++i) out << ",queue_i" << i;
  for (int i = 1; i <= nI; ++i)
    for (std::size_t p = 1; p <= log.intersections[i - 1].phases.size(); ++p)
      out << ",g_i" << i << "_p" << p;
  out << ",solve_time_s\n";
  for (std::size_t k = 0; k < log.cycles.size(); ++k) {
    const auto& rec = log.cycles[k];
    double total_queue = 0.0;
    std::vector<double> per_inter(nI, 0.0);
    for (int i = 0; i < nI; ++i)
      for (double v : rec.queues[i]) {
        per_inter[i] += v;
        total_queue += v;
      }
    out << k << ',' << fmt_full(rec.n11_true) << ',' << fmt_full(rec.n12_true) << ','
        << fmt_full(rec.n11_meas) << ',' << fmt_full(rec.n12_meas) << ',' << fmt_full(rec.beta21)
        << ',' << fmt_full(rec.beta12) << ',' << fmt_full(total_queue);
    for (int i = 0; i < nI; ++i) out << ',' << fmt_full(per_inter[i]);
    for (int i = 0; i < nI; ++i)
      for (double g : rec.greens.g[i]) out << ',' << fmt_full(g);
    out << ',' << fmt_full(rec.solve_time_s) << '\n';
  }
}

int TimeseriesData::column(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return static_cast<int>(c);
  return -1;
}

TimeseriesData read_timeseries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path);
  TimeseriesData data;
  std::string line;
  if (!std::getline(in, line)) throw config_error("empty timeseries file: " + path);
  std::stringstream header(line);
  std::string cell;
  while (std::getline(header, cell, ',')) data.columns.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<double> values;
    values.reserve(data.columns.size());
    while (std::getline(row, cell, ',')) values.push_back(std::strtod(cell.c_str(), nullptr));
    if (values.size() != data.columns.size())
      throw config_error("ragged timeseries row in " + path);
    data.rows.push_back(std::move(values));
  }
  return data;
}

RunSummary summary_from_timeseries(const TimeseriesData& data, const Scenario& scenario) {
  const int c_n11 = data.column("n11_true");
  const int c_n12 = data.column("n12_true");
  const int c_q = data.column("total_queue");
  const int c_t = data.column("solve_time_s");
  if (c_n11 < 0 || c_n12 < 0 || c_q < 0 || c_t < 0)
    throw config_error("timeseries file lacks required columns");
  RunSummary s;
  std::vector<double> accumulation;
  accumulation.reserve(data.rows.size());
  double solve_total = 0.0;
  for (const auto& row : data.rows) {
    const double n = row[c_n11] + row[c_n12];
    accumulation.push_back(n);
    s.network_travel_time += scenario.cycle_hr * n;
    s.intersection_delay += scenario.cycle_hr * row[c_q];
    solve_total += row[c_t];
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
  if (!data.rows.empty()) s.mean_solve_time_s = solve_total / data.rows.size();
  return s;
}

namespace {
json summary_json(const RunSummary& s) {
  auto num = [](double v) { return json::parse(fmt_sig9(v)); };
  json j;
  j["total_travel_cost"] = num(s.total_travel_cost);
  j["network_travel_time"] = num(s.network_travel_time);
  j["intersection_delay"] = num(s.intersection_delay);
  j["accumulation_total_variation"] = num(s.accumulation_total_variation);
  j["plateau_mean_abs_dev"] = num(s.plateau_mean_abs_dev);
  j["plateau_max_abs_dev"] = num(s.plateau_max_abs_dev);
  j["mean_solve_time_s"] = num(s.mean_solve_time_s);
  return j;
}
} // namespace

void write_summary_json(const RunSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  out << summary_json(summary).dump(2) << "\n";
}

RunSummary read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw config_error(std::string("summary JSON parse error: ") + e.what());
  }
  RunSummary s;
  s.total_travel_cost = j.value("total_travel_cost", 0.0);
  s.network_travel_time = j.value("network_travel_time", 0.0);
  s.intersection_delay = j.value("intersection_delay", 0.0);
  s.accumulation_total_variation = j.value("accumulation_total_variation", 0.0);
  s.plateau_mean_abs_dev = j.value("plateau_mean_abs_dev", 0.0);
  s.plateau_max_abs_dev = j.value("plateau_max_abs_dev", 0.0);
  s.mean_solve_time_s = j.value("mean_solve_time_s", 0.0);
  return s;
}

namespace {
void write_summary_columns(std::ofstream& out, const RunSummary& s) {
  out << ',' << fmt_sig9(s.total_travel_cost) << ',' << fmt_sig9(s.network_travel_time) << ','
      << fmt_sig9(s.intersection_delay) << ',' << fmt_sig9(s.accumulation_total_variation) << ','
      << fmt_sig9(s.plateau_mean_abs_dev) << ',' << fmt_sig9(s.plateau_max_abs_dev) << ','
      << fmt_sig9(s.mean_solve_time_s) << '\n';
}
constexpr const char* kSummaryHeader =
    "total_travel_cost,network_travel_time,intersection_delay,"
    "accumulation_total_variation,plateau_mean_abs_dev,plateau_max_abs_dev,mean_solve_time_s";
} // namespace

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  out << "controller," << kSummaryHeader << "\n";
  for (const auto& row : rows) {
    out << row.controller;
    write_summary_columns(out, row.summary);
  }
}

void write_penetration_csv(const std::vector<PenetrationRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  out << "penetration,controller," << kSummaryHeader << "\n";
  for (const auto& row : rows) {
    out << fmt_sig9(row.penetration) << ',' << row.controller;
    write_summary_columns(out, row.summary);
  }
}

} // namespace perim
