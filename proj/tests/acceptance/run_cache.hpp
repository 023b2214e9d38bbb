#pragma once

// Disk cache of simulation runs keyed by scenario content + controller +
// seed + a build stamp. Criteria share runs across processes; a fresh build
// invalidates everything (the stamp changes).

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "perim/errors.hpp"
#include "perim/metrics.hpp"
#include "perim/report.hpp"
#include "perim/scenario.hpp"
#include "perim/simulate.hpp"

namespace accept {

namespace fs = std::filesystem;
using namespace perim;

inline std::string cache_dir() {
  if (const char* env = std::getenv("PERIM_ACCEPT_CACHE")) return env;
  return "acceptance_cache";
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct CachedRun {
  RunSummary summary;
  std::vector<double> accumulation; // n11+n12 per cycle
  std::vector<double> solve_times;
  double wall_seconds = 0.0;
};

inline std::string run_key(const Scenario& sc) {
  // parameters of other controllers must not invalidate this run's key
  Scenario norm = sc;
  auto& c = norm.controller;
  const bool optimizing = c.kind == ControllerKind::mpc || c.kind == ControllerKind::stochastic;
  if (optimizing) {
    c.pid_kp = c.pid_ki = c.pid_kd = 0.0;
    c.bang_band = 0.0;
    c.fixed_green = 0.0;
    if (c.kind != ControllerKind::stochastic) c.sample_size = 0;
  } else {
    c.horizon = 0;
    c.sample_size = 0;
    c.fixed_green = 0.0;
    if (c.kind != ControllerKind::pid) c.pid_kp = c.pid_ki = c.pid_kd = 0.0;
    if (c.kind != ControllerKind::bangbang) c.bang_band = 0.0;
  }
  std::ostringstream os;
  os << scenario_to_json(norm) << "|" << __DATE__ << __TIME__;
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

/// Runs the scenario (or loads the cached result) and returns the pieces the
/// criteria consume. Thread-safe for distinct scenarios; concurrent writers
/// of the same key produce identical files.
inline CachedRun run_cached(const Scenario& sc) {
  const std::string key = run_key(sc);
  const fs::path dir = fs::path(cache_dir()) / key;
  const fs::path csv = dir / "timeseries.csv";
  const fs::path meta = dir / "wall.txt";
  CachedRun out;
  if (fs::exists(csv)) {
    const TimeseriesData data = read_timeseries_csv(csv.string());
    out.summary = summary_from_timeseries(data, sc);
    const int c_n11 = data.column("n11_true");
    const int c_n12 = data.column("n12_true");
    const int c_t = data.column("solve_time_s");
    for (const auto& row : data.rows) {
      out.accumulation.push_back(row[c_n11] + row[c_n12]);
      out.solve_times.push_back(row[c_t]);
    }
    if (std::ifstream in(meta); in) in >> out.wall_seconds;
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const RunLog log = run_scenario(sc);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!log.complete) throw solve_error("run aborted: " + log.abort_reason);
  fs::create_directories(dir);
  const fs::path tmp = dir / "timeseries.tmp";
  write_timeseries_csv(log, tmp.string());
  std::error_code ec;
  fs::rename(tmp, csv, ec); // atomic publish; losers of the race overwrite equal bytes
  {
    std::ofstream mo(meta);
    mo << out.wall_seconds << "\n";
  }
  out.summary = summarize(log, sc);
  for (const auto& rec : log.cycles) {
    out.accumulation.push_back(rec.n11_true + rec.n12_true);
    out.solve_times.push_back(rec.solve_time_s);
  }
  return out;
}

/// Fans scenarios across two workers (the box has two cores) and returns
/// results in input order.
inline std::vector<CachedRun> run_all(std::vector<Scenario> scenarios) {
  std::vector<CachedRun> results(scenarios.size());
  std::vector<std::string> errors(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenarios.size()) return;
      try {
        results[i] = run_cached(scenarios[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned pool = std::min<std::size_t>(scenarios.size(),
                                              std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < pool; ++t) workers.emplace_back(body);
  for (auto& w : workers) w.join();
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw solve_error("scenario run failed: " + errors[i]);
  return results;
}

} // namespace accept
