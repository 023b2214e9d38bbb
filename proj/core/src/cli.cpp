#include "perim/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "perim/errors.hpp"
#include "perim/metrics.hpp"
#include "perim/mpc.hpp"
#include "perim/report.hpp"
#include "perim/scenario.hpp"
#include "perim/simulate.hpp"

namespace perim {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitPartial = 4;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  std::string controller;
  std::string noise;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int seeds = 10;
  int threads = 0;
  bool debug_lp = false;
};

Scenario prepare_scenario(const CommonArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  if (!args.controller.empty())
    sc.controller.kind = controller_kind_from_string(args.controller);
  if (!args.noise.empty()) sc.noise = NoiseModel::preset(noise_mode_from_string(args.noise));
  if (args.seed_set) sc.seed = args.seed;
  sc.validate();
  return sc;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw config_error("cannot create output directory " + dir + ": " + ec.message());
}

// Cycle-0 prediction model of the scenario, for desk inspection.
void dump_first_model(const Scenario& sc, const std::string& path) {
  const auto intersections = sc.build_intersections();
  MpcConfig config;
  config.horizon = sc.controller.horizon;
  config.mfd = sc.mfd;
  config.intersections = intersections;
  config.cycle_hr = sc.cycle_hr;
  MpcInput input;
  input.n11_hat = sc.n0_total * sc.n0_split;
  input.n12_hat = sc.n0_total * (1.0 - sc.n0_split);
  input.x_hat.resize(intersections.size());
  input.arrivals.resize(intersections.size());
  input.d11.resize(config.horizon);
  input.d12.resize(config.horizon);
  for (std::size_t i = 0; i < intersections.size(); ++i) {
    input.x_hat[i].assign(intersections[i].streams.size(), 0.0);
    input.arrivals[i].assign(intersections[i].streams.size(),
                             std::vector<double>(config.horizon, 0.0));
  }
  for (int l = 0; l < config.horizon; ++l) {
    const auto slice = sc.demand_at(l, intersections);
    input.d11[l] = slice.d11;
    input.d12[l] = slice.d12;
    for (std::size_t i = 0; i < intersections.size(); ++i)
      for (std::size_t m = 0; m < intersections[i].streams.size(); ++m)
        input.arrivals[i][m][l] = slice.arrivals[i][m];
  }
  const MpcModel built = build_mpc(config, input);
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  built.model.reformulate().write_text(out);
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 2 : static_cast<int>(hw);
}

/// Runs `tasks(i)` for i in [0, n) over a small worker pool; exceptions are
/// captured per task and rethrown summaries reported by the caller.
template <typename Fn>
std::vector<std::string> parallel_tasks(int n, int threads, Fn&& fn) {
  std::vector<std::string> errors(n);
  std::atomic<int> next{0};
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int pool = std::max(1, std::min(threads, n));
  std::vector<std::thread> workers;
  workers.reserve(pool);
  for (int t = 0; t < pool; ++t) workers.emplace_back(body);
  for (auto& w : workers) w.join();
  return errors;
}

int cmd_run(const CommonArgs& args) {
  const Scenario sc = prepare_scenario(args);
  ensure_dir(args.out_dir);
  if (args.debug_lp) dump_first_model(sc, args.out_dir + "/model_cycle0.lp");

  const RunLog log = run_scenario(sc);
  write_timeseries_csv(log, args.out_dir + "/timeseries.csv");
  if (!log.complete) {
    std::cerr << "run aborted: " << log.abort_reason << "\n";
    return kExitSolver;
  }
  write_summary_json(summarize(log, sc), args.out_dir + "/summary.json");
  return kExitOk;
}

int cmd_compare(const CommonArgs& args) {
  const Scenario base = prepare_scenario(args);
  ensure_dir(args.out_dir);
  const std::vector<ControllerKind> kinds = {ControllerKind::mpc, ControllerKind::stochastic,
                                             ControllerKind::pid, ControllerKind::bangbang};
  struct Task {
    ControllerKind kind;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto kind : kinds)
    for (int s = 0; s < args.seeds; ++s)
      tasks.push_back({kind, base.seed + static_cast<std::uint64_t>(s)});

  std::vector<RunSummary> results(tasks.size());
  std::vector<char> ok(tasks.size(), 0);
  const auto errors = parallel_tasks(
      static_cast<int>(tasks.size()), worker_count(args.threads), [&](int t) {
        Scenario sc = base;
        sc.controller.kind = tasks[t].kind;
        sc.seed = tasks[t].seed;
        const std::string dir =
            args.out_dir + "/" + to_string(tasks[t].kind) + "/seed" + std::to_string(tasks[t].seed);
        ensure_dir(dir);
        const RunLog log = run_scenario(sc);
        write_timeseries_csv(log, dir + "/timeseries.csv");
        if (!log.complete) throw solve_error(log.abort_reason);
        const RunSummary s = summarize(log, sc);
        write_summary_json(s, dir + "/summary.json");
        results[t] = s;
        ok[t] = 1;
      });

  std::vector<ComparisonRow> rows;
  bool any_failed = false;
  for (std::size_t c = 0; c < kinds.size(); ++c) {
    std::vector<RunSummary> per_seed;
    for (std::size_t t = 0; t < tasks.size(); ++t)
      if (tasks[t].kind == kinds[c] && ok[t]) per_seed.push_back(results[t]);
    if (per_seed.size() != static_cast<std::size_t>(args.seeds)) any_failed = true;
    if (!per_seed.empty()) rows.push_back({to_string(kinds[c]), mean_summary(per_seed)});
  }
  write_comparison_csv(rows, args.out_dir + "/table.csv");
  for (std::size_t t = 0; t < errors.size(); ++t)
    if (!errors[t].empty())
      std::cerr << "run " << to_string(tasks[t].kind) << "/seed" << tasks[t].seed
                << " failed: " << errors[t] << "\n";
  return any_failed ? kExitPartial : kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& penetrations,
              const std::string& controllers) {
  Scenario base = prepare_scenario(args);
  base.noise = NoiseModel::preset(NoiseMode::penetration);
  ensure_dir(args.out_dir);

  std::vector<double> ps;
  {
    std::stringstream ss(penetrations);
    std::string tok;
    while (std::getline(ss, tok, ',')) ps.push_back(std::stod(tok));
    if (ps.empty()) throw config_error("empty penetration list");
    for (double p : ps)
      if (!(p > 0.0) || p > 1.0) throw config_error("penetrations must lie in (0, 1]");
  }
  std::vector<ControllerKind> kinds;
  {
    std::stringstream ss(controllers);
    std::string tok;
    while (std::getline(ss, tok, ','))
      kinds.push_back(controller_kind_from_string(tok));
    if (kinds.empty()) throw config_error("empty controller list");
  }

  struct Task {
    double p;
    ControllerKind kind;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (double p : ps)
    for (const auto kind : kinds)
      for (int s = 0; s < args.seeds; ++s)
        tasks.push_back({p, kind, base.seed + static_cast<std::uint64_t>(s)});

  std::vector<RunSummary> results(tasks.size());
  std::vector<char> ok(tasks.size(), 0);
  const auto errors = parallel_tasks(
      static_cast<int>(tasks.size()), worker_count(args.threads), [&](int t) {
        Scenario sc = base;
        sc.penetration = tasks[t].p;
        sc.controller.kind = tasks[t].kind;
        sc.seed = tasks[t].seed;
        const RunLog log = run_scenario(sc);
        if (!log.complete) throw solve_error(log.abort_reason);
        results[t] = summarize(log, sc);
        ok[t] = 1;
      });

  std::vector<PenetrationRow> rows;
  bool any_failed = false;
  for (double p : ps)
    for (const auto kind : kinds) {
      std::vector<RunSummary> per_seed;
      for (std::size_t t = 0; t < tasks.size(); ++t)
        if (tasks[t].p == p && tasks[t].kind == kind && ok[t]) per_seed.push_back(results[t]);
      if (per_seed.size() != static_cast<std::size_t>(args.seeds)) any_failed = true;
      if (!per_seed.empty()) rows.push_back({p, to_string(kind), mean_summary(per_seed)});
    }
  write_penetration_csv(rows, args.out_dir + "/penetration.csv");
  for (std::size_t t = 0; t < errors.size(); ++t)
    if (!errors[t].empty())
      std::cerr << "run p=" << tasks[t].p << " " << to_string(tasks[t].kind) << "/seed"
                << tasks[t].seed << " failed: " << errors[t] << "\n";
  return any_failed ? kExitPartial : kExitOk;
}

// Smallest demand peak whose uncontrolled run overshoots n_cr by the target
// fraction. The internal-demand peak keeps the base profile's surge ratio.
int cmd_calibrate(const CommonArgs& args, double overshoot) {
  Scenario sc = prepare_scenario(args);
  ensure_dir(args.out_dir);
  sc.controller.kind = ControllerKind::fixed;
  sc.noise = NoiseModel::preset(NoiseMode::none);

  const double target = sc.mfd.n_cr * (1.0 + overshoot);
  auto max_accumulation = [&](double peak) {
    Scenario trial = sc;
    trial.demand.peak = peak;
    trial.demand.d11_peak = trial.demand.d11_base * (peak / trial.demand.base);
    const RunLog log = run_scenario(trial);
    double worst = 0.0;
    for (const auto& rec : log.cycles) worst = std::max(worst, rec.n11_true + rec.n12_true);
    return worst;
  };

  double lo = sc.demand.base;
  double hi = lo;
  double reached = max_accumulation(hi);
  int guard = 0;
  while (reached < target && guard++ < 24) {
    hi *= 1.3;
    reached = max_accumulation(hi);
  }
  if (reached < target) {
    std::cerr << "calibration failed: cannot reach the overshoot target\n";
    return kExitPartial;
  }
  for (int it = 0; it < 24; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (max_accumulation(mid) >= target) hi = mid;
    else lo = mid;
  }
  sc.demand.peak = hi;
  sc.demand.d11_peak = sc.demand.d11_base * (hi / sc.demand.base);
  std::cout << "calibrated peak " << sc.demand.peak << " veh/hr (d11 peak " << sc.demand.d11_peak
            << "), max uncontrolled accumulation " << max_accumulation(hi) << " veh\n";
  save_scenario(sc, args.out_dir + "/calibrated.json");
  return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"perimeter-control laboratory"};
  app.require_subcommand(1);

  CommonArgs args;
  double overshoot = 0.2;
  std::string penetrations = "0.05,0.1,0.25,0.5,1.0";
  std::string controllers = "mpc,stochastic";

  auto add_common = [&](CLI::App* cmd, bool with_seed, bool with_seeds) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--noise", args.noise, "noise preset: none|moderate|strong|penetration");
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
    if (with_seed)
      cmd->add_option("--seed", args.seed, "run seed")->each([&](const std::string&) {
        args.seed_set = true;
      });
    if (with_seeds) cmd->add_option("--seeds", args.seeds, "number of seeds (base = scenario seed)");
  };

  CLI::App* run = app.add_subcommand("run", "one scenario, one controller");
  add_common(run, true, false);
  run->add_option("--controller", args.controller, "mpc|stochastic|pid|bangbang|fixed");
  run->add_flag("--debug-lp", args.debug_lp, "dump the cycle-0 prediction model");

  CLI::App* compare = app.add_subcommand("compare", "all four controllers, shared seeds");
  add_common(compare, true, true);

  CLI::App* sweep = app.add_subcommand("sweep", "penetration grid x controllers x seeds");
  add_common(sweep, true, true);
  sweep->add_option("--penetrations", penetrations, "comma-separated rates in (0,1]");
  sweep->add_option("--controllers", controllers, "comma-separated controller list");

  CLI::App* calibrate = app.add_subcommand("calibrate", "find the demand peak for the overshoot target");
  add_common(calibrate, true, false);
  calibrate->add_option("--overshoot", overshoot, "uncontrolled overshoot above n_cr (fraction)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(args);
    if (compare->parsed()) return cmd_compare(args);
    if (sweep->parsed()) return cmd_sweep(args, penetrations, controllers);
    if (calibrate->parsed()) return cmd_calibrate(args, overshoot);
    return kExitConfig;
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const solve_error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

} // namespace perim
