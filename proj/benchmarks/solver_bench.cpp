// Timing harness for the optimization stack: MFD evaluation, one
// receding-horizon solve, and one combined two-stage solve, with phase
// breakdowns. Run from the repository root:
//   ./build/benchmarks/perim_bench [scenario.json]

#include <chrono>
#include <cstdio>
#include <string>

#include "perim/mpc.hpp"
#include "perim/scenario.hpp"
#include "perim/simulate.hpp"
#include "perim/stochastic.hpp"

using namespace perim;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

MpcInput nominal_input(const Scenario& sc, const std::vector<IntersectionSpec>& inters,
                       int horizon) {
  MpcInput in;
  in.n11_hat = 2400.0;
  in.n12_hat = 500.0;
  in.d11.resize(horizon);
  in.d12.resize(horizon);
  in.x_hat.resize(inters.size());
  in.arrivals.resize(inters.size());
  for (std::size_t i = 0; i < inters.size(); ++i) {
    in.x_hat[i].assign(inters[i].streams.size(), 0.0);
    in.x_hat[i][1] = 12.0;
    in.x_hat[i][6] = 9.0;
    in.x_hat[i][0] = 6.0;
    in.arrivals[i].assign(inters[i].streams.size(), std::vector<double>(horizon, 0.0));
  }
  for (int l = 0; l < horizon; ++l) {
    const auto slice = sc.demand_at(45 + l, inters);
    in.d11[l] = slice.d11;
    in.d12[l] = slice.d12;
    for (std::size_t i = 0; i < inters.size(); ++i)
      for (std::size_t m = 0; m < inters[i].streams.size(); ++m)
        in.arrivals[i][m][l] = slice.arrivals[i][m];
  }
  return in;
}

} // namespace

int main(int argc, char** argv) {
  Scenario sc;
  if (argc > 1) sc = load_scenario(argv[1]);
  else {
    sc.demand.peak = 15000.0;
    sc.demand.d11_peak = 3200.0;
    sc.demand.side_base = 700.0;
  }
  const auto inters = sc.build_intersections();

  { // MFD evaluation throughput
    const auto t0 = Clock::now();
    double sink = 0.0;
    const int n = 10000000;
    for (int i = 0; i < n; ++i) sink += mfd_outflow(sc.mfd, static_cast<double>(i % 9000));
    const double dt = seconds_since(t0);
    std::printf("mfd_outflow:        %8.1f Meval/s (sink %.0f)\n", n / dt / 1e6, sink);
  }

  MpcConfig config;
  config.horizon = sc.controller.horizon;
  config.mfd = sc.mfd;
  config.intersections = inters;
  config.cycle_hr = sc.cycle_hr;
  const MpcInput input = nominal_input(sc, inters, config.horizon);

  { // deterministic receding-horizon solve
    const auto t0 = Clock::now();
    const MpcModel built = build_mpc(config, input);
    const double t_build = seconds_since(t0);
    const auto t1 = Clock::now();
    const auto ref = built.model.reformulate_mapped();
    const double t_ref = seconds_since(t1);
    const auto t2 = Clock::now();
    lp::Basis basis = built.model.crash_basis(ref);
    const double t_crash = seconds_since(t2);
    const auto t3 = Clock::now();
    const lp::Solution sol = lp::solve_lp(ref.lp, basis);
    const double t_solve = seconds_since(t3);
    std::printf("mpc (L=%d, %d ints): rows=%d cols=%d  build %.0f ms, reformulate %.0f ms, "
                "crash %.0f ms, solve %.0f ms (%ld iters, %s)\n",
                config.horizon, static_cast<int>(inters.size()), ref.lp.num_rows(),
                ref.lp.num_cols(), t_build * 1e3, t_ref * 1e3, t_crash * 1e3, t_solve * 1e3,
                sol.iterations, lp::to_string(sol.status));
  }

  { // combined two-stage solve
    StochasticConfig scfg;
    scfg.mpc = config;
    scfg.sample_size = 20;
    scfg.seed = 12345;
    SampleDistributions dist = SampleDistributions::exact(input);
    dist.n11_std_frac = 0.15;
    dist.n12_std_frac = 0.15;
    for (auto& per : dist.queue_std_frac)
      for (double& v : per) v = 0.15;
    dist.demand_std_frac = 0.30;

    const auto t0 = Clock::now();
    const MpcOutput out = solve_stochastic(scfg, dist);
    const double t_total = seconds_since(t0);
    std::printf("two-stage (R=20):   total %.0f ms (%ld combined iters, J=%.1f)\n", t_total * 1e3,
                out.iterations, out.objective);
    std::fflush(stdout);
  }
  return 0;
}
