#include "doctest.h"

#include <cmath>
#include <numeric>

#include "perim/errors.hpp"
#include "perim/metrics.hpp"
#include "perim/simulate.hpp"

using namespace perim;

namespace {
Scenario small_scenario() {
  Scenario sc;
  sc.duration = 30;
  sc.plateau_start = 10;
  sc.plateau_end = 25;
  sc.n_intersections = 4;
  sc.demand.peak = 9000.0;
  sc.demand.d11_peak = 2600.0;
  sc.controller.kind = ControllerKind::pid;
  sc.seed = 11;
  return sc;
}
} // namespace

TEST_CASE("demand profile hits base, peak, and conserves the inflow split") {
  const Scenario sc = small_scenario();
  const auto inters = sc.build_intersections();

  const auto at0 = sc.demand_at(0, inters);
  CHECK(sc.demand.entering_at(0.0) == doctest::Approx(sc.demand.base));
  CHECK(at0.d11 == doctest::Approx(sc.demand.d11_base));
  CHECK(at0.d12 == doctest::Approx(at0.d11));

  const double mid = 0.5 * (sc.demand.ramp_up_end + sc.demand.plateau_end);
  CHECK(sc.demand.entering_at(mid) == doctest::Approx(sc.demand.peak));

  for (double t : {0.0, 10.0, 27.5, 50.0, 83.0}) {
    const auto slice = sc.demand_at(t, inters);
    double inflow_sum = 0.0;
    for (std::size_t i = 0; i < inters.size(); ++i)
      for (std::size_t m = 0; m < inters[i].streams.size(); ++m)
        if (inters[i].streams[m].cls == StreamClass::inflow) inflow_sum += slice.arrivals[i][m];
    CHECK(std::abs(inflow_sum - sc.demand.entering_at(std::min(t, 29.0))) <= 1e-9);
  }
}

TEST_CASE("measurement noise is unbiased with the requested spread") {
  Rng rng(99);
  const double sigma = 0.15;
  const double value = 3000.0;
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = noisy_measurement(value, sigma, rng);
    CHECK(m >= 0.0);
    sum += m;
    sq += m * m;
  }
  const double mean = sum / n;
  const double std_dev = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean - value) <= 3.0 * sigma * value / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(std_dev - sigma * value) <= 0.05 * sigma * value);
}

TEST_CASE("zero sigma returns the exact value") {
  Rng rng(1);
  CHECK(noisy_measurement(123.4, 0.0, rng) == 123.4);
}

TEST_CASE("penetration sigma follows the scaled-count estimator") {
  CHECK(penetration_sigma(1.0, 3000.0) == 0.0);
  CHECK(penetration_sigma(0.25, 3000.0) == doctest::Approx(std::sqrt(0.75 / 750.0)));
  CHECK(penetration_sigma(0.25, 10.0) == doctest::Approx(std::sqrt(0.75 / 2.5)));
  // short queues are hit much harder than accumulations
  CHECK(penetration_sigma(0.25, 10.0) > 10.0 * penetration_sigma(0.25, 3000.0));
  CHECK_THROWS_AS(penetration_sigma(0.0, 10.0), config_error);
}

TEST_CASE("identical seeds give identical runs") {
  const Scenario sc = small_scenario();
  auto c1 = make_controller(sc, sc.build_intersections());
  auto c2 = make_controller(sc, sc.build_intersections());
  const RunLog a = simulate(sc, *c1);
  const RunLog b = simulate(sc, *c2);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t k = 0; k < a.cycles.size(); ++k) {
    CHECK(a.cycles[k].n11_true == b.cycles[k].n11_true);
    CHECK(a.cycles[k].n12_true == b.cycles[k].n12_true);
    CHECK(a.cycles[k].n11_meas == b.cycles[k].n11_meas);
    CHECK(a.cycles[k].beta21 == b.cycles[k].beta21);
    CHECK(a.cycles[k].queues == b.cycles[k].queues);
    CHECK(a.cycles[k].greens.g == b.cycles[k].greens.g);
  }
}

TEST_CASE("drain-only dynamics empty the network") {
  Scenario sc = small_scenario();
  sc.demand.base = 0.0;
  sc.demand.peak = 0.0;
  sc.demand.d11_base = 0.0;
  sc.demand.d11_peak = 0.0;
  sc.demand.side_base = 0.0;
  sc.duration = 60;
  const RunLog log = run_scenario(sc);
  REQUIRE(log.complete);
  for (const auto& rec : log.cycles) {
    for (const auto& per : rec.queues)
      for (double q : per) CHECK(q == 0.0);
  }
  const auto& last = log.cycles.back();
  CHECK(last.n11_true + last.n12_true < 0.15 * sc.n0_total);
  for (std::size_t k = 1; k < log.cycles.size(); ++k)
    CHECK(log.cycles[k].n11_true <= log.cycles[k - 1].n11_true + 1e-9);
}

TEST_CASE("plant-side conservation holds along noisy trajectories") {
  Scenario sc = small_scenario();
  sc.noise = NoiseModel::preset(NoiseMode::moderate);
  sc.duration = 40;
  const RunLog log = run_scenario(sc);
  REQUIRE(log.complete);
  const double C = sc.cycle_hr;
  for (std::size_t k = 0; k + 1 < log.cycles.size(); ++k) {
    const auto& rec = log.cycles[k];
    const auto& next = log.cycles[k + 1];
    if (next.n11_true == 0.0 || next.n12_true == 0.0) continue; // clamp active
    const auto [o11, o12] =
        split_outflow(sc.mfd, NetworkState{rec.n11_true, rec.n12_true});
    (void)o12;
    const double lhs = (next.n11_true + next.n12_true) - (rec.n11_true + rec.n12_true);
    const double rhs =
        (rec.d11 + rec.d12 + rec.beta21 - rec.beta12 - rec.outflow_scale * o11) * C;
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
    // measured values stay nonnegative
    CHECK(rec.n11_meas >= 0.0);
    CHECK(rec.n12_meas >= 0.0);
  }
}

TEST_CASE("penetration mode sharpens measurements as p grows") {
  Scenario sc = small_scenario();
  sc.noise = NoiseModel::preset(NoiseMode::penetration);
  sc.duration = 20;
  sc.plateau_start = 5;
  sc.plateau_end = 15;
  auto mean_abs_err = [&](double p) {
    Scenario trial = sc;
    trial.penetration = p;
    const RunLog log = run_scenario(trial);
    double err = 0.0;
    for (const auto& rec : log.cycles)
      err += std::abs(rec.n11_meas - rec.n11_true) + std::abs(rec.n12_meas - rec.n12_true);
    return err / log.cycles.size();
  };
  const double coarse = mean_abs_err(0.05);
  const double fine = mean_abs_err(1.0);
  CHECK(fine == doctest::Approx(0.0));
  CHECK(coarse > 1.0);
}

TEST_CASE("demand factors are seeded and overridable") {
  Scenario sc = small_scenario();
  const auto a = sc.build_intersections();
  const auto b = sc.build_intersections();
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i].demand_factor == b[i].demand_factor);
  for (const auto& inter : a) {
    CHECK(inter.demand_factor >= 0.7);
    CHECK(inter.demand_factor <= 1.3);
  }
  sc.overrides.push_back({2, 1.11, -1.0, -1.0});
  const auto c = sc.build_intersections();
  CHECK(c[1].demand_factor == doctest::Approx(1.11));
}
