#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "perim/baselines.hpp"
#include "perim/intersection.hpp"
#include "perim/mfd.hpp"

namespace perim {

enum class NoiseMode { none, moderate, strong, penetration };

const char* to_string(NoiseMode m);
NoiseMode noise_mode_from_string(const std::string& s);

/// Relative noise intensities. Fixed modes pin the triple; penetration mode
/// derives the measurement error per quantity from the penetration rate and
/// keeps the moderate forecast/production uncertainty (those persist even
/// with every vehicle connected).
struct NoiseModel {
  NoiseMode mode = NoiseMode::none;
  double measurement_std = 0.0;
  double demand_forecast_std = 0.0;
  double mfd_fluctuation = 0.0;

  static NoiseModel preset(NoiseMode mode);
};

/// Trapezoidal demand surge: base level, linear rise over
/// [ramp_up_start, ramp_up_end], plateau until plateau_end, linear fall back
/// to base by ramp_down_end. Times are in cycles.
struct DemandProfile {
  double base = 6000.0;
  double peak = 14000.0;
  double ramp_up_start = 20.0;
  double ramp_up_end = 35.0;
  double plateau_end = 80.0;
  double ramp_down_end = 90.0;
  double side_base = 400.0;
  double d11_base = 2000.0;
  double d11_peak = 3200.0;

  double entering_at(double t) const;
  double internal_at(double t) const;
};

enum class ControllerKind { mpc, stochastic, pid, bangbang, fixed };

const char* to_string(ControllerKind k);
ControllerKind controller_kind_from_string(const std::string& s);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::mpc;
  int horizon = 20;
  int sample_size = 20;
  double pid_kp = 50.0;
  double pid_ki = 60.0;
  double pid_kd = 0.0;
  double bang_band = 0.0;
  double fixed_green = 0.0; ///< 0: spread g_max uniformly over the phases
};

struct IntersectionOverride {
  int id = 0;
  double demand_factor = -1.0; ///< < 0: keep the seeded draw
  double g_max = -1.0;
  double g_min_per_phase = -1.0;
};

struct Scenario {
  int duration = 90;
  double cycle_hr = 1.0 / 60.0;
  TriangularMfd mfd{5.0, 2.5, 3000.0};
  int n_intersections = 20;
  double inflow_saturation = 900.0;
  double other_saturation = 1800.0;
  double n0_total = 2000.0;
  double n0_split = 0.8; ///< share of the initial accumulation bound inward
  int plateau_start = 40;
  int plateau_end = 80;
  DemandProfile demand;
  NoiseModel noise;
  double penetration = 1.0;
  ControllerSpec controller;
  std::uint64_t seed = 1;
  std::vector<IntersectionOverride> overrides;

  void validate() const;

  /// Materializes the perimeter ring: default layout per intersection with
  /// seeded heterogeneity factors (uniform in [0.7, 1.3]) unless overridden.
  std::vector<IntersectionSpec> build_intersections() const;

  /// Demand realization at cycle t (clamped to the final cycle beyond the
  /// horizon): internal demands plus per-stream arrival rates. Inflow
  /// arrivals split by the heterogeneity weights and sum exactly to the
  /// entering demand; side arrivals scale per intersection.
  struct DemandSlice {
    double d11 = 0.0;
    double d12 = 0.0;
    std::vector<std::vector<double>> arrivals;
  };
  DemandSlice demand_at(double t, const std::vector<IntersectionSpec>& intersections) const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& sc);
void save_scenario(const Scenario& sc, const std::string& path);

} // namespace perim
