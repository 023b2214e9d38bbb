#pragma once

#include <memory>
#include <vector>

#include "perim/intersection.hpp"
#include "perim/mfd.hpp"
#include "perim/rng.hpp"
#include "perim/scenario.hpp"

namespace perim {

/// Everything a controller may see: measurements, forecasts, and the noise
/// levels behind them. Controllers never touch the true plant state.
struct ControllerView {
  int cycle = 0;
  int horizon = 0;
  double n11_meas = 0.0;
  double n12_meas = 0.0;
  std::vector<std::vector<double>> queues_meas;                  ///< [i][m]
  std::vector<double> d11_forecast, d12_forecast;                ///< length = horizon
  std::vector<std::vector<std::vector<double>>> arrival_forecast; ///< [i][m][l]
  double n11_std_frac = 0.0;
  double n12_std_frac = 0.0;
  std::vector<std::vector<double>> queue_std_frac;
  double demand_std_frac = 0.0;
};

class Controller {
public:
  virtual ~Controller() = default;
  virtual const char* name() const = 0;
  /// Forecast steps the harness must provide (0 for reactive controllers).
  virtual int forecast_horizon() const = 0;
  virtual GreenPlan decide(const ControllerView& view) = 0;
};

struct CycleRecord {
  double n11_true = 0.0, n12_true = 0.0;
  double n11_meas = 0.0, n12_meas = 0.0;
  double beta21 = 0.0, beta12 = 0.0;
  double d11 = 0.0, d12 = 0.0;
  double outflow_scale = 1.0;
  std::vector<std::vector<double>> queues;     ///< start-of-cycle, true values
  std::vector<std::vector<double>> departures; ///< realized per stream
  GreenPlan greens;
  double solve_time_s = 0.0;
};

struct RunLog {
  std::vector<IntersectionSpec> intersections;
  std::vector<CycleRecord> cycles;
  bool complete = false; ///< false when a controller failure cut the run short
  std::string abort_reason;
};

/// Multiplies the true value by (1 + eps), eps ~ N(0, rel_std), floored at 0.
double noisy_measurement(double true_value, double rel_std, Rng& rng);

/// Relative measurement error of a count observed through connected vehicles
/// at penetration p (scaled-count estimator): sqrt((1-p) / (max(n,1) * p)).
double penetration_sigma(double p, double n);

/// Closed-loop run: measure through the noise channel, ask the controller
/// for a plan, step the exact plant, log. A solver failure aborts the run
/// and leaves the partial log with `complete = false`.
RunLog simulate(const Scenario& scenario, Controller& controller);

/// Controller factory matching the scenario's controller spec.
std::unique_ptr<Controller> make_controller(const Scenario& scenario,
                                            const std::vector<IntersectionSpec>& intersections);

/// Convenience: materialize intersections, build the controller, run.
RunLog run_scenario(const Scenario& scenario);

} // namespace perim
