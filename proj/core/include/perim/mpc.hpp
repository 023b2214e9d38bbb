#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perim/intersection.hpp"
#include "perim/linearization.hpp"
#include "perim/lp/piecewise.hpp"
#include "perim/mfd.hpp"

namespace perim {

struct MpcConfig {
  int horizon = 20; ///< L, cycles
  TriangularMfd mfd;
  std::vector<IntersectionSpec> intersections;
  double cycle_hr = 1.0 / 60.0;
  double network_weight = 1.0;
  double intersection_weight = 1.0;

  void validate() const;
};

/// Measured state and forecasts feeding one receding-horizon solve.
/// Forecast arrays must cover at least `horizon` cycles; `arrivals` is
/// indexed [intersection][stream][cycle] with outflow-stream entries unused.
struct MpcInput {
  double n11_hat = 0.0;
  double n12_hat = 0.0;
  std::vector<std::vector<double>> x_hat;
  std::vector<double> d11, d12;
  std::vector<std::vector<std::vector<double>>> arrivals;
};

struct MpcOutput {
  GreenPlan first_cycle_plan;
  std::vector<GreenPlan> green_schedule;   ///< per horizon cycle (raw LP values)
  std::vector<double> n11_pred, n12_pred;  ///< length L+1, index 0 = measured
  std::vector<QueueState> queue_pred;      ///< length L+1
  double objective = 0.0;                  ///< veh*hr over the horizon
  long iterations = 0;
  double tightness_gap = 0.0;
  double definition_residual = 0.0;
};

/// Variable ids of one horizon block inside a PiecewiseModel; used to pin
/// first-cycle greens, extract plans, and map trajectories back out.
struct MpcBlockMap {
  int L = 0;
  int var_base = 0;        ///< first model variable of this block
  int var_count = 0;
  int plain_base = 0;      ///< first plain constraint of this block
  int plain_count = 0;
  std::vector<std::vector<int>> queue_streams; ///< per intersection: stream indices with queues
  std::vector<std::vector<int>> out_streams;
  std::vector<int> green;  ///< [(l*nI + i)*nP + p]
  std::vector<int> n11, n12; ///< per l = 1..L
  std::vector<int> x;      ///< [(l-1)*nQ + flat queue index], l = 1..L
  std::vector<int> mu_out; ///< [l*nO + flat outflow index]
  std::vector<int> o11;    ///< per l = 0..L-1, -1 where folded to a constant
  int green_var(int l, int i, int p, int n_int, int n_ph) const {
    return green[(l * n_int + i) * n_ph + p];
  }
};

/// Appends the full prediction model of one horizon (dynamics, departures,
/// queue clamps, green bounds) to `model`, weighting its cost terms by
/// `objective_scale`. When `shared_first_greens` is non-empty those variable
/// ids serve as the first-cycle greens and their bound rows are assumed to
/// exist already; otherwise fresh first-cycle greens are created.
MpcBlockMap append_mpc_block(lp::PiecewiseModel& model, const MpcConfig& config,
                             const MpcInput& input, std::span<const int> shared_first_greens,
                             double objective_scale);

struct MpcModel {
  lp::PiecewiseModel model;
  MpcBlockMap map;
};

/// Builds the one-sample (deterministic) receding-horizon model.
MpcModel build_mpc(const MpcConfig& config, const MpcInput& input);

/// Builds, reformulates, and solves one cycle; returns the first-cycle plan
/// and the predicted trajectory. `fixed_first` pins the first-cycle greens
/// (used when re-evaluating a committed plan); `schedule_hint` starts the
/// solve from an evaluation crash at the given green schedule instead of the
/// all-minimum point. Throws solve_error on solver failure or an infeasible
/// model.
MpcOutput solve_mpc(const MpcConfig& config, const MpcInput& input,
                    const GreenPlan* fixed_first = nullptr,
                    const std::vector<GreenPlan>* schedule_hint = nullptr);

/// Projects raw green values onto the exact bound polytope: floors at g_min,
/// then rescales any surplus above the floor to fit g_max.
void project_greens(const IntersectionSpec& inter, std::vector<double>& greens);

} // namespace perim
