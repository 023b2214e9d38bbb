#pragma once

#include <vector>

#include "perim/intersection.hpp"
#include "perim/mfd.hpp"

namespace perim {

/// Incremental PI(D) gating law at the network level. Gains act on the total
/// measured accumulation; the command is the total admitted inflow [veh/hr].
struct PidConfig {
  double kp = 10.0;      ///< 1/hr
  double ki = 60.0;      ///< 1/hr^2, applied with the cycle length
  double kd = 0.0;       ///< 1/hr
  double setpoint = 3000.0;
  double min_inflow = 0.0;
  double max_inflow = 0.0;
};

struct PidState {
  double command = 0.0;
  double prev_n = 0.0;
  double prev_delta = 0.0;
  bool primed = false;
};

struct BangBangConfig {
  double threshold = 3000.0;
  double band = 0.0; ///< hysteresis half-width [veh]
  double min_inflow = 0.0;
  double max_inflow = 0.0;
};

struct BangBangState {
  double command = 0.0;
  bool primed = false;
};

/// Network inflow capacity when every phase sits at its minimum green:
/// signals cannot show less than that.
double min_inflow_capacity(const std::vector<IntersectionSpec>& intersections);

/// Network inflow capacity when the inflow-serving phases absorb every green
/// second not owed to the other phases' minimums.
double max_inflow_capacity(const std::vector<IntersectionSpec>& intersections);

/// u(k) = clamp(u(k-1) - Kp*(n - n_prev) + Ki*C*(setpoint - n) - Kd*(dn - dn_prev)/C).
/// The first call primes the state and returns the clamped initial command.
double pid_total_inflow(PidState& state, const PidConfig& config, double n_measured,
                        double cycle_hr);

/// All-or-nothing gating with an optional hysteresis band: the previous
/// command holds inside the band.
double bang_bang_total_inflow(BangBangState& state, const BangBangConfig& config,
                              double n_measured);

/// Distributes a network-level inflow command to per-intersection greens.
/// Shares are proportional to each intersection's inflow queue (uniform when
/// all queues are empty), outflow phases are sized for `outflow_demand`, and
/// the side phase keeps whatever green remains.
GreenPlan allocate_greens(double total_inflow, const std::vector<double>& outflow_demand,
                          const QueueState& queues,
                          const std::vector<IntersectionSpec>& intersections);

} // namespace perim
