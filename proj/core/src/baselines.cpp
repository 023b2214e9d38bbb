#include "perim/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "perim/errors.hpp"
#include "perim/mpc.hpp"

namespace perim {

namespace {

// Greens available to the phases serving at least one inflow stream once the
// remaining phases sit at their minimum.
double inflow_green_budget(const IntersectionSpec& inter) {
  int non_inflow_phases = 0;
  for (std::size_t p = 0; p < inter.phases.size(); ++p) {
    bool serves_inflow = false;
    for (int sid : inter.phases[p].served_streams)
      if (inter.streams[inter.stream_index(sid)].cls == StreamClass::inflow) serves_inflow = true;
    if (!serves_inflow) ++non_inflow_phases;
  }
  return inter.g_max - non_inflow_phases * inter.g_min_per_phase;
}

} // namespace

double min_inflow_capacity(const std::vector<IntersectionSpec>& intersections) {
  double total = 0.0;
  for (const auto& inter : intersections) {
    std::vector<double> mins(inter.phases.size(), inter.g_min_per_phase);
    for (const auto& s : inter.streams)
      if (s.cls == StreamClass::inflow) total += stream_capacity(inter, s.id, mins);
  }
  return total;
}

double max_inflow_capacity(const std::vector<IntersectionSpec>& intersections) {
  double total = 0.0;
  for (const auto& inter : intersections) {
    const double budget = inflow_green_budget(inter);
    for (const auto& s : inter.streams)
      if (s.cls == StreamClass::inflow) total += s.saturation_flow * budget;
  }
  return total;
}

double pid_total_inflow(PidState& state, const PidConfig& config, double n_measured,
                        double cycle_hr) {
  if (!state.primed) {
    state.command = std::clamp(config.max_inflow, config.min_inflow, config.max_inflow);
    state.prev_n = n_measured;
    state.prev_delta = 0.0;
    state.primed = true;
    return state.command;
  }
  const double delta_n = n_measured - state.prev_n;
  double u = state.command;
  u -= config.kp * delta_n;
  u += config.ki * cycle_hr * (config.setpoint - n_measured);
  if (config.kd > 0.0 && cycle_hr > 0.0)
    u -= config.kd * (delta_n - state.prev_delta) / cycle_hr;
  u = std::clamp(u, config.min_inflow, config.max_inflow);
  state.command = u;
  state.prev_n = n_measured;
  state.prev_delta = delta_n;
  return u;
}

double bang_bang_total_inflow(BangBangState& state, const BangBangConfig& config,
                              double n_measured) {
  if (n_measured <= config.threshold - config.band) {
    state.command = config.max_inflow;
    state.primed = true;
  } else if (n_measured >= config.threshold + config.band) {
    state.command = config.min_inflow;
    state.primed = true;
  } else if (!state.primed) {
    state.command = config.max_inflow;
    state.primed = true;
  }
  return state.command;
}

GreenPlan allocate_greens(double total_inflow, const std::vector<double>& outflow_demand,
                          const QueueState& queues,
                          const std::vector<IntersectionSpec>& intersections) {
  const std::size_t nI = intersections.size();
  if (outflow_demand.size() != nI || queues.x.size() != nI)
    throw config_error("allocate_greens: per-intersection inputs do not match");

  // Inflow share per intersection, proportional to its inflow queue.
  std::vector<double> inflow_queue(nI, 0.0);
  double queue_sum = 0.0;
  for (std::size_t i = 0; i < nI; ++i) {
    for (std::size_t m = 0; m < intersections[i].streams.size(); ++m)
      if (intersections[i].streams[m].cls == StreamClass::inflow)
        inflow_queue[i] += queues.x[i][m];
    queue_sum += inflow_queue[i];
  }
  std::vector<double> weight(nI, 1.0 / static_cast<double>(nI));
  if (queue_sum > 1e-12)
    for (std::size_t i = 0; i < nI; ++i) weight[i] = inflow_queue[i] / queue_sum;

  // Minimum greens already pass the floor capacity; raw proportional shares
  // below a floor would make the realized admission overshoot the command.
  // Waterfill: scale the shares so that sum(max(floor_i, lambda*share_i))
  // meets the command (or the floor total when the command sits below it).
  std::vector<double> floor_cap(nI, 0.0);
  double floor_total = 0.0;
  for (std::size_t i = 0; i < nI; ++i) {
    const std::vector<double> mins(intersections[i].phases.size(),
                                   intersections[i].g_min_per_phase);
    for (const auto& s : intersections[i].streams)
      if (s.cls == StreamClass::inflow)
        floor_cap[i] += stream_capacity(intersections[i], s.id, mins);
    floor_total += floor_cap[i];
  }
  const double target = std::max(total_inflow, floor_total);
  std::vector<double> share(nI, 0.0);
  {
    double lo = 0.0, hi = 2.0;
    auto admitted_at = [&](double lam) {
      double sum = 0.0;
      for (std::size_t i = 0; i < nI; ++i)
        sum += std::max(floor_cap[i], lam * weight[i] * target);
      return sum;
    };
    while (admitted_at(hi) < target && hi < 1e9) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (admitted_at(mid) < target ? lo : hi) = mid;
    }
    for (std::size_t i = 0; i < nI; ++i)
      share[i] = std::max(floor_cap[i], hi * weight[i] * target);
  }

  GreenPlan plan = GreenPlan::minimum(intersections);
  for (std::size_t i = 0; i < nI; ++i) {
    const auto& inter = intersections[i];
    auto& greens = plan.g[i];

    double inflow_sat = 0.0;
    for (const auto& s : inter.streams)
      if (s.cls == StreamClass::inflow) inflow_sat += s.saturation_flow;

    double budget = inter.g_max;
    for (double g : greens) budget -= g;

    // Current service level from the minimum greens.
    std::vector<double> mins(greens);
    double inflow_cap = 0.0;
    for (const auto& s : inter.streams)
      if (s.cls == StreamClass::inflow) inflow_cap += stream_capacity(inter, s.id, mins);

    auto add_to_phase = [&](std::size_t p, double amount) {
      const double granted = std::min(amount, budget);
      greens[p] += granted;
      budget -= granted;
      return granted;
    };

    // Inflow need beyond the floor goes to the pure inflow phases first,
    // then to the phases that also serve other classes.
    if (inflow_sat > 0.0 && share[i] > inflow_cap) {
      double needed_green = (share[i] - inflow_cap) / inflow_sat;
      auto serves_class = [&](std::size_t p, StreamClass cls) {
        for (int sid : inter.phases[p].served_streams)
          if (inter.streams[inter.stream_index(sid)].cls == cls) return true;
        return false;
      };
      for (int pass = 0; pass < 2 && needed_green > 1e-12; ++pass)
        for (std::size_t p = 0; p < inter.phases.size() && needed_green > 1e-12; ++p) {
          if (!serves_class(p, StreamClass::inflow)) continue;
          const bool pure = !serves_class(p, StreamClass::outflow) &&
                            !serves_class(p, StreamClass::side);
          if ((pass == 0) != pure) continue;
          needed_green -= add_to_phase(p, needed_green);
        }
    }

    // Outflow phases sized to serve the per-intersection outflow demand.
    {
      std::vector<double> current(greens);
      double worst_gap_green = 0.0;
      for (const auto& s : inter.streams) {
        if (s.cls != StreamClass::outflow) continue;
        const double want = inter.alpha_for(inter.stream_index(s.id)) * outflow_demand[i];
        const double have = stream_capacity(inter, s.id, current);
        if (want > have)
          worst_gap_green = std::max(worst_gap_green, (want - have) / s.saturation_flow);
      }
      if (worst_gap_green > 1e-12) {
        // prefer the phase serving outflow alone
        for (int pass = 0; pass < 2 && worst_gap_green > 1e-12; ++pass)
          for (std::size_t p = 0; p < inter.phases.size() && worst_gap_green > 1e-12; ++p) {
            bool serves_out = false, serves_in = false;
            for (int sid : inter.phases[p].served_streams) {
              const auto cls = inter.streams[inter.stream_index(sid)].cls;
              serves_out |= cls == StreamClass::outflow;
              serves_in |= cls == StreamClass::inflow;
            }
            if (!serves_out) continue;
            if ((pass == 0) != !serves_in) continue;
            worst_gap_green -= add_to_phase(p, worst_gap_green);
          }
      }
    }

    // The side phase absorbs the remaining green.
    if (budget > 1e-12) {
      for (std::size_t p = 0; p < inter.phases.size(); ++p) {
        bool side_only = true;
        for (int sid : inter.phases[p].served_streams)
          if (inter.streams[inter.stream_index(sid)].cls != StreamClass::side) side_only = false;
        if (side_only && !inter.phases[p].served_streams.empty()) {
          add_to_phase(p, budget);
          break;
        }
      }
    }
    project_greens(inter, greens);
  }
  return plan;
}

} // namespace perim
