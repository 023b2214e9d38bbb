#pragma once

// Test-only arithmetic evaluation of the prediction model: given a full
// green schedule it steps the linearized dynamics forward and returns the
// horizon cost. Kept independent of the LP path so grid searches over greens
// can serve as an optimization oracle.

#include <algorithm>
#include <vector>

#include "perim/linearization.hpp"
#include "perim/mpc.hpp"

namespace perim::test {

inline double predicted_cost(const MpcConfig& config, const MpcInput& input,
                             const std::vector<GreenPlan>& schedule) {
  const int L = config.horizon;
  const int nI = static_cast<int>(config.intersections.size());
  const double C = config.cycle_hr;
  const auto gamma = linearization_coefficients(config.mfd, input.n11_hat, input.n12_hat);

  double n11 = input.n11_hat;
  double n12 = input.n12_hat;
  std::vector<std::vector<double>> x = input.x_hat;
  for (int i = 0; i < nI; ++i)
    for (std::size_t m = 0; m < x[i].size(); ++m)
      if (config.intersections[i].streams[m].cls == StreamClass::outflow) x[i][m] = 0.0;

  double cost = 0.0;
  for (int l = 0; l < L; ++l) {
    const auto& plan = schedule.at(std::min<std::size_t>(l, schedule.size() - 1));
    double beta21 = 0.0, beta12 = 0.0;
    std::vector<std::vector<double>> x_next = x;
    for (int i = 0; i < nI; ++i) {
      const auto& inter = config.intersections[i];
      for (std::size_t m = 0; m < inter.streams.size(); ++m) {
        const double cap = stream_capacity(inter, inter.streams[m].id, plan.g[i]);
        switch (inter.streams[m].cls) {
        case StreamClass::outflow: {
          const double share = inter.alpha_for(static_cast<int>(m)) / nI;
          const double demand_free = share * config.mfd.v * n12;
          const double demand_cong =
              share * (gamma.gamma20 + gamma.gamma21 * n11 + gamma.gamma22 * n12);
          beta12 += std::min({demand_free, demand_cong, cap});
          break;
        }
        case StreamClass::inflow:
          beta21 += cap; // model approximation: inflow departs at capacity
          x_next[i][m] = std::max(0.0, x[i][m] + (input.arrivals[i][m][l] - cap) * C);
          break;
        case StreamClass::side:
          x_next[i][m] = std::max(0.0, x[i][m] + (input.arrivals[i][m][l] - cap) * C);
          break;
        }
      }
    }
    const double o11 = std::min(config.mfd.v * n11,
                                gamma.gamma10 + gamma.gamma11 * n11 + gamma.gamma12 * n12);
    n11 += (input.d11[l] + beta21 - o11) * C;
    n12 += (input.d12[l] - beta12) * C;
    x = x_next;

    double queues = 0.0;
    for (const auto& per : x)
      for (double v : per) queues += v;
    cost += C * (config.network_weight * (n11 + n12) + config.intersection_weight * queues);
  }
  return cost;
}

} // namespace perim::test
