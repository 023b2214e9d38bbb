#pragma once

#include <utility>

namespace perim {

/// Triangular network production function. `v` and `w` are the absolute
/// slopes of the free-flow and congested branches [1/hr], `n_cr` the critical
/// accumulation [veh]. Peak outflow is v*n_cr at n = n_cr.
struct TriangularMfd {
  double v = 5.0;
  double w = 2.5;
  double n_cr = 3000.0;

  /// Accumulation beyond which the production is floored at zero.
  double jam_accumulation() const { return (1.0 + v / w) * n_cr; }
  double peak_outflow() const { return v * n_cr; }
  void validate() const;
};

/// Accumulations in the center region split by destination [veh].
struct NetworkState {
  double n11 = 0.0; ///< bound for destinations inside the center
  double n12 = 0.0; ///< bound for destinations in the periphery
  double total() const { return n11 + n12; }
};

/// Trip-completion flow G(n) = min{v n, (w+v) n_cr - w n}, floored at 0 past
/// the jam accumulation [veh/hr]. Throws on negative accumulation.
double mfd_outflow(const TriangularMfd& mfd, double n);

/// Destination split of the completion flow: O_1j = n_1j / (n11+n12) * G(total).
/// Both components are zero for an empty network.
std::pair<double, double> split_outflow(const TriangularMfd& mfd, const NetworkState& state);

/// One cycle of the exact mass-conservation dynamics. `outflow_scale` is the
/// plant's production fluctuation (1.0 = nominal); `o11` is the unscaled
/// completion flow for the n11 stream. Results are clamped at zero.
NetworkState network_step(const NetworkState& state, double d11, double d12, double beta21,
                          double beta12, double o11, double cycle_hr, double outflow_scale = 1.0);

} // namespace perim
