#include "perim/mfd.hpp"

#include <algorithm>
#include <stdexcept>

#include "perim/errors.hpp"

namespace perim {

void TriangularMfd::validate() const {
  if (!(v > 0.0) || !(w > 0.0) || !(n_cr > 0.0))
    throw config_error("TriangularMfd requires v > 0, w > 0, n_cr > 0");
}

double mfd_outflow(const TriangularMfd& mfd, double n) {
  if (n < 0.0) throw std::domain_error("mfd_outflow: negative accumulation");
  const double free_flow = mfd.v * n;
  const double congested = (mfd.w + mfd.v) * mfd.n_cr - mfd.w * n;
  return std::max(0.0, std::min(free_flow, congested));
}

std::pair<double, double> split_outflow(const TriangularMfd& mfd, const NetworkState& state) {
  const double total = state.total();
  if (total <= 0.0) return {0.0, 0.0};
  const double g = mfd_outflow(mfd, total);
  return {state.n11 / total * g, state.n12 / total * g};
}

NetworkState network_step(const NetworkState& state, double d11, double d12, double beta21,
                          double beta12, double o11, double cycle_hr, double outflow_scale) {
  NetworkState next;
  next.n11 = std::max(0.0, state.n11 + (d11 + beta21 - outflow_scale * o11) * cycle_hr);
  next.n12 = std::max(0.0, state.n12 + (d12 - beta12) * cycle_hr);
  return next;
}

} // namespace perim
