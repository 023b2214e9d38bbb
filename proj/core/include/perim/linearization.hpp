#pragma once

#include <utility>

#include "perim/mfd.hpp"

namespace perim {

/// First-order coefficients of the outflow split around a measured state.
/// The congested branch of O_1j becomes gamma_j0 + gamma_j1*n11 + gamma_j2*n12;
/// the anchors are chosen on the critical line so the approximation is exact
/// in free flow.
struct LinearizedOutflow {
  double gamma10 = 0.0, gamma11 = 0.0, gamma12 = 0.0;
  double gamma20 = 0.0, gamma21 = 0.0, gamma22 = 0.0;
};

/// Coefficients evaluated at the anchor states (n11_hat, n_cr - n11_hat) for
/// O11 and (n_cr - n12_hat, n12_hat) for O12.
LinearizedOutflow linearization_coefficients(const TriangularMfd& mfd, double n11_hat,
                                             double n12_hat);

/// Prediction-model outflow: O_1j ~ min{ v*n_1j, affine branch }. Matches the
/// exact split whenever n11 + n12 <= n_cr.
std::pair<double, double> linearized_outflow(const LinearizedOutflow& coeffs,
                                             const TriangularMfd& mfd, double n11, double n12);

} // namespace perim
