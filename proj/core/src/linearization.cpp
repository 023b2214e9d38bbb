#include "perim/linearization.hpp"

#include <algorithm>

namespace perim {

LinearizedOutflow linearization_coefficients(const TriangularMfd& mfd, double n11_hat,
                                             double n12_hat) {
  mfd.validate();
  const double wv = mfd.w + mfd.v;
  LinearizedOutflow c;
  c.gamma10 = wv * n11_hat;
  c.gamma11 = mfd.v - wv * n11_hat / mfd.n_cr;
  c.gamma12 = -wv * n11_hat / mfd.n_cr;
  c.gamma20 = wv * n12_hat;
  c.gamma21 = -wv * n12_hat / mfd.n_cr;
  c.gamma22 = mfd.v - wv * n12_hat / mfd.n_cr;
  return c;
}

std::pair<double, double> linearized_outflow(const LinearizedOutflow& c, const TriangularMfd& mfd,
                                             double n11, double n12) {
  const double o11 = std::min(mfd.v * n11, c.gamma10 + c.gamma11 * n11 + c.gamma12 * n12);
  const double o12 = std::min(mfd.v * n12, c.gamma20 + c.gamma21 * n11 + c.gamma22 * n12);
  return {o11, o12};
}

} // namespace perim
