#include "doctest.h"

#include <cmath>

#include "perim/linearization.hpp"
#include "perim/rng.hpp"

using namespace perim;

namespace {
const TriangularMfd kMfd{5.0, 2.5, 3000.0};
}

TEST_CASE("coefficients match the closed form") {
  const auto c = linearization_coefficients(kMfd, 2000.0, 1000.0);
  CHECK(c.gamma10 == doctest::Approx(15000.0));
  CHECK(c.gamma11 == doctest::Approx(0.0));
  CHECK(c.gamma12 == doctest::Approx(-5.0));
  CHECK(c.gamma20 == doctest::Approx(7500.0));
  CHECK(c.gamma21 == doctest::Approx(-2.5));
  CHECK(c.gamma22 == doctest::Approx(2.5));

  const auto empty = linearization_coefficients(kMfd, 0.0, 0.0);
  CHECK(empty.gamma10 == 0.0);
  CHECK(empty.gamma11 == doctest::Approx(kMfd.v));
  CHECK(empty.gamma12 == 0.0);
}

TEST_CASE("linearized outflow at the reference example") {
  const auto c = linearization_coefficients(kMfd, 2000.0, 0.0);
  auto [o11, o12] = linearized_outflow(c, kMfd, 2000.0, 1000.0);
  CHECK(o11 == doctest::Approx(10000.0));
  (void)o12;

  auto [z, zz] = linearized_outflow(c, kMfd, 0.0, 1000.0);
  CHECK(z == 0.0);
  (void)zz;
}

// Free-flow exactness: the approximation equals the exact split whenever the
// total accumulation stays at or below the critical one, for any anchors.
TEST_CASE("free-flow exactness over random states and anchors") {
  Rng rng(123);
  for (int t = 0; t < 10000; ++t) {
    const double total = rng.uniform(0.0, kMfd.n_cr);
    const double share = rng.uniform(0.0, 1.0);
    const NetworkState s{total * share, total * (1.0 - share)};
    const auto c =
        linearization_coefficients(kMfd, rng.uniform(0.0, 4000.0), rng.uniform(0.0, 4000.0));
    const auto [e11, e12] = split_outflow(kMfd, s);
    const auto [a11, a12] = linearized_outflow(c, kMfd, s.n11, s.n12);
    CHECK(std::abs(a11 - e11) <= 1e-9 * std::max(1.0, e11));
    CHECK(std::abs(a12 - e12) <= 1e-9 * std::max(1.0, e12));
  }
}

TEST_CASE("affine branch matches the congested branch at the anchor") {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    const double n11_hat = rng.uniform(0.0, kMfd.n_cr);
    const auto c = linearization_coefficients(kMfd, n11_hat, 0.0);
    const double n11 = n11_hat;
    const double n12 = kMfd.n_cr - n11_hat;
    const double affine = c.gamma10 + c.gamma11 * n11 + c.gamma12 * n12;
    // exact congested branch of O11 at (n11, n12)
    const double total = n11 + n12;
    const double congested =
        total > 0.0 ? ((kMfd.w + kMfd.v) * kMfd.n_cr * n11 / total - kMfd.w * n11) : 0.0;
    CHECK(std::abs(affine - congested) <= 1e-9 * std::max(1.0, std::abs(congested)));
  }
}
