#pragma once

// Test-only generator of small random LPs for simplex-vs-oracle agreement.

#include "perim/lp/problem.hpp"
#include "perim/rng.hpp"

namespace perim::test {

inline lp::LinearProgram random_small_lp(Rng& rng, int max_vars = 6, int max_rows = 8) {
  lp::LinearProgram prob;
  const int n = 1 + static_cast<int>(rng.uniform() * max_vars) % max_vars;
  const int m = 1 + static_cast<int>(rng.uniform() * max_rows) % max_rows;
  std::vector<double> x0;
  for (int j = 0; j < n; ++j) {
    const double hi = rng.uniform(0.5, 10.0);
    const double cost = std::floor(rng.uniform(-3.0, 4.0));
    prob.add_column(0.0, hi, cost);
    x0.push_back(rng.uniform(0.0, hi));
  }
  std::vector<int> idx;
  std::vector<double> val;
  for (int i = 0; i < m; ++i) {
    idx.clear();
    val.clear();
    double lhs0 = 0.0;
    for (int j = 0; j < n; ++j) {
      if (rng.uniform() < 0.35) continue;
      const double a = std::floor(rng.uniform(-5.0, 6.0));
      if (a == 0.0) continue;
      idx.push_back(j);
      val.push_back(a);
      lhs0 += a * x0[j];
    }
    if (idx.empty()) {
      idx.push_back(static_cast<int>(rng.uniform() * n) % n);
      val.push_back(1.0);
      lhs0 = x0[idx[0]];
    }
    const double pick = rng.uniform();
    // biased toward feasible-at-x0 rows; some instances still end up empty
    if (pick < 0.45) {
      prob.add_row(lp::Relation::le, lhs0 + rng.uniform(-1.0, 5.0), idx, val);
    } else if (pick < 0.9) {
      prob.add_row(lp::Relation::ge, lhs0 - rng.uniform(-1.0, 5.0), idx, val);
    } else {
      prob.add_row(lp::Relation::eq, lhs0, idx, val);
    }
  }
  return prob;
}

} // namespace perim::test
