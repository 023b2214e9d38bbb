#include "perim/lp/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "perim/errors.hpp"

namespace perim::lp {
namespace {

struct Constraint {
  std::vector<double> a;
  double rhs;
  Relation rel;
};

// Gaussian elimination with partial pivoting; false if singular.
bool solve_square(std::vector<double> m, std::vector<double> b, int n, std::vector<double>& x) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(m[c * n + c]);
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r * n + c]) > best) {
        best = std::abs(m[r * n + c]);
        piv = r;
      }
    if (best < 1e-11) return false;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(m[piv * n + j], m[c * n + j]);
      std::swap(b[piv], b[c]);
    }
    for (int r = c + 1; r < n; ++r) {
      const double f = m[r * n + c] / m[c * n + c];
      if (f == 0.0) continue;
      for (int j = c; j < n; ++j) m[r * n + j] -= f * m[c * n + j];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int j = r + 1; j < n; ++j) s -= m[r * n + j] * x[j];
    x[r] = s / m[r * n + r];
  }
  return true;
}

struct BestVertex {
  bool found = false;
  double objective = kInf;
  std::vector<double> x;
};

BestVertex enumerate_with_box(const LinearProgram& lp, double box) {
  const int n = lp.num_cols();
  std::vector<Constraint> cons;
  for (int i = 0; i < lp.num_rows(); ++i) {
    Constraint c;
    c.a.assign(n, 0.0);
    const auto cols = lp.row_columns(i);
    const auto vals = lp.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) c.a[cols[k]] = vals[k];
    c.rhs = lp.row_rhs(i);
    c.rel = lp.row_relation(i);
    cons.push_back(std::move(c));
  }
  for (int j = 0; j < n; ++j) {
    const double lo = std::isfinite(lp.col_lower(j)) ? lp.col_lower(j) : -box;
    const double hi = std::isfinite(lp.col_upper(j)) ? lp.col_upper(j) : box;
    Constraint clo;
    clo.a.assign(n, 0.0);
    clo.a[j] = 1.0;
    clo.rhs = lo;
    clo.rel = Relation::ge;
    cons.push_back(std::move(clo));
    Constraint chi;
    chi.a.assign(n, 0.0);
    chi.a[j] = 1.0;
    chi.rhs = hi;
    chi.rel = Relation::le;
    cons.push_back(std::move(chi));
  }

  const int total = static_cast<int>(cons.size());
  std::vector<int> pick(n);
  for (int k = 0; k < n; ++k) pick[k] = k;
  BestVertex best;
  std::vector<double> mat(n * n), rhs(n), x;

  auto feasible = [&](const std::vector<double>& pt) {
    for (const auto& c : cons) {
      double lhs = 0.0;
      for (int j = 0; j < n; ++j) lhs += c.a[j] * pt[j];
      const double tol = 1e-7 * std::max(1.0, std::abs(c.rhs));
      switch (c.rel) {
      case Relation::le:
        if (lhs > c.rhs + tol) return false;
        break;
      case Relation::ge:
        if (lhs < c.rhs - tol) return false;
        break;
      case Relation::eq:
        if (std::abs(lhs - c.rhs) > tol) return false;
        break;
      }
    }
    return true;
  };

  // Lexicographic walk over all n-subsets of the constraint pool.
  while (true) {
    for (int r = 0; r < n; ++r) {
      const auto& c = cons[pick[r]];
      for (int j = 0; j < n; ++j) mat[r * n + j] = c.a[j];
      rhs[r] = c.rhs;
    }
    if (solve_square(mat, rhs, n, x) && feasible(x)) {
      const double obj = lp.objective_value(x);
      if (!best.found || obj < best.objective) {
        best.found = true;
        best.objective = obj;
        best.x = x;
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[k] == total - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int j = k + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

} // namespace

Solution vertex_enumeration_oracle(const LinearProgram& lp) {
  if (lp.num_cols() > 8 || lp.num_rows() > 12)
    throw config_error("vertex enumeration oracle: instance exceeds 8 vars / 12 rows");
  Solution sol;
  if (lp.num_cols() == 0) {
    sol.status = SolveStatus::optimal;
    sol.objective = lp.objective_constant();
    return sol;
  }
  const BestVertex a = enumerate_with_box(lp, 1e7);
  if (!a.found) {
    sol.status = SolveStatus::infeasible;
    return sol;
  }
  // An optimum that keeps improving when the artificial box widens sits on a
  // ray, not a vertex of the true feasible set.
  const BestVertex b = enumerate_with_box(lp, 2e7);
  if (b.found && b.objective < a.objective - 1e-6 * std::max(1.0, std::abs(a.objective))) {
    sol.status = SolveStatus::unbounded;
    return sol;
  }
  sol.status = SolveStatus::optimal;
  sol.objective = a.objective;
  sol.x = a.x;
  return sol;
}

} // namespace perim::lp
