#pragma once

#include <cstdint>
#include <vector>

#include "perim/lp/problem.hpp"

namespace perim::lp {

/// Nonbasic variables rest on a bound, at zero when free, or pinned at an
/// arbitrary interior point (`at_value`, the superbasic-style start used by
/// evaluation crashes; such variables move off their value only when priced).
enum class VarStatus : std::uint8_t { at_lower, at_upper, basic, free_at_zero, at_value };

/// Basis snapshot over structural columns followed by one logical per row.
/// Carries enough state to warm-start a structurally identical LP. `value`
/// is consulted only for at_value entries (it may be empty otherwise).
struct Basis {
  std::vector<VarStatus> status;
  std::vector<double> value;
  bool valid() const { return !status.empty(); }
};

struct SimplexOptions {
  double feas_tol = 1e-8;   ///< primal feasibility (scaled space)
  double opt_tol = 1e-9;    ///< reduced-cost threshold
  long max_iterations = -1; ///< -1: 200*(m+n) + 20000
  int refactor_interval = 100;
  bool collect_infeasibility_note = true;
  /// Columns that couple otherwise independent blocks (e.g. shared
  /// first-stage decisions). When such columns are basic the factorization
  /// swaps them for logical placeholders and applies a low-rank correction,
  /// keeping the factors block-local.
  std::vector<int> coupling_columns;
};

/// Bounded-variable primal simplex (two phases, Devex pricing, PFI updates,
/// Bland fallback on stall). Deterministic: no randomized choices.
Solution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

/// Warm-started variant. `basis` is read if valid (sizes must match
/// n_cols + n_rows) and overwritten with the final basis on return.
Solution solve_lp(const LinearProgram& lp, Basis& basis, const SimplexOptions& options = {});

} // namespace perim::lp
