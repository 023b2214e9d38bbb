#include "perim/lp/simplex.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

namespace perim::lp {
namespace {

constexpr double kPivotTol = 1e-9;   // minimum |alpha| to pivot on
constexpr double kPeelTol = 1e-11;   // singularity threshold in factorization
constexpr double kZero = 1e-13;      // drop threshold in solves

/// Dense-value / sparse-pattern workspace. Clearing touches only the pattern.
class Workspace {
public:
  void resize(int n) {
    val_.assign(n, 0.0);
    in_.assign(n, 0);
    pattern_.clear();
    pattern_.reserve(64);
  }
  void clear() {
    for (int i : pattern_) {
      val_[i] = 0.0;
      in_[i] = 0;
    }
    pattern_.clear();
  }
  void add(int i, double v) {
    if (!in_[i]) {
      in_[i] = 1;
      pattern_.push_back(i);
    }
    val_[i] += v;
  }
  void set(int i, double v) {
    if (!in_[i]) {
      in_[i] = 1;
      pattern_.push_back(i);
    }
    val_[i] = v;
  }
  double operator[](int i) const { return val_[i]; }
  const std::vector<int>& pattern() const { return pattern_; }

private:
  std::vector<double> val_;
  std::vector<char> in_;
  std::vector<int> pattern_;
};

struct Pivot {
  int row;
  int pos;
  double diag;
};

/// LU-free factorization of the basis by two-sided singleton peeling plus a
/// dense kernel for the irreducible bump. Solves use the original basis
/// columns directly; only the bump does Gaussian elimination.
class BasisFactor {
public:
  // Column provider: fills (rows, vals) with the basis column at `pos`.
  template <typename ColFn>
  bool factor(int m, ColFn col_of, std::vector<int>* unpivoted_rows,
              std::vector<int>* unpivoted_positions) {
    m_ = m;
    bc_start_.assign(m + 1, 0);
    bc_row_.clear();
    bc_val_.clear();
    std::vector<int> rows;
    std::vector<double> vals;
    for (int p = 0; p < m; ++p) {
      rows.clear();
      vals.clear();
      col_of(p, rows, vals);
      for (std::size_t k = 0; k < rows.size(); ++k) {
        bc_row_.push_back(rows[k]);
        bc_val_.push_back(vals[k]);
      }
      bc_start_[p + 1] = static_cast<int>(bc_row_.size());
    }
    // Row-major copy of the basis.
    br_start_.assign(m + 1, 0);
    for (int k = 0; k < static_cast<int>(bc_row_.size()); ++k) ++br_start_[bc_row_[k] + 1];
    for (int i = 0; i < m; ++i) br_start_[i + 1] += br_start_[i];
    br_pos_.resize(bc_row_.size());
    br_val_.resize(bc_row_.size());
    {
      std::vector<int> fill(br_start_.begin(), br_start_.end() - 1);
      for (int p = 0; p < m; ++p)
        for (int k = bc_start_[p]; k < bc_start_[p + 1]; ++k) {
          const int dst = fill[bc_row_[k]]++;
          br_pos_[dst] = p;
          br_val_[dst] = bc_val_[k];
        }
    }

    std::vector<int> ccount(m, 0), rcount(m, 0);
    std::vector<char> calive(m, 1), ralive(m, 1);
    for (int p = 0; p < m; ++p) ccount[p] = bc_start_[p + 1] - bc_start_[p];
    for (int i = 0; i < m; ++i) rcount[i] = br_start_[i + 1] - br_start_[i];

    row_singletons_.clear();
    col_singletons_.clear();
    std::vector<int> colq, rowq;
    for (int p = 0; p < m; ++p)
      if (ccount[p] == 1) colq.push_back(p);
    for (int i = 0; i < m; ++i)
      if (rcount[i] == 1) rowq.push_back(i);

    int pivoted = 0;
    auto kill = [&](int row, int pos) {
      ralive[row] = 0;
      calive[pos] = 0;
      for (int k = bc_start_[pos]; k < bc_start_[pos + 1]; ++k) {
        const int i = bc_row_[k];
        if (!ralive[i]) continue;
        if (--rcount[i] == 1) rowq.push_back(i);
      }
      for (int k = br_start_[row]; k < br_start_[row + 1]; ++k) {
        const int p = br_pos_[k];
        if (!calive[p]) continue;
        if (--ccount[p] == 1) colq.push_back(p);
      }
      ++pivoted;
    };

    while (!colq.empty() || !rowq.empty()) {
      if (!colq.empty()) {
        const int p = colq.back();
        colq.pop_back();
        if (!calive[p] || ccount[p] != 1) continue;
        int row = -1;
        double diag = 0.0;
        for (int k = bc_start_[p]; k < bc_start_[p + 1]; ++k)
          if (ralive[bc_row_[k]]) {
            row = bc_row_[k];
            diag = bc_val_[k];
          }
        if (row < 0 || std::abs(diag) < kPeelTol) {
          if (row < 0) continue; // empty column: left for the repair path
          return report_failure(calive, ralive, unpivoted_rows, unpivoted_positions);
        }
        col_singletons_.push_back({row, p, diag});
        kill(row, p);
        continue;
      }
      const int i = rowq.back();
      rowq.pop_back();
      if (!ralive[i] || rcount[i] != 1) continue;
      int pos = -1;
      double diag = 0.0;
      for (int k = br_start_[i]; k < br_start_[i + 1]; ++k)
        if (calive[br_pos_[k]]) {
          pos = br_pos_[k];
          diag = br_val_[k];
        }
      if (pos < 0) continue;
      if (std::abs(diag) < kPeelTol)
        return report_failure(calive, ralive, unpivoted_rows, unpivoted_positions);
      row_singletons_.push_back({i, pos, diag});
      kill(i, pos);
    }

    // Dense kernel on whatever the peeling could not reach.
    bump_rows_.clear();
    bump_cols_.clear();
    for (int i = 0; i < m; ++i)
      if (ralive[i]) bump_rows_.push_back(i);
    for (int p = 0; p < m; ++p)
      if (calive[p]) bump_cols_.push_back(p);
    const int b = static_cast<int>(bump_rows_.size());
    if (b != static_cast<int>(bump_cols_.size()))
      return report_failure(calive, ralive, unpivoted_rows, unpivoted_positions);
    bump_n_ = b;
    bump_col_of_.assign(m, -1);
    for (int k = 0; k < b; ++k) bump_col_of_[bump_cols_[k]] = k;
    if (b > 0 && !factor_bump(unpivoted_rows, unpivoted_positions)) return false;
    (void)pivoted;
    return true;
  }

  // Sparse left-looking LU with partial pivoting over the irreducible bump.
  // Low-degree columns pivot first so that hub columns (shared first-stage
  // variables touching every block) do not spread fill; the reach of each
  // column is found by depth-first search so the work is proportional to
  // the fill, not to the bump dimension.
  bool factor_bump(std::vector<int>* unpivoted_rows, std::vector<int>* unpivoted_positions) {
    const int b = bump_n_;
    bump_row_of_.assign(m_, -1);
    for (int k = 0; k < b; ++k) bump_row_of_[bump_rows_[k]] = k;
    {
      // stable counting sort of bump columns by their local nonzero count
      std::vector<int> nnz(b, 0);
      int max_nnz = 1;
      for (int k = 0; k < b; ++k) {
        const int p = bump_cols_[k];
        int c = 0;
        for (int e = bc_start_[p]; e < bc_start_[p + 1]; ++e)
          if (bump_row_of_[bc_row_[e]] >= 0) ++c;
        nnz[k] = c;
        max_nnz = std::max(max_nnz, c);
      }
      for (int k = 0; k < b; ++k)
        if (nnz[k] == 0) nnz[k] = max_nnz + 1; // deficiency placeholders go last
      max_nnz += 1;
      std::vector<int> bucket_start(max_nnz + 2, 0);
      for (int k = 0; k < b; ++k) ++bucket_start[nnz[k] + 1];
      for (int c = 0; c <= max_nnz; ++c) bucket_start[c + 1] += bucket_start[c];
      std::vector<int> ordered(b);
      for (int k = 0; k < b; ++k) ordered[bucket_start[nnz[k]]++] = bump_cols_[k];
      bump_cols_ = std::move(ordered);
      bump_col_of_.assign(m_, -1);
      for (int k = 0; k < b; ++k) bump_col_of_[bump_cols_[k]] = k;
    }

    // L and U held column-wise during elimination (bump-local row ids in
    // "original" numbering; pivot_of maps original local row -> pivot step).
    lcol_start_.assign(1, 0);
    lcol_row_.clear();
    lcol_val_.clear();
    ucol_start_.assign(1, 0);
    ucol_row_.clear();
    ucol_val_.clear();
    udiag_.assign(b, 0.0);
    std::vector<int> pivot_of(b, -1);   // local row -> elimination step
    std::vector<int> row_at(b, -1);     // elimination step -> local row
    std::vector<double> work(b, 0.0);
    std::vector<char> seen(b, 0);
    std::vector<int> pattern;
    pattern.reserve(64);
    step_mark_.assign(b, 0);
    topo_.reserve(64);
    // static row sparsity, for Markowitz-flavoured pivot tie-breaking
    std::vector<int> row_weight(b, 0);
    for (int k = 0; k < b; ++k) {
      const int p = bump_cols_[k];
      for (int e = bc_start_[p]; e < bc_start_[p + 1]; ++e) {
        const int li = bump_row_of_[bc_row_[e]];
        if (li >= 0) ++row_weight[li];
      }
    }

    for (int col = 0; col < b; ++col) {
      // scatter the column
      pattern.clear();
      const int p = bump_cols_[col];
      for (int e = bc_start_[p]; e < bc_start_[p + 1]; ++e) {
        const int li = bump_row_of_[bc_row_[e]];
        if (li < 0) continue;
        work[li] = bc_val_[e];
        if (!seen[li]) {
          seen[li] = 1;
          pattern.push_back(li);
        }
      }
      // Symbolic reach: every pivot step whose row the elimination touches,
      // in topological (reverse post-) order, found by iterative DFS through
      // the already-built L columns.
      topo_.clear();
      for (int li : pattern) {
        int s0 = pivot_of[li];
        if (s0 < 0 || step_mark_[s0] == col + 1) continue;
        dfs_stack_.clear();
        dfs_stack_.push_back({s0, lcol_start_[s0]});
        step_mark_[s0] = col + 1;
        while (!dfs_stack_.empty()) {
          auto& [st, edge] = dfs_stack_.back();
          if (edge == lcol_start_[st + 1]) {
            topo_.push_back(st);
            dfs_stack_.pop_back();
            continue;
          }
          const int child = pivot_of[lcol_row_[edge]];
          ++edge;
          if (child >= 0 && step_mark_[child] != col + 1) {
            step_mark_[child] = col + 1;
            dfs_stack_.push_back({child, lcol_start_[child]});
          }
        }
      }
      // Numeric unit-lower solve over the reach, dependency order.
      for (auto it = topo_.rbegin(); it != topo_.rend(); ++it) {
        const int step = *it;
        const int prow = row_at[step];
        if (!seen[prow]) {
          seen[prow] = 1;
          pattern.push_back(prow);
          work[prow] = 0.0;
        }
        const double x = work[prow];
        if (x == 0.0) continue;
        for (int e = lcol_start_[step]; e < lcol_start_[step + 1]; ++e) {
          const int li = lcol_row_[e];
          if (!seen[li]) {
            seen[li] = 1;
            pattern.push_back(li);
            work[li] = 0.0;
          }
          work[li] -= x * lcol_val_[e];
        }
      }
      // pivot: sparsest acceptable row within a magnitude threshold of the
      // largest entry (plain partial pivoting fills hub-coupled bumps badly)
      int piv = -1;
      double best = 0.0;
      for (int li : pattern) {
        if (pivot_of[li] >= 0) continue;
        const double a = std::abs(work[li]);
        if (a > best) {
          best = a;
          piv = li;
        }
      }
      if (piv >= 0) {
        const double accept = 0.25 * best;
        int piv_w = row_weight[piv];
        for (int li : pattern) {
          if (pivot_of[li] >= 0) continue;
          const double a = std::abs(work[li]);
          if (a >= accept && row_weight[li] < piv_w) {
            piv_w = row_weight[li];
            piv = li;
          }
        }
      }
      if (piv < 0 || best < kPeelTol) {
        if (unpivoted_rows && unpivoted_positions) {
          unpivoted_rows->clear();
          unpivoted_positions->clear();
          for (int k = col; k < b; ++k) unpivoted_positions->push_back(bump_cols_[k]);
          for (int li = 0; li < b; ++li)
            if (pivot_of[li] < 0) unpivoted_rows->push_back(bump_rows_[li]);
        }
        for (int li : pattern) {
          work[li] = 0.0;
          seen[li] = 0;
        }
        return false;
      }
      // store U (pivoted part) and L (remainder scaled by the pivot)
      const double d = work[piv];
      udiag_[col] = d;
      for (int li : pattern) {
        const double v = work[li];
        work[li] = 0.0;
        seen[li] = 0;
        if (v == 0.0 || li == piv) continue;
        if (pivot_of[li] >= 0) {
          ucol_row_.push_back(pivot_of[li]);
          ucol_val_.push_back(v);
        } else {
          lcol_row_.push_back(li);
          lcol_val_.push_back(v / d);
        }
      }
      ucol_start_.push_back(static_cast<int>(ucol_row_.size()));
      lcol_start_.push_back(static_cast<int>(lcol_row_.size()));
      pivot_of[piv] = col;
      row_at[col] = piv;
    }
    brow_at_ = row_at;
    bump_pivot_of_.assign(b, -1);
    for (int step = 0; step < b; ++step) bump_pivot_of_[row_at[step]] = step;
    return true;
  }

  int bump_size() const { return bump_n_; }

  /// w: row-space right-hand side (consumed); out: per-position solution.
  void ftran(Workspace& w, Workspace& out) const {
    for (const Pivot& pv : row_singletons_) apply_pivot(pv, w, out);
    solve_bump(w, out, false);
    for (auto it = col_singletons_.rbegin(); it != col_singletons_.rend(); ++it)
      apply_pivot(*it, w, out);
  }

  /// w: position-space right-hand side (consumed); out: row-space solution.
  void btran(Workspace& w, Workspace& out) const {
    for (const Pivot& pv : col_singletons_) apply_pivot_t(pv, w, out);
    solve_bump(w, out, true);
    for (auto it = row_singletons_.rbegin(); it != row_singletons_.rend(); ++it)
      apply_pivot_t(*it, w, out);
  }

private:
  bool report_failure(const std::vector<char>& calive, const std::vector<char>& ralive,
                      std::vector<int>* rows, std::vector<int>* positions) const {
    if (rows && positions) {
      rows->clear();
      positions->clear();
      for (int i = 0; i < m_; ++i)
        if (ralive[i]) rows->push_back(i);
      for (int p = 0; p < m_; ++p)
        if (calive[p]) positions->push_back(p);
    }
    return false;
  }

  void apply_pivot(const Pivot& pv, Workspace& w, Workspace& out) const {
    const double t = w[pv.row] / pv.diag;
    if (std::abs(t) < kZero) return;
    out.set(pv.pos, t);
    for (int k = bc_start_[pv.pos]; k < bc_start_[pv.pos + 1]; ++k)
      w.add(bc_row_[k], -t * bc_val_[k]);
  }

  void apply_pivot_t(const Pivot& pv, Workspace& w, Workspace& out) const {
    const double t = w[pv.pos] / pv.diag;
    if (std::abs(t) < kZero) return;
    out.set(pv.row, t);
    for (int k = br_start_[pv.row]; k < br_start_[pv.row + 1]; ++k)
      w.add(br_pos_[k], -t * br_val_[k]);
  }

  void solve_bump(Workspace& w, Workspace& out, bool transposed) const {
    const int b = bump_n_;
    if (b == 0) return;
    rhs_.assign(b, 0.0);
    if (!transposed) {
      // solve Bump z = w[bump rows]; z indexed by elimination step
      std::vector<double>& y = rhs_;
      work_.assign(b, 0.0);
      for (int k = 0; k < b; ++k) work_[k] = w[bump_rows_[k]];
      for (int c = 0; c < b; ++c) {
        const double t = work_[brow_at_[c]];
        y[c] = t;
        if (t == 0.0) continue;
        for (int e = lcol_start_[c]; e < lcol_start_[c + 1]; ++e)
          work_[lcol_row_[e]] -= lcol_val_[e] * t;
      }
      for (int c = b - 1; c >= 0; --c) {
        const double z = y[c] / udiag_[c];
        y[c] = z;
        if (z == 0.0) continue;
        for (int e = ucol_start_[c]; e < ucol_start_[c + 1]; ++e)
          y[ucol_row_[e]] -= ucol_val_[e] * z;
      }
      for (int c = 0; c < b; ++c) {
        const double t = y[c];
        if (std::abs(t) < kZero) continue;
        const int p = bump_cols_[c];
        out.set(p, t);
        for (int e = bc_start_[p]; e < bc_start_[p + 1]; ++e)
          if (bump_row_of_[bc_row_[e]] < 0) w.add(bc_row_[e], -t * bc_val_[e]);
      }
    } else {
      // solve Bump^T y = w[bump cols]; result lands on the bump rows
      std::vector<double>& y = rhs_;
      for (int c = 0; c < b; ++c) {
        double t = w[bump_cols_[c]];
        for (int e = ucol_start_[c]; e < ucol_start_[c + 1]; ++e)
          t -= ucol_val_[e] * y[ucol_row_[e]];
        y[c] = t / udiag_[c];
      }
      for (int c = b - 1; c >= 0; --c) {
        double t = y[c];
        for (int e = lcol_start_[c]; e < lcol_start_[c + 1]; ++e)
          t -= lcol_val_[e] * y[bump_pivot_of_[lcol_row_[e]]];
        y[c] = t;
      }
      for (int c = 0; c < b; ++c) {
        const double t = y[c];
        if (std::abs(t) < kZero) continue;
        const int row = bump_rows_[brow_at_[c]];
        out.set(row, t);
        for (int e = br_start_[row]; e < br_start_[row + 1]; ++e)
          if (bump_col_step_of(br_pos_[e]) < 0) w.add(br_pos_[e], -t * br_val_[e]);
      }
    }
  }

  int bump_col_step_of(int pos) const {
    // bump_cols_ holds positions in elimination order; membership lookup
    // uses the dense map rebuilt per factorization
    return bump_col_of_.empty() ? -1 : bump_col_of_[pos];
  }

  int m_ = 0;
  std::vector<int> bc_start_, bc_row_;
  std::vector<double> bc_val_;
  std::vector<int> br_start_, br_pos_;
  std::vector<double> br_val_;
  std::vector<Pivot> row_singletons_, col_singletons_;
  std::vector<int> bump_rows_, bump_cols_, bump_row_of_, bump_col_of_, bump_pivot_of_, brow_at_;
  std::vector<int> lcol_start_, lcol_row_, ucol_start_, ucol_row_;
  std::vector<double> lcol_val_, ucol_val_, udiag_;
  mutable std::vector<double> rhs_;
  mutable std::vector<double> work_;
  std::vector<int> step_mark_, topo_;
  std::vector<std::pair<int, int>> dfs_stack_;
  int bump_n_ = 0;
};

struct Eta {
  int pos;
  double diag;
  int start; // into shared entry arrays
  int end;
};

class Simplex {
public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    trace_ = std::getenv("PERIM_LP_TRACE") != nullptr;
    verify_ = std::getenv("PERIM_LP_VERIFY") != nullptr;
    n_ = lp.num_cols();
    m_ = lp.num_rows();
    N_ = n_ + m_;
    build_scaled();
    stat_.assign(N_, VarStatus::at_lower);
    xval_.assign(N_, 0.0);
    pos_of_var_.assign(N_, -1);
    basic_var_.assign(m_, -1);
    xb_.assign(m_, 0.0);
    dj_.assign(N_, 0.0);
    devex_.assign(N_, 1.0);
    w_row_.resize(m_);
    w_pos_.resize(m_);
    w_alpha_.resize(m_);
    w_rho_.resize(m_);
    w_arow_.resize(N_);
    is_coupling_.assign(N_, 0);
    for (int j : opt_.coupling_columns)
      if (j >= 0 && j < N_) is_coupling_[j] = 1;
    if (opt_.max_iterations < 0)
      max_iter_ = std::min<long>(50L * (m_ + n_) + 20000L, 4000000L);
    else
      max_iter_ = opt_.max_iterations;
  }

  Solution run(Basis* warm) {
    Solution sol;
    if (warm && warm->valid() && static_cast<int>(warm->status.size()) == N_)
      init_from_basis(*warm);
    else
      init_logical_basis();
    if (!refactorize(true)) {
      // last-resort: restart from the logical basis
      init_logical_basis();
      if (!refactorize(true)) {
        sol.status = SolveStatus::failed;
        sol.note = "basis factorization failed";
        return sol;
      }
    }
    compute_basic_values();

    SolveStatus st = phase1();
    if (st == SolveStatus::optimal) st = phase2();

    if (trace_)
      std::fprintf(stderr,
                   "[lp] done st=%d it=%ld price=%.2fs ftran=%.2fs btran=%.2fs factor=%.2fs "
                   "(n=%ld avg bump=%.0f)\n",
                   static_cast<int>(st), iter_, t_price_, t_ftran_, t_btran_, t_factor_,
                   n_factor_, n_factor_ ? double(bump_sum_) / n_factor_ : 0.0);
    sol.status = st;
    sol.iterations = iter_;
    if (st == SolveStatus::optimal || st == SolveStatus::unbounded) {
      sol.x.assign(n_, 0.0);
      for (int j = 0; j < n_; ++j) sol.x[j] = value_of(j) * cscale_[j];
      sol.objective = lp_.objective_value(sol.x);
    }
    if (st == SolveStatus::infeasible && opt_.collect_infeasibility_note) sol.note = infeas_note();
    if (st == SolveStatus::failed) sol.note = fail_note_;
    if (warm) {
      warm->status.assign(N_, VarStatus::at_lower);
      warm->value.assign(N_, 0.0);
      for (int j = 0; j < N_; ++j) {
        warm->status[j] = stat_[j];
        if (stat_[j] == VarStatus::at_value)
          warm->value[j] = xval_[j] * (j < n_ ? cscale_[j] : 1.0);
      }
    }
    return sol;
  }

private:
  // ---- setup -------------------------------------------------------------

  void build_scaled() {
    rscale_.assign(m_, 1.0);
    cscale_.assign(n_, 1.0);
    // Two rounds of geometric-mean equilibration, snapped to powers of two.
    for (int round = 0; round < 2; ++round) {
      for (int i = 0; i < m_; ++i) {
        const auto cols = lp_.row_columns(i);
        const auto vals = lp_.row_values(i);
        double lo = kInf, hi = 0.0;
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const double a = std::abs(vals[k]) * rscale_[i] * cscale_[cols[k]];
          if (a == 0.0) continue;
          lo = std::min(lo, a);
          hi = std::max(hi, a);
        }
        if (hi > 0.0) rscale_[i] *= snap_pow2(1.0 / std::sqrt(lo * hi));
      }
      std::vector<double> clo(n_, kInf), chi(n_, 0.0);
      for (int i = 0; i < m_; ++i) {
        const auto cols = lp_.row_columns(i);
        const auto vals = lp_.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const double a = std::abs(vals[k]) * rscale_[i] * cscale_[cols[k]];
          if (a == 0.0) continue;
          clo[cols[k]] = std::min(clo[cols[k]], a);
          chi[cols[k]] = std::max(chi[cols[k]], a);
        }
      }
      for (int j = 0; j < n_; ++j)
        if (chi[j] > 0.0) cscale_[j] *= snap_pow2(1.0 / std::sqrt(clo[j] * chi[j]));
    }

    // Scaled matrix in CSC and CSR with logical columns appended.
    const std::int64_t nnz = lp_.num_nonzeros();
    cstart_.assign(N_ + 1, 0);
    std::vector<int> ccount(N_, 0);
    for (int i = 0; i < m_; ++i)
      for (int c : lp_.row_columns(i)) ++ccount[c];
    for (int i = 0; i < m_; ++i) ccount[n_ + i] = 1;
    for (int j = 0; j < N_; ++j) cstart_[j + 1] = cstart_[j] + ccount[j];
    crow_.resize(nnz + m_);
    cval_.resize(nnz + m_);
    rstart_.assign(m_ + 1, 0);
    rcol_.resize(nnz); // structural part only; logicals handled implicitly
    rval_.resize(nnz);
    {
      std::vector<std::int64_t> fill(cstart_.begin(), cstart_.end() - 1);
      std::int64_t rk = 0;
      for (int i = 0; i < m_; ++i) {
        rstart_[i] = rk;
        const auto cols = lp_.row_columns(i);
        const auto vals = lp_.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
          const int j = cols[k];
          const double a = vals[k] * rscale_[i] * cscale_[j];
          crow_[fill[j]] = i;
          cval_[fill[j]] = a;
          ++fill[j];
          rcol_[rk] = j;
          rval_[rk] = a;
          ++rk;
        }
      }
      rstart_[m_] = rk;
      for (int i = 0; i < m_; ++i) {
        crow_[fill[n_ + i]] = i;
        cval_[fill[n_ + i]] = 1.0;
      }
    }

    lb_.assign(N_, 0.0);
    ub_.assign(N_, 0.0);
    cost_.assign(N_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lb_[j] = lp_.col_lower(j) / cscale_[j];
      ub_[j] = lp_.col_upper(j) / cscale_[j];
      cost_[j] = lp_.cost(j) * cscale_[j];
    }
    rhs_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      rhs_[i] = lp_.row_rhs(i) * rscale_[i];
      const int j = n_ + i;
      switch (lp_.row_relation(i)) {
      case Relation::le: lb_[j] = 0.0; ub_[j] = kInf; break;
      case Relation::ge: lb_[j] = -kInf; ub_[j] = 0.0; break;
      case Relation::eq: lb_[j] = 0.0; ub_[j] = 0.0; break;
      }
    }
  }

  static double snap_pow2(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) return 1.0;
    int e = 0;
    std::frexp(s, &e);
    e = std::clamp(e, -20, 20);
    return std::ldexp(1.0, e);
  }

  double nearest_bound_value(int j) const {
    const bool flo = std::isfinite(lb_[j]);
    const bool fup = std::isfinite(ub_[j]);
    if (flo && fup) return (std::abs(lb_[j]) <= std::abs(ub_[j])) ? lb_[j] : ub_[j];
    if (flo) return lb_[j];
    if (fup) return ub_[j];
    return 0.0;
  }

  void set_nonbasic_at_nearest(int j) {
    const bool flo = std::isfinite(lb_[j]);
    const bool fup = std::isfinite(ub_[j]);
    if (!flo && !fup) {
      stat_[j] = VarStatus::free_at_zero;
      xval_[j] = 0.0;
    } else if (flo && (!fup || std::abs(lb_[j]) <= std::abs(ub_[j]))) {
      stat_[j] = VarStatus::at_lower;
      xval_[j] = lb_[j];
    } else {
      stat_[j] = VarStatus::at_upper;
      xval_[j] = ub_[j];
    }
  }

  void init_logical_basis() {
    for (int j = 0; j < n_; ++j) set_nonbasic_at_nearest(j);
    for (int i = 0; i < m_; ++i) {
      const int j = n_ + i;
      stat_[j] = VarStatus::basic;
      basic_var_[i] = j;
      pos_of_var_[j] = i;
    }
    for (int j = 0; j < n_; ++j) pos_of_var_[j] = -1;
  }

  void init_from_basis(const Basis& b) {
    int pos = 0;
    std::fill(pos_of_var_.begin(), pos_of_var_.end(), -1);
    std::fill(basic_var_.begin(), basic_var_.end(), -1);
    for (int j = 0; j < N_; ++j) {
      switch (b.status[j]) {
      case VarStatus::basic:
        if (pos < m_) {
          stat_[j] = VarStatus::basic;
          basic_var_[pos] = j;
          pos_of_var_[j] = pos;
          ++pos;
        } else {
          set_nonbasic_at_nearest(j);
        }
        break;
      case VarStatus::at_lower:
        if (std::isfinite(lb_[j])) {
          stat_[j] = VarStatus::at_lower;
          xval_[j] = lb_[j];
        } else {
          set_nonbasic_at_nearest(j);
        }
        break;
      case VarStatus::at_upper:
        if (std::isfinite(ub_[j])) {
          stat_[j] = VarStatus::at_upper;
          xval_[j] = ub_[j];
        } else {
          set_nonbasic_at_nearest(j);
        }
        break;
      case VarStatus::free_at_zero:
        stat_[j] = VarStatus::free_at_zero;
        xval_[j] = 0.0;
        break;
      case VarStatus::at_value: {
        double v = j < static_cast<int>(b.value.size()) ? b.value[j] : 0.0;
        if (j < n_) v /= cscale_[j];
        v = std::clamp(v, lb_[j], ub_[j]);
        if (v <= lb_[j]) {
          stat_[j] = VarStatus::at_lower;
          xval_[j] = lb_[j];
        } else if (v >= ub_[j]) {
          stat_[j] = VarStatus::at_upper;
          xval_[j] = ub_[j];
        } else {
          stat_[j] = VarStatus::at_value;
          xval_[j] = v;
        }
        break;
      }
      }
    }
    // Top up with logicals of uncovered rows.
    for (int i = 0; i < m_ && pos < m_; ++i) {
      const int j = n_ + i;
      if (stat_[j] == VarStatus::basic) continue;
      stat_[j] = VarStatus::basic;
      basic_var_[pos] = j;
      pos_of_var_[j] = pos;
      ++pos;
    }
  }

  // ---- factorization & linear algebra -------------------------------------

  bool refactorize(bool allow_repair) {
    Stopwatch sw(&t_factor_);
    ++n_factor_;
    if (try_woodbury_factor()) {
      bump_sum_ += factor_.bump_size();
      etas_.clear();
      eta_pos_.clear();
      eta_val_.clear();
      if (build_woodbury_correction()) {
        if (verify_) verify_factorization();
        return true;
      }
      if (trace_) std::fprintf(stderr, "[lp] wood: correction failed (k=%d)\n", wood_.k);
    } else if (trace_ && !opt_.coupling_columns.empty()) {
      std::fprintf(stderr, "[lp] wood: proxy factor failed (k=%d)\n", wood_.k);
    }
    wood_.active = false;
    for (int attempt = 0;; ++attempt) {
      std::vector<int> bad_rows, bad_pos;
      const bool ok = factor_.factor(
          m_,
          [&](int pos, std::vector<int>& rows, std::vector<double>& vals) {
            const int v = basic_var_[pos];
            for (std::int64_t k = cstart_[v]; k < cstart_[v + 1]; ++k) {
              rows.push_back(crow_[k]);
              vals.push_back(cval_[k]);
            }
          },
          &bad_rows, &bad_pos);
      if (ok) {
        bump_sum_ += factor_.bump_size();
        etas_.clear();
        eta_pos_.clear();
        eta_val_.clear();
        if (verify_) verify_factorization();
        return true;
      }
      if (!allow_repair || attempt >= 2 || bad_rows.empty()) return false;
      // Patch: put the logicals of the unresolved rows into the unresolved
      // basis positions; evicted variables go to their nearest bound.
      const std::size_t k = std::min(bad_rows.size(), bad_pos.size());
      for (std::size_t t = 0; t < k; ++t) {
        const int pos = bad_pos[t];
        const int lj = n_ + bad_rows[t];
        const int old = basic_var_[pos];
        if (pos_of_var_[lj] >= 0) continue; // already basic elsewhere
        set_nonbasic_at_nearest(old);
        pos_of_var_[old] = -1;
        basic_var_[pos] = lj;
        pos_of_var_[lj] = pos;
        stat_[lj] = VarStatus::basic;
      }
    }
  }

  // Factor Btilde: the basis with basic coupling columns replaced by the
  // logicals of untaken rows from their own patterns. Returns false when the
  // plain path should be used instead (no basic hubs, no free placeholder
  // rows, or a singular proxy).
  bool try_woodbury_factor() {
    if (opt_.coupling_columns.empty()) return false;
    wood_.hub_pos.clear();
    wood_.hub_var.clear();
    wood_.placeholder_row.clear();
    for (int p = 0; p < m_; ++p)
      if (is_coupling_[basic_var_[p]]) {
        wood_.hub_pos.push_back(p);
        wood_.hub_var.push_back(basic_var_[p]);
      }
    wood_.k = static_cast<int>(wood_.hub_pos.size());
    if (wood_.k == 0) return false;
    std::vector<int> hub_of_pos(m_, -1);
    for (int j = 0; j < wood_.k; ++j) hub_of_pos[wood_.hub_pos[j]] = j;
    // Placeholders usually survive a pivot step; try the previous set before
    // paying for the deficiency pass.
    if (wood_.hub_var == last_hub_vars_ && !last_placeholders_.empty()) {
      wood_.placeholder_row = last_placeholders_;
      if (factor_with_placeholders(hub_of_pos)) return true;
    }
    // Pass 1: factor with the hub slots empty; the unpivotable rows are the
    // unique placeholder set that keeps the proxy nonsingular.
    {
      std::vector<int> bad_rows, bad_pos;
      const bool ok = factor_.factor(
          m_,
          [&](int pos, std::vector<int>& rows, std::vector<double>& vals) {
            if (hub_of_pos[pos] >= 0) return;
            const int v = basic_var_[pos];
            for (std::int64_t k = cstart_[v]; k < cstart_[v + 1]; ++k) {
              rows.push_back(crow_[k]);
              vals.push_back(cval_[k]);
            }
          },
          &bad_rows, &bad_pos);
      if (ok || static_cast<int>(bad_rows.size()) != wood_.k) return false;
      wood_.placeholder_row = bad_rows;
    }
    return factor_with_placeholders(hub_of_pos);
  }

  bool factor_with_placeholders(const std::vector<int>& hub_of_pos) {
    const bool ok = factor_.factor(
        m_,
        [&](int pos, std::vector<int>& rows, std::vector<double>& vals) {
          const int hub = hub_of_pos[pos];
          if (hub >= 0) {
            rows.push_back(wood_.placeholder_row[hub]);
            vals.push_back(1.0);
            return;
          }
          const int v = basic_var_[pos];
          for (std::int64_t k = cstart_[v]; k < cstart_[v + 1]; ++k) {
            rows.push_back(crow_[k]);
            vals.push_back(cval_[k]);
          }
        },
        nullptr, nullptr);
    if (ok) {
      last_hub_vars_ = wood_.hub_var;
      last_placeholders_ = wood_.placeholder_row;
    }
    return ok;
  }

  bool build_woodbury_correction() {
    const int k = wood_.k;
    wood_.wcol_start.assign(1, 0);
    wood_.wcol_idx.clear();
    wood_.wcol_val.clear();
    for (int j = 0; j < k; ++j) {
      w_row_.clear();
      w_pos_.clear();
      scatter_column(wood_.hub_var[j], 1.0, w_row_);
      w_row_.add(wood_.placeholder_row[j], -1.0);
      factor_.ftran(w_row_, w_pos_);
      for (int i : w_pos_.pattern()) {
        const double v = w_pos_[i];
        if (std::abs(v) < kZero) continue;
        wood_.wcol_idx.push_back(i);
        wood_.wcol_val.push_back(v);
      }
      wood_.wcol_start.push_back(static_cast<int>(wood_.wcol_idx.size()));
    }
    // M = I_k + P^T W
    wood_.mlu.assign(static_cast<std::size_t>(k) * k, 0.0);
    for (int j = 0; j < k; ++j) {
      wood_.mlu[static_cast<std::size_t>(j) * k + j] = 1.0;
      // column j of W read at the hub positions
      for (int e = wood_.wcol_start[j]; e < wood_.wcol_start[j + 1]; ++e) {
        for (int a = 0; a < k; ++a)
          if (wood_.wcol_idx[e] == wood_.hub_pos[a])
            wood_.mlu[static_cast<std::size_t>(a) * k + j] += wood_.wcol_val[e];
      }
    }
    // Explicit inverse by Gauss-Jordan with partial pivoting: k is small
    // (bounded by the coupling set), so the k^2 solve cost is negligible and
    // the code stays simple.
    {
      const int kk = k;
      std::vector<double> aug(static_cast<std::size_t>(kk) * 2 * kk, 0.0);
      for (int r = 0; r < kk; ++r) {
        for (int c = 0; c < kk; ++c)
          aug[static_cast<std::size_t>(r) * 2 * kk + c] =
              wood_.mlu[static_cast<std::size_t>(r) * kk + c];
        aug[static_cast<std::size_t>(r) * 2 * kk + kk + r] = 1.0;
      }
      for (int c = 0; c < kk; ++c) {
        int piv = -1;
        double best = kPeelTol;
        for (int r = c; r < kk; ++r) {
          const double a = std::abs(aug[static_cast<std::size_t>(r) * 2 * kk + c]);
          if (a > best) {
            best = a;
            piv = r;
          }
        }
        if (piv < 0) return false;
        if (piv != c)
          for (int x = 0; x < 2 * kk; ++x)
            std::swap(aug[static_cast<std::size_t>(piv) * 2 * kk + x],
                      aug[static_cast<std::size_t>(c) * 2 * kk + x]);
        const double d = aug[static_cast<std::size_t>(c) * 2 * kk + c];
        for (int x = 0; x < 2 * kk; ++x) aug[static_cast<std::size_t>(c) * 2 * kk + x] /= d;
        for (int r = 0; r < kk; ++r) {
          if (r == c) continue;
          const double f = aug[static_cast<std::size_t>(r) * 2 * kk + c];
          if (f == 0.0) continue;
          for (int x = 0; x < 2 * kk; ++x)
            aug[static_cast<std::size_t>(r) * 2 * kk + x] -=
                f * aug[static_cast<std::size_t>(c) * 2 * kk + x];
        }
      }
      wood_.minv.assign(static_cast<std::size_t>(kk) * kk, 0.0);
      for (int r = 0; r < kk; ++r)
        for (int c = 0; c < kk; ++c)
          wood_.minv[static_cast<std::size_t>(r) * kk + c] =
              aug[static_cast<std::size_t>(r) * 2 * kk + kk + c];
    }
    // row-major W for the transposed correction
    wood_.wrow_start.assign(m_ + 1, 0);
    for (int e = 0; e < static_cast<int>(wood_.wcol_idx.size()); ++e)
      ++wood_.wrow_start[wood_.wcol_idx[e] + 1];
    for (int i = 0; i < m_; ++i) wood_.wrow_start[i + 1] += wood_.wrow_start[i];
    wood_.wrow_hub.resize(wood_.wcol_idx.size());
    wood_.wrow_val.resize(wood_.wcol_val.size());
    {
      std::vector<int> fill(wood_.wrow_start.begin(), wood_.wrow_start.end() - 1);
      for (int j = 0; j < k; ++j)
        for (int e = wood_.wcol_start[j]; e < wood_.wcol_start[j + 1]; ++e) {
          const int dst = fill[wood_.wcol_idx[e]]++;
          wood_.wrow_hub[dst] = j;
          wood_.wrow_val[dst] = wood_.wcol_val[e];
        }
    }
    wg_.assign(k, 0.0);
    wu_.assign(k, 0.0);
    wood_.active = true;
    if (verify_) {
      const std::vector<double>& m_copy = wood_.mlu;
      for (int j = 0; j < k; ++j) {
        std::vector<double> g(k);
        for (int a = 0; a < k; ++a) g[a] = m_copy[static_cast<std::size_t>(a) * k + j];
        msolve(g);
        for (int a = 0; a < k; ++a) {
          const double want = a == j ? 1.0 : 0.0;
          if (std::abs(g[a] - want) > 1e-7) {
            std::fprintf(stderr, "[lp] M-LU self-check FAIL k=%d col %d: dev %.3e at %d\n", k, j,
                         std::abs(g[a] - want), a);
            for (int r = 0; r < k; ++r) {
              std::fprintf(stderr, "     M[%d]=", r);
              for (int cx = 0; cx < k; ++cx)
                std::fprintf(stderr, " %.4g", m_copy[static_cast<std::size_t>(r) * k + cx]);
              std::fprintf(stderr, "\n");
            }
            return true;
          }
        }
      }
    }
    return true;
  }

  void verify_factorization() {
    double worst = 0.0;
    int worst_pos = -1;
    std::vector<int> probes;
    for (int p = 0; p < m_; p += std::max(1, m_ / 9)) probes.push_back(p);
    for (int j = 0; j < wood_.k; ++j) probes.push_back(wood_.hub_pos[j]);
    for (int probe : probes) {
      w_row_.clear();
      w_pos_.clear();
      scatter_column(basic_var_[probe], 1.0, w_row_);
      base_ftran(w_row_, w_pos_);
      for (int i : w_pos_.pattern()) {
        const double want = (i == probe) ? 1.0 : 0.0;
        const double err = std::abs(w_pos_[i] - want);
        if (err > worst) {
          worst = err;
          worst_pos = probe;
        }
      }
    }
    if (worst > 1e-6) {
      std::fprintf(stderr, "[lp] VERIFY FAIL refactor #%ld wood(k=%d active=%d) err=%.3e at pos %d\n",
                   n_factor_, wood_.k, wood_.active ? 1 : 0, worst, worst_pos);
      // dissect the first failing hub column
      for (int j = 0; j < wood_.k; ++j) {
        if (wood_.hub_pos[j] != worst_pos) continue;
        w_row_.clear();
        w_pos_.clear();
        scatter_column(wood_.hub_var[j], 1.0, w_row_);
        factor_.ftran(w_row_, w_pos_); // xt = Btilde^-1 H_j
        // expected: xt = e_{p_j} + W_j; compare at the hub positions
        for (int a = 0; a < wood_.k; ++a) {
          double wj_pa = 0.0;
          for (int e = wood_.wcol_start[j]; e < wood_.wcol_start[j + 1]; ++e)
            if (wood_.wcol_idx[e] == wood_.hub_pos[a]) wj_pa = wood_.wcol_val[e];
          const double expect = (a == j ? 1.0 : 0.0) + wj_pa;
          const double got = w_pos_[wood_.hub_pos[a]];
          if (std::abs(expect - got) > 1e-9)
            std::fprintf(stderr, "   hub %d at pos %d: xt=%.6g expect=%.6g (Wj[pa]=%.6g)\n", a,
                         wood_.hub_pos[a], got, expect, wj_pa);
        }
        // check M * e_j against the gathered g
        for (int a = 0; a < wood_.k; ++a) wg_[a] = w_pos_[wood_.hub_pos[a]];
        msolve(wg_);
        double dev = 0.0;
        int arg = -1;
        for (int a = 0; a < wood_.k; ++a) {
          const double want = a == j ? 1.0 : 0.0;
          if (std::abs(wg_[a] - want) > dev) {
            dev = std::abs(wg_[a] - want);
            arg = a;
          }
        }
        std::fprintf(stderr, "   msolve(g) vs e_%d: max dev %.3e at %d\n", j, dev, arg);
        break;
      }
    }
  }

  void msolve(std::vector<double>& g) const {
    const int k = wood_.k;
    scratch_.assign(k, 0.0);
    for (int r = 0; r < k; ++r) {
      double s = 0.0;
      for (int c = 0; c < k; ++c) s += wood_.minv[static_cast<std::size_t>(r) * k + c] * g[c];
      scratch_[r] = s;
    }
    g = scratch_;
  }

  void msolve_t(std::vector<double>& g) const {
    const int k = wood_.k;
    scratch_.assign(k, 0.0);
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (int r = 0; r < k; ++r) s += wood_.minv[static_cast<std::size_t>(r) * k + c] * g[r];
      scratch_[c] = s;
    }
    g = scratch_;
  }

  /// Base FTRAN through Btilde plus the low-rank correction: x = xt - W M^-1 P^T xt.
  void base_ftran(Workspace& w, Workspace& out) {
    factor_.ftran(w, out);
    if (!wood_.active) return;
    const int k = wood_.k;
    bool any = false;
    for (int j = 0; j < k; ++j) {
      wg_[j] = out[wood_.hub_pos[j]];
      any = any || wg_[j] != 0.0;
    }
    if (!any) return;
    msolve(wg_);
    for (int j = 0; j < k; ++j) {
      const double g = wg_[j];
      if (std::abs(g) < kZero) continue;
      for (int e = wood_.wcol_start[j]; e < wood_.wcol_start[j + 1]; ++e)
        out.add(wood_.wcol_idx[e], -g * wood_.wcol_val[e]);
    }
  }

  /// Base BTRAN: y = Btilde^-T (c - P M^-T W^T c).
  void base_btran(Workspace& w, Workspace& out) {
    if (wood_.active) {
      const int k = wood_.k;
      std::fill(wu_.begin(), wu_.end(), 0.0);
      bool any = false;
      for (int i : w.pattern()) {
        const double v = w[i];
        if (v == 0.0) continue;
        for (int e = wood_.wrow_start[i]; e < wood_.wrow_start[i + 1]; ++e) {
          wu_[wood_.wrow_hub[e]] += wood_.wrow_val[e] * v;
          any = true;
        }
      }
      if (any) {
        msolve_t(wu_);
        for (int j = 0; j < k; ++j)
          if (wu_[j] != 0.0) w.add(wood_.hub_pos[j], -wu_[j]);
      }
    }
    factor_.btran(w, out);
  }

  void scatter_column(int v, double scale, Workspace& w) const {
    for (std::int64_t k = cstart_[v]; k < cstart_[v + 1]; ++k)
      w.add(crow_[k], scale * cval_[k]);
  }

  /// alpha = B^-1 * column(v), result in position space.
  void ftran_column(int v, Workspace& out) {
    Stopwatch sw(&t_ftran_);
    w_row_.clear();
    out.clear();
    scatter_column(v, 1.0, w_row_);
    base_ftran(w_row_, out);
    for (const Eta& e : etas_) {
      const double t = out[e.pos] / e.diag;
      if (std::abs(t) < kZero) {
        out.set(e.pos, 0.0);
        continue;
      }
      out.set(e.pos, t);
      for (int k = e.start; k < e.end; ++k) out.add(eta_pos_[k], -eta_val_[k] * t);
    }
  }

  /// rho = B^-T * e_pos, result in row space.
  void btran_unit(int pos, Workspace& out) {
    w_pos_.clear();
    out.clear();
    w_pos_.set(pos, 1.0);
    btran_workspace(w_pos_, out);
  }

  void btran_workspace(Workspace& w, Workspace& out) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = w[it->pos];
      for (int k = it->start; k < it->end; ++k) s -= eta_val_[k] * w[eta_pos_[k]];
      w.set(it->pos, s / it->diag);
    }
    base_btran(w, out);
  }

  void compute_basic_values() {
    w_row_.clear();
    for (int i = 0; i < m_; ++i)
      if (rhs_[i] != 0.0) w_row_.add(i, rhs_[i]);
    for (int j = 0; j < N_; ++j) {
      if (stat_[j] == VarStatus::basic || xval_[j] == 0.0) continue;
      scatter_column(j, -xval_[j], w_row_);
    }
    w_pos_.clear();
    base_ftran(w_row_, w_pos_);
    for (const Eta& e : etas_) {
      const double t = w_pos_[e.pos] / e.diag;
      w_pos_.set(e.pos, t);
      if (std::abs(t) < kZero) continue;
      for (int k = e.start; k < e.end; ++k) w_pos_.add(eta_pos_[k], -eta_val_[k] * t);
    }
    std::fill(xb_.begin(), xb_.end(), 0.0);
    for (int i : w_pos_.pattern()) xb_[i] = w_pos_[i];
  }

  void compute_reduced_costs(const std::vector<double>& c) {
    w_pos_.clear();
    for (int i = 0; i < m_; ++i) {
      const double cb = c[basic_var_[i]];
      if (cb != 0.0) w_pos_.add(i, cb);
    }
    w_rho_.clear();
    btran_workspace(w_pos_, w_rho_);
    for (int j = 0; j < N_; ++j) dj_[j] = c[j];
    for (int i : w_rho_.pattern()) {
      const double y = w_rho_[i];
      if (y == 0.0) continue;
      for (std::int64_t k = rstart_[i]; k < rstart_[i + 1]; ++k) dj_[rcol_[k]] -= y * rval_[k];
      dj_[n_ + i] -= y;
    }
    for (int i = 0; i < m_; ++i) dj_[basic_var_[i]] = 0.0;
  }

  double value_of(int j) const {
    return stat_[j] == VarStatus::basic ? xb_[pos_of_var_[j]] : xval_[j];
  }

  // ---- simplex phases ------------------------------------------------------

  double infeasibility_of(int pos) const {
    const int v = basic_var_[pos];
    if (xb_[pos] < lb_[v] - opt_.feas_tol) return lb_[v] - xb_[pos];
    if (xb_[pos] > ub_[v] + opt_.feas_tol) return xb_[pos] - ub_[v];
    return 0.0;
  }

  double total_infeasibility() const {
    double s = 0.0;
    for (int i = 0; i < m_; ++i) s += infeasibility_of(i);
    return s;
  }

  SolveStatus phase1() {
    std::vector<double> c1(N_, 0.0);
    long stall = 0;
    bool bland = false;
    while (true) {
      if (iter_ >= max_iter_) {
        fail_note_ = "iteration limit in phase 1";
        return SolveStatus::failed;
      }
      double infeas = 0.0;
      std::fill(c1.begin(), c1.end(), 0.0);
      int n_viol = 0;
      for (int i = 0; i < m_; ++i) {
        const int v = basic_var_[i];
        if (xb_[i] < lb_[v] - opt_.feas_tol) {
          c1[v] = -1.0;
          infeas += lb_[v] - xb_[i];
          ++n_viol;
        } else if (xb_[i] > ub_[v] + opt_.feas_tol) {
          c1[v] = 1.0;
          infeas += xb_[i] - ub_[v];
          ++n_viol;
        }
      }
      if (n_viol == 0) return SolveStatus::optimal; // primal feasible
      compute_reduced_costs(c1);

      const int enter = bland ? pick_entering_bland() : pick_entering_devex();
      if (enter < 0) return SolveStatus::infeasible;
      const double last_infeas = infeas;
      if (!phase1_step(enter)) {
        fail_note_ = "numerical breakdown in phase 1 ratio test";
        return SolveStatus::failed;
      }
      ++iter_;
      if (trace_ && iter_ % 5000 == 0)
        std::fprintf(stderr, "[lp] it=%ld phase1 infeas=%.6g nviol=%d bland=%d\n", iter_, infeas,
                     n_viol, bland ? 1 : 0);
      if (need_refactor()) {
        if (!refactorize(true)) {
          fail_note_ = "refactorization failed";
          return SolveStatus::failed;
        }
        compute_basic_values();
      }
      const double now = total_infeasibility();
      if (now < last_infeas - 1e-12 * (1.0 + last_infeas)) {
        stall = 0;
        bland = false;
      } else if (++stall > stall_limit()) {
        bland = true;
      }
    }
  }

  bool phase1_step(int enter) {
    ftran_column(enter, w_alpha_);
    const double sigma = (dj_[enter] < 0.0) ? 1.0 : -1.0;

    // First blocking event, including infeasible basics reaching the bound
    // they violate (they become feasible there and leave the basis).
    double theta = kInf;
    int p_leave = -1;
    double best_alpha = 0.0;
    int leave_to_upper = 0;
    for (int p : w_alpha_.pattern()) {
      const double a = w_alpha_[p];
      if (std::abs(a) < kPivotTol) continue;
      const double delta = sigma * a; // basic value moves by -theta*delta
      const int v = basic_var_[p];
      double ratio = kInf;
      int to_upper = 0;
      if (xb_[p] < lb_[v] - opt_.feas_tol) {
        if (delta < 0.0) ratio = (xb_[p] - lb_[v]) / delta; // rising to lb
      } else if (xb_[p] > ub_[v] + opt_.feas_tol) {
        if (delta > 0.0) {
          ratio = (xb_[p] - ub_[v]) / delta; // falling to ub
          to_upper = 1;
        }
      } else if (delta > 0.0 && std::isfinite(lb_[v])) {
        ratio = (xb_[p] - lb_[v]) / delta;
      } else if (delta < 0.0 && std::isfinite(ub_[v])) {
        ratio = (xb_[p] - ub_[v]) / delta;
        to_upper = 1;
      }
      if (ratio < -1e-12) ratio = 0.0;
      if (ratio < theta - 1e-12 ||
          (ratio < theta + 1e-12 && std::abs(a) > std::abs(best_alpha))) {
        theta = ratio;
        p_leave = p;
        best_alpha = a;
        leave_to_upper = to_upper;
      }
    }
    const double span = entering_span(enter, sigma);
    if (span < theta) {
      flip_bound(enter, sigma, span);
      return true;
    }
    if (p_leave < 0) {
      // Phase-1 cost is bounded below by zero, so an unbounded ray cannot
      // improve it; treat as a degenerate no-op and let pricing move on.
      return std::isfinite(span) ? (flip_bound(enter, sigma, span), true) : false;
    }
    theta = std::max(0.0, theta);
    pivot(enter, p_leave, sigma, theta, leave_to_upper, /*update_duals=*/false);
    return true;
  }

  SolveStatus phase2() {
    compute_reduced_costs(cost_);
    std::fill(devex_.begin(), devex_.end(), 1.0);
    long stall = 0;
    bool bland = false;
    while (true) {
      if (iter_ >= max_iter_) {
        fail_note_ = "iteration limit in phase 2";
        return SolveStatus::failed;
      }
      const int enter = bland ? pick_entering_bland() : pick_entering_devex();
      if (enter < 0) return SolveStatus::optimal;

      ftran_column(enter, w_alpha_);
      const double sigma = (dj_[enter] < 0.0) ? 1.0 : -1.0;

      // Harris two-pass ratio test.
      const double rel = opt_.feas_tol;
      double theta_cap = kInf;
      for (int p : w_alpha_.pattern()) {
        const double a = w_alpha_[p];
        if (std::abs(a) < kPivotTol) continue;
        const double delta = sigma * a;
        const int v = basic_var_[p];
        if (delta > 0.0 && std::isfinite(lb_[v]))
          theta_cap = std::min(theta_cap, (xb_[p] - lb_[v] + rel) / delta);
        else if (delta < 0.0 && std::isfinite(ub_[v]))
          theta_cap = std::min(theta_cap, (xb_[p] - ub_[v] - rel) / delta);
      }
      const double span = entering_span(enter, sigma);

      if (theta_cap == kInf && span == kInf) return SolveStatus::unbounded;

      int p_leave = -1;
      double theta = kInf;
      double best_alpha = 0.0;
      int leave_to_upper = 0;
      for (int p : w_alpha_.pattern()) {
        const double a = w_alpha_[p];
        if (std::abs(a) < kPivotTol) continue;
        const double delta = sigma * a;
        const int v = basic_var_[p];
        double ratio;
        int to_upper;
        if (delta > 0.0 && std::isfinite(lb_[v])) {
          ratio = (xb_[p] - lb_[v]) / delta;
          to_upper = 0;
        } else if (delta < 0.0 && std::isfinite(ub_[v])) {
          ratio = (xb_[p] - ub_[v]) / delta;
          to_upper = 1;
        } else {
          continue;
        }
        bool better;
        if (bland) {
          // exact minimum ratio, lowest variable index on ties
          better = p_leave < 0 || ratio < theta - 1e-15 ||
                   (ratio <= theta + 1e-15 && basic_var_[p] < basic_var_[p_leave]);
        } else {
          // Harris pass 2: most stable pivot among ratios within the cap
          if (ratio > theta_cap) continue;
          better = p_leave < 0 || std::abs(a) > std::abs(best_alpha);
        }
        if (better) {
          p_leave = p;
          theta = ratio;
          best_alpha = a;
          leave_to_upper = to_upper;
        }
      }
      if (p_leave >= 0) theta = std::max(0.0, theta);

      if (span <= (p_leave >= 0 ? theta : kInf)) {
        flip_bound(enter, sigma, span);
        ++iter_;
        continue;
      }
      if (p_leave < 0) return SolveStatus::unbounded;

      const double drop = std::abs(dj_[enter]) * theta;
      pivot(enter, p_leave, sigma, theta, leave_to_upper, /*update_duals=*/true);
      ++iter_;
      if (trace_ && iter_ % 5000 == 0) {
        double obj = 0.0;
        for (int j = 0; j < N_; ++j) obj += cost_[j] * value_of(j);
        std::fprintf(stderr, "[lp] it=%ld phase2 obj=%.6g theta=%.3g bland=%d etas=%zu\n", iter_,
                     obj, theta, bland ? 1 : 0, etas_.size());
      }
      if (drop > 1e-12) {
        stall = 0;
        bland = false;
      } else if (++stall > stall_limit()) {
        bland = true;
      }
      if (need_refactor()) {
        if (!refactorize(true)) {
          fail_note_ = "refactorization failed";
          return SolveStatus::failed;
        }
        compute_basic_values();
        compute_reduced_costs(cost_);
      }
    }
  }

  long stall_limit() const { return std::max<long>(1000, m_ / 2); }

  bool need_refactor() const {
    if (etas_.size() >= static_cast<std::size_t>(opt_.refactor_interval)) return true;
    // long eta files slow every subsequent solve; cap their total size.
    // coupled bases make inherently dense etas, so the budget widens there
    // (their refactorization is also what rebuilds the hub correction).
    const int scale = opt_.coupling_columns.empty() ? 1 : 8;
    return eta_pos_.size() > static_cast<std::size_t>(std::max(20000, scale * m_ / 2));
  }

  // Distance the entering variable may travel toward its own blocking bound.
  double entering_span(int j, double sigma) const {
    if (stat_[j] == VarStatus::at_value)
      return sigma > 0.0 ? (std::isfinite(ub_[j]) ? ub_[j] - xval_[j] : kInf)
                         : (std::isfinite(lb_[j]) ? xval_[j] - lb_[j] : kInf);
    if (std::isfinite(lb_[j]) && std::isfinite(ub_[j])) return ub_[j] - lb_[j];
    return kInf;
  }

  // ---- pivoting machinery --------------------------------------------------

  void flip_bound(int j, double sigma, double span) {
    // Move the entering variable to its opposite bound; basics absorb it.
    for (int p : w_alpha_.pattern()) {
      const double a = w_alpha_[p];
      if (a == 0.0) continue;
      xb_[p] -= sigma * span * a;
    }
    if (sigma > 0.0) {
      stat_[j] = VarStatus::at_upper;
      xval_[j] = ub_[j];
    } else {
      stat_[j] = VarStatus::at_lower;
      xval_[j] = lb_[j];
    }
  }

  void pivot(int enter, int p_leave, double sigma, double theta, int leave_to_upper,
             bool update_duals) {
    const int leave = basic_var_[p_leave];
    const double alpha_r = w_alpha_[p_leave];

    // Dual/devex updates need the pivot row of the *pre-pivot* basis.
    if (update_duals) {
      Stopwatch sw(&t_btran_);
      btran_unit(p_leave, w_rho_);
      w_arow_.clear();
      for (int i : w_rho_.pattern()) {
        const double y = w_rho_[i];
        if (y == 0.0) continue;
        for (std::int64_t k = rstart_[i]; k < rstart_[i + 1]; ++k)
          w_arow_.add(rcol_[k], y * rval_[k]);
        w_arow_.add(n_ + i, y);
      }
      const double theta_d = dj_[enter] / alpha_r;
      const double gamma_e = std::max(devex_[enter] / (alpha_r * alpha_r), 1.0);
      for (int j : w_arow_.pattern()) {
        if (stat_[j] == VarStatus::basic) continue;
        const double arj = w_arow_[j];
        if (arj == 0.0) continue;
        dj_[j] -= theta_d * arj;
        const double cand = gamma_e * arj * arj;
        if (cand > devex_[j]) devex_[j] = cand;
      }
      dj_[leave] = -theta_d;
      dj_[enter] = 0.0;
      devex_[leave] = std::max(gamma_e, 1.0);
    }

    // Primal update.
    for (int p : w_alpha_.pattern()) {
      const double a = w_alpha_[p];
      if (a == 0.0) continue;
      xb_[p] -= theta * sigma * a;
    }
    const double enter_value = (stat_[enter] == VarStatus::free_at_zero ? 0.0 : xval_[enter]) +
                               sigma * theta;
    xb_[p_leave] = enter_value;
    xval_[leave] = leave_to_upper ? ub_[leave] : lb_[leave];
    stat_[leave] = leave_to_upper ? VarStatus::at_upper : VarStatus::at_lower;
    stat_[enter] = VarStatus::basic;
    basic_var_[p_leave] = enter;
    pos_of_var_[enter] = p_leave;
    pos_of_var_[leave] = -1;

    // Append the product-form eta for this pivot.
    Eta e;
    e.pos = p_leave;
    e.diag = alpha_r;
    e.start = static_cast<int>(eta_pos_.size());
    for (int p : w_alpha_.pattern()) {
      if (p == p_leave) continue;
      const double a = w_alpha_[p];
      if (std::abs(a) < kZero) continue;
      eta_pos_.push_back(p);
      eta_val_.push_back(a);
    }
    e.end = static_cast<int>(eta_pos_.size());
    etas_.push_back(e);
  }

  // ---- pricing --------------------------------------------------------------

  bool eligible(int j, double tol) const {
    if (lb_[j] == ub_[j]) return false;
    switch (stat_[j]) {
    case VarStatus::at_lower: return dj_[j] < -tol;
    case VarStatus::at_upper: return dj_[j] > tol;
    case VarStatus::free_at_zero: return std::abs(dj_[j]) > tol;
    case VarStatus::at_value: return std::abs(dj_[j]) > tol;
    case VarStatus::basic: return false;
    }
    return false;
  }

  struct Stopwatch {
    double* sink;
    std::chrono::steady_clock::time_point t0;
    explicit Stopwatch(double* s) : sink(s), t0(std::chrono::steady_clock::now()) {}
    ~Stopwatch() { *sink += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
  };

  int pick_entering_devex() {
    Stopwatch sw(&t_price_);
    const int block = std::max(512, N_ / 128);
    const int nblocks = (N_ + block - 1) / block;
    int best = -1;
    double best_score = 0.0;
    int blocks_since_found = 0;
    for (int b = 0; b < nblocks; ++b) {
      const int blk = (price_cursor_ + b) % nblocks;
      const int lo = blk * block;
      const int hi = std::min(N_, lo + block);
      for (int j = lo; j < hi; ++j) {
        if (!eligible(j, opt_.opt_tol)) continue;
        const double score = dj_[j] * dj_[j] / devex_[j];
        if (score > best_score) {
          best_score = score;
          best = j;
        }
      }
      if (best >= 0 && ++blocks_since_found >= 4) {
        price_cursor_ = (blk + 1) % nblocks;
        return best;
      }
    }
    if (best >= 0) price_cursor_ = 0;
    return best;
  }

  int pick_entering_bland() {
    for (int j = 0; j < N_; ++j)
      if (eligible(j, opt_.opt_tol)) return j;
    return -1;
  }

  std::string infeas_note() {
    std::ostringstream os;
    os << "infeasible; violated rows:";
    int shown = 0;
    for (int i = 0; i < m_ && shown < 8; ++i) {
      const double v = infeasibility_of(i);
      if (v <= 0.0) continue;
      const int var = basic_var_[i];
      if (var >= n_) {
        const int row = var - n_;
        os << " " << (lp_.row_name(row).empty() ? "r" + std::to_string(row) : lp_.row_name(row))
           << " (by " << v << ")";
        ++shown;
      }
    }
    return os.str();
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_ = 0, m_ = 0, N_ = 0;
  bool trace_ = false;
  bool verify_ = false;
  double t_price_ = 0, t_ftran_ = 0, t_btran_ = 0, t_factor_ = 0, t_update_ = 0;
  long n_factor_ = 0, bump_sum_ = 0;
  long iter_ = 0;
  long max_iter_ = 0;
  int price_cursor_ = 0;
  std::string fail_note_;

  std::vector<double> rscale_, cscale_;
  std::vector<std::int64_t> cstart_;
  std::vector<int> crow_;
  std::vector<double> cval_;
  std::vector<std::int64_t> rstart_;
  std::vector<int> rcol_;
  std::vector<double> rval_;
  std::vector<double> lb_, ub_, cost_, rhs_;

  std::vector<VarStatus> stat_;
  std::vector<double> xval_;
  std::vector<int> basic_var_, pos_of_var_;
  std::vector<double> xb_, dj_, devex_;

  BasisFactor factor_;
  // Low-rank coupling correction: B = Btilde + (H - E) P^T, solved through
  // the Sherman-Morrison-Woodbury identity with M = I + P^T W, W = Btilde^-1 (H - E).
  struct Woodbury {
    bool active = false;
    int k = 0;
    std::vector<int> hub_pos, hub_var, placeholder_row;
    std::vector<int> wcol_start, wcol_idx;
    std::vector<double> wcol_val;
    std::vector<int> wrow_start, wrow_hub;
    std::vector<double> wrow_val;
    std::vector<double> mlu;
    std::vector<double> minv;
  } wood_;
  mutable std::vector<double> scratch_;
  std::vector<char> is_coupling_;
  std::vector<int> last_hub_vars_, last_placeholders_;
  std::vector<double> wg_, wu_;
  std::vector<Eta> etas_;
  std::vector<int> eta_pos_;
  std::vector<double> eta_val_;

  Workspace w_row_, w_pos_, w_alpha_, w_rho_, w_arow_;
};

} // namespace

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  Simplex s(lp, options);
  return s.run(nullptr);
}

Solution solve_lp(const LinearProgram& lp, Basis& basis, const SimplexOptions& options) {
  Simplex s(lp, options);
  return s.run(&basis);
}

} // namespace perim::lp
