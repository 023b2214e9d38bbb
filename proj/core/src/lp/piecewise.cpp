#include "perim/lp/piecewise.hpp"

#include <algorithm>
#include <cmath>

#include "perim/errors.hpp"

namespace perim::lp {

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
  for (std::size_t k = 0; k < other.vars.size(); ++k) add(other.vars[k], scale * other.coefs[k]);
  constant += scale * other.constant;
  return *this;
}

void PiecewiseModel::check_expr(const LinExpr& e) const {
  for (int v : e.vars)
    if (v < 0 || v >= num_vars())
      throw config_error("piecewise expression references unknown variable");
}

int PiecewiseModel::add_decision(std::string name, double lb, double ub) {
  kind_.push_back(Kind::decision);
  names_.push_back(std::move(name));
  lb_.push_back(lb);
  ub_.push_back(ub);
  expr_index_.push_back(-1);
  return num_vars() - 1;
}

int PiecewiseModel::add_defined(std::string name, LinExpr expr) {
  check_expr(expr);
  kind_.push_back(Kind::defined);
  names_.push_back(std::move(name));
  lb_.push_back(-kInf);
  ub_.push_back(kInf);
  expr_index_.push_back(static_cast<int>(branches_.size()));
  branches_.push_back({std::move(expr)});
  return num_vars() - 1;
}

int PiecewiseModel::add_min(std::string name, std::vector<LinExpr> branches) {
  if (branches.empty()) throw config_error("min node needs at least one branch");
  for (const auto& b : branches) check_expr(b);
  kind_.push_back(Kind::min_node);
  names_.push_back(std::move(name));
  lb_.push_back(-kInf);
  ub_.push_back(kInf);
  expr_index_.push_back(static_cast<int>(branches_.size()));
  branches_.push_back(std::move(branches));
  ++n_nodes_;
  return num_vars() - 1;
}

int PiecewiseModel::add_max(std::string name, std::vector<LinExpr> branches) {
  if (branches.empty()) throw config_error("max node needs at least one branch");
  for (const auto& b : branches) check_expr(b);
  kind_.push_back(Kind::max_node);
  names_.push_back(std::move(name));
  lb_.push_back(-kInf);
  ub_.push_back(kInf);
  expr_index_.push_back(static_cast<int>(branches_.size()));
  branches_.push_back(std::move(branches));
  ++n_nodes_;
  return num_vars() - 1;
}

void PiecewiseModel::add_constraint(LinExpr expr, Relation rel, double rhs, std::string name) {
  check_expr(expr);
  plain_rows_.push_back({std::move(expr), rel, rhs, std::move(name)});
}

void PiecewiseModel::add_objective(const LinExpr& expr, double scale) {
  check_expr(expr);
  for (std::size_t k = 0; k < expr.vars.size(); ++k)
    objective_terms_.emplace_back(expr.vars[k], scale * expr.coefs[k]);
  objective_constant_ += scale * expr.constant;
}

namespace {
// Sign lattice: bit 0 = "objective can increase with the variable",
// bit 1 = "objective can decrease with the variable".
constexpr std::uint8_t kUp = 1;
constexpr std::uint8_t kDown = 2;

std::uint8_t sign_of(double c) {
  if (c > 0.0) return kUp;
  if (c < 0.0) return kDown;
  return 0;
}

std::uint8_t scaled(std::uint8_t s, double coef) {
  if (coef == 0.0 || s == 0) return 0;
  if (coef > 0.0) return s;
  std::uint8_t r = 0;
  if (s & kUp) r |= kDown;
  if (s & kDown) r |= kUp;
  return r;
}
} // namespace

void PiecewiseModel::check_polarity() const {
  // Nodes (and anything defined from them) may not appear in plain rows:
  // a plain constraint could press a node off its envelope.
  std::vector<char> tainted(kind_.size(), 0);
  for (int v = 0; v < num_vars(); ++v) {
    if (kind_[v] == Kind::min_node || kind_[v] == Kind::max_node) tainted[v] = 1;
    if (expr_index_[v] >= 0)
      for (const auto& b : branches_[expr_index_[v]])
        for (int u : b.vars)
          if (tainted[u] && kind_[v] == Kind::defined) tainted[v] = 1;
  }
  for (const auto& row : plain_rows_)
    for (int u : row.expr.vars)
      if (tainted[u])
        throw polarity_error(names_[u] + " (used in plain constraint " + row.name + ")");

  // Reverse sweep of objective sensitivity over the DAG. Pressure reaches a
  // node through the objective, through defined-variable equalities, and
  // through its direct appearance in another node's branches. Sensitivity is
  // not flowed from a branch back into defined or decision variables: those
  // appearances only shape an envelope, they do not exert pressure, and
  // following them would mark every state variable as mixed. The per-solve
  // tightness check covers what this structural pass cannot prove.
  std::vector<std::uint8_t> sens(kind_.size(), 0);
  for (const auto& [v, c] : objective_terms_) sens[v] |= sign_of(c);
  for (int v = num_vars() - 1; v >= 0; --v) {
    if (sens[v] == 0 || expr_index_[v] < 0) continue;
    const bool from_node = kind_[v] == Kind::min_node || kind_[v] == Kind::max_node;
    for (const auto& b : branches_[expr_index_[v]])
      for (std::size_t k = 0; k < b.vars.size(); ++k) {
        const int u = b.vars[k];
        const bool u_is_node = kind_[u] == Kind::min_node || kind_[u] == Kind::max_node;
        if (!from_node || u_is_node) sens[u] |= scaled(sens[v], b.coefs[k]);
      }
  }
  for (int v = 0; v < num_vars(); ++v) {
    if (kind_[v] == Kind::min_node) {
      if (sens[v] & kUp) throw polarity_error(names_[v]);
      if (sens[v] == 0) throw polarity_error(names_[v] + " (no objective pressure)");
    }
    if (kind_[v] == Kind::max_node) {
      if (sens[v] & kDown) throw polarity_error(names_[v]);
      if (sens[v] == 0) throw polarity_error(names_[v] + " (no objective pressure)");
    }
  }
}

PiecewiseModel::Reformulation PiecewiseModel::reformulate_mapped() const {
  check_polarity();

  Reformulation out;
  LinearProgram& lp = out.lp;
  out.rows_of.resize(kind_.size());
  int n_rows = static_cast<int>(plain_rows_.size());
  std::int64_t nnz = 0;
  for (int v = 0; v < num_vars(); ++v)
    if (expr_index_[v] >= 0)
      for (const auto& b : branches_[expr_index_[v]]) {
        ++n_rows;
        nnz += static_cast<std::int64_t>(b.vars.size()) + 1;
      }
  for (const auto& r : plain_rows_) nnz += static_cast<std::int64_t>(r.expr.vars.size());
  lp.reserve(num_vars(), n_rows, nnz);

  std::vector<double> cost(kind_.size(), 0.0);
  for (const auto& [v, c] : objective_terms_) cost[v] += c;

  for (int v = 0; v < num_vars(); ++v) {
    double lb = lb_[v];
    double ub = ub_[v];
    // Constant branches tighten the node's own bound instead of adding rows.
    if (expr_index_[v] >= 0 && kind_[v] != Kind::defined) {
      for (const auto& b : branches_[expr_index_[v]]) {
        if (!b.is_constant()) continue;
        if (kind_[v] == Kind::min_node) ub = std::min(ub, b.constant);
        else lb = std::max(lb, b.constant);
      }
    }
    lp.add_column(lb, ub, cost[v], names_[v]);
  }
  lp.set_objective_constant(objective_constant_);

  std::vector<int> idx;
  std::vector<double> val;
  auto add_branch_row = [&](int v, const LinExpr& b, Relation rel) {
    // v - branch <= 0  (min) or >= 0 (max); rhs carries the branch constant.
    idx.clear();
    val.clear();
    idx.push_back(v);
    val.push_back(1.0);
    for (std::size_t k = 0; k < b.vars.size(); ++k) {
      idx.push_back(b.vars[k]);
      val.push_back(-b.coefs[k]);
    }
    out.rows_of[v].push_back(lp.add_row(rel, b.constant, idx, val, names_[v]));
  };

  for (int v = 0; v < num_vars(); ++v) {
    if (expr_index_[v] < 0) continue;
    const auto& branches = branches_[expr_index_[v]];
    switch (kind_[v]) {
    case Kind::defined:
      add_branch_row(v, branches[0], Relation::eq);
      break;
    case Kind::min_node:
      for (const auto& b : branches)
        if (!b.is_constant()) add_branch_row(v, b, Relation::le);
      break;
    case Kind::max_node:
      for (const auto& b : branches)
        if (!b.is_constant()) add_branch_row(v, b, Relation::ge);
      break;
    case Kind::decision:
      break;
    }
  }

  out.first_plain_row = lp.num_rows();
  for (const auto& r : plain_rows_) {
    idx.assign(r.expr.vars.begin(), r.expr.vars.end());
    val.assign(r.expr.coefs.begin(), r.expr.coefs.end());
    lp.add_row(r.rel, r.rhs - r.expr.constant, idx, val, r.name);
  }
  return out;
}

Basis PiecewiseModel::crash_basis(const Reformulation& ref, std::span<const double> decisions,
                                  std::vector<double>* point) const {
  const int n = num_vars();
  const int m = ref.lp.num_rows();
  Basis basis;
  basis.status.assign(n + m, VarStatus::at_lower);
  basis.value.assign(n + m, 0.0);

  auto logical_at_zero = [&](int row) {
    return ref.lp.row_relation(row) == Relation::ge ? VarStatus::at_upper : VarStatus::at_lower;
  };
  for (int r = 0; r < m; ++r) basis.status[n + r] = VarStatus::basic;

  std::vector<double> val(n, 0.0);
  auto eval_expr = [&](const LinExpr& e) {
    double s = e.constant;
    for (std::size_t k = 0; k < e.vars.size(); ++k) s += e.coefs[k] * val[e.vars[k]];
    return s;
  };

  for (int v = 0; v < n; ++v) {
    switch (kind_[v]) {
    case Kind::decision: {
      const bool given = v < static_cast<int>(decisions.size());
      if (given) {
        const double want = std::clamp(decisions[v], lb_[v], ub_[v]);
        val[v] = want;
        if (want <= lb_[v]) basis.status[v] = VarStatus::at_lower;
        else if (want >= ub_[v]) basis.status[v] = VarStatus::at_upper;
        else {
          basis.status[v] = VarStatus::at_value;
          basis.value[v] = want;
        }
      } else if (std::isfinite(lb_[v])) {
        val[v] = lb_[v];
        basis.status[v] = VarStatus::at_lower;
      } else if (std::isfinite(ub_[v])) {
        val[v] = ub_[v];
        basis.status[v] = VarStatus::at_upper;
      } else {
        val[v] = 0.0;
        basis.status[v] = VarStatus::free_at_zero;
      }
      break;
    }
    case Kind::defined: {
      val[v] = eval_expr(branches_[expr_index_[v]][0]);
      basis.status[v] = VarStatus::basic;
      basis.status[n + ref.rows_of[v][0]] = logical_at_zero(ref.rows_of[v][0]);
      break;
    }
    case Kind::min_node:
    case Kind::max_node: {
      const bool is_min = kind_[v] == Kind::min_node;
      const auto& branches = branches_[expr_index_[v]];
      double envelope = 0.0;
      int winner = -1; // index among non-constant branches; -1 = constant branch
      bool first = true;
      int nc = 0;
      for (const auto& b : branches) {
        const double bv = eval_expr(b);
        const bool better = first || (is_min ? bv < envelope : bv > envelope);
        if (better) {
          envelope = bv;
          winner = b.is_constant() ? -1 : nc;
          first = false;
        }
        if (!b.is_constant()) ++nc;
      }
      val[v] = envelope;
      if (winner < 0) {
        basis.status[v] = is_min ? VarStatus::at_upper : VarStatus::at_lower;
      } else {
        basis.status[v] = VarStatus::basic;
        const int row = ref.rows_of[v][winner];
        basis.status[n + row] = logical_at_zero(row);
      }
      break;
    }
    }
  }
  if (point) *point = val;
  return basis;
}

namespace {
double eval(const LinExpr& e, std::span<const double> x) {
  double s = e.constant;
  for (std::size_t k = 0; k < e.vars.size(); ++k) s += e.coefs[k] * x[e.vars[k]];
  return s;
}
} // namespace

double PiecewiseModel::max_tightness_gap(std::span<const double> x) const {
  double worst = 0.0;
  for (int v = 0; v < num_vars(); ++v) {
    if (kind_[v] != Kind::min_node && kind_[v] != Kind::max_node) continue;
    const auto& branches = branches_[expr_index_[v]];
    double envelope = eval(branches[0], x);
    for (std::size_t b = 1; b < branches.size(); ++b) {
      const double bv = eval(branches[b], x);
      envelope = (kind_[v] == Kind::min_node) ? std::min(envelope, bv) : std::max(envelope, bv);
    }
    const double gap = std::abs(x[v] - envelope) / std::max(1.0, std::abs(envelope));
    worst = std::max(worst, gap);
  }
  return worst;
}

double PiecewiseModel::max_definition_residual(std::span<const double> x) const {
  double worst = 0.0;
  for (int v = 0; v < num_vars(); ++v) {
    if (kind_[v] != Kind::defined) continue;
    const double rhs = eval(branches_[expr_index_[v]][0], x);
    worst = std::max(worst, std::abs(x[v] - rhs) / std::max(1.0, std::abs(rhs)));
  }
  return worst;
}

} // namespace perim::lp
