#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perim/lp/problem.hpp"
#include "perim/lp/simplex.hpp"

namespace perim::lp {

/// Sparse affine expression over model variables.
struct LinExpr {
  std::vector<int> vars;
  std::vector<double> coefs;
  double constant = 0.0;

  LinExpr() = default;
  explicit LinExpr(double c) : constant(c) {}

  LinExpr& add(int var, double coef) {
    if (coef != 0.0) {
      vars.push_back(var);
      coefs.push_back(coef);
    }
    return *this;
  }
  LinExpr& add(const LinExpr& other, double scale = 1.0);
  bool is_constant() const { return vars.empty(); }
};

/// Rejected model: a min/max node sits on the wrong side of the objective
/// pressure, so the epigraph relaxation would not be tight.
class polarity_error : public std::logic_error {
public:
  explicit polarity_error(const std::string& node)
      : std::logic_error("piecewise node with wrong polarity: " + node), node_name(node) {}
  std::string node_name;
};

/// Convex piecewise-linear program builder.
///
/// Variables come in four kinds: decisions (bounded), defined (equality to an
/// affine expression), min nodes, and max nodes. Expressions may reference
/// only variables created earlier, which makes the model a DAG and lets the
/// polarity check run as one reverse sweep.
///
/// Min nodes are relaxed as t <= branch_k and are valid only where the
/// objective improves as t grows; max nodes mirror that. `reformulate`
/// verifies this structurally and throws polarity_error otherwise.
class PiecewiseModel {
public:
  int add_decision(std::string name, double lb, double ub);
  int add_defined(std::string name, LinExpr expr);
  int add_min(std::string name, std::vector<LinExpr> branches);
  int add_max(std::string name, std::vector<LinExpr> branches);
  void add_constraint(LinExpr expr, Relation rel, double rhs, std::string name = {});
  /// Adds `scale * expr` to the (minimized) objective.
  void add_objective(const LinExpr& expr, double scale = 1.0);

  int num_vars() const { return static_cast<int>(kind_.size()); }
  int num_plain_rows() const { return static_cast<int>(plain_rows_.size()); }
  int num_min_max_nodes() const { return n_nodes_; }
  const std::string& var_name(int v) const { return names_[v]; }

  struct Reformulation {
    LinearProgram lp;
    /// Per model variable: LP row indices of its equality / non-constant
    /// branch rows, in branch order. Empty for decisions.
    std::vector<std::vector<int>> rows_of;
    /// Plain constraints occupy LP rows [first_plain_row, num_rows).
    int first_plain_row = 0;
  };

  /// Polarity check + epigraph relaxation. Model variable v maps to LP
  /// column v (identity mapping).
  LinearProgram reformulate() const { return reformulate_mapped().lp; }
  Reformulation reformulate_mapped() const;

  /// Forward-evaluates the DAG and derives a primal-feasible basis for the
  /// relaxation: defined variables and envelope nodes on their active branch
  /// become basic, every other row keeps its logical. Decisions sit at their
  /// lower bounds unless `decisions` supplies a value (indexed by model
  /// variable; non-decisions ignored), in which case they start nonbasic at
  /// that point. Plain constraints are not checked; if the decision point
  /// violates one, phase 1 cleans up the remainder.
  Basis crash_basis(const Reformulation& ref, std::span<const double> decisions = {},
                    std::vector<double>* point = nullptr) const;

  /// Largest relative gap between a node's value and the min/max of its
  /// branches at `x` (indexed like model variables): tightness diagnostic.
  double max_tightness_gap(std::span<const double> x) const;

  /// Re-evaluates defined-variable equalities at `x`; returns the largest
  /// relative residual. Used to validate extracted trajectories.
  double max_definition_residual(std::span<const double> x) const;

private:
  enum class Kind : std::uint8_t { decision, defined, min_node, max_node };

  void check_polarity() const;
  void check_expr(const LinExpr& e) const;

  std::vector<Kind> kind_;
  std::vector<std::string> names_;
  std::vector<double> lb_, ub_;                 // decisions only (others unbounded)
  std::vector<int> expr_index_;                 // per var: index into exprs_ tables, -1 for decisions
  std::vector<std::vector<LinExpr>> branches_;  // defined vars hold a single "branch"
  std::vector<std::pair<int, double>> objective_terms_;
  double objective_constant_ = 0.0;
  struct PlainRow {
    LinExpr expr;
    Relation rel;
    double rhs;
    std::string name;
  };
  std::vector<PlainRow> plain_rows_;
  int n_nodes_ = 0;
};

} // namespace perim::lp
