#include "doctest.h"

#include <cmath>
#include <sstream>

#include "perim/lp/enumerate.hpp"
#include "perim/lp/piecewise.hpp"
#include "perim/lp/simplex.hpp"
#include "support/random_lp.hpp"

using namespace perim;
using namespace perim::lp;

TEST_CASE("box LP lands on the corner") {
  LinearProgram prob;
  const int x = prob.add_column(0.0, kInf, -2.0, "x");
  const int y = prob.add_column(0.0, kInf, -1.0, "y");
  {
    int idx[] = {x};
    double val[] = {1.0};
    prob.add_row(Relation::le, 1.0, idx, val);
  }
  {
    int idx[] = {y};
    double val[] = {1.0};
    prob.add_row(Relation::le, 1.0, idx, val);
  }
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(-3.0));
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(1.0));

  const Solution oracle = vertex_enumeration_oracle(prob);
  REQUIRE(oracle.status == SolveStatus::optimal);
  CHECK(oracle.objective == doctest::Approx(-3.0));
}

TEST_CASE("empty feasible set is reported infeasible") {
  LinearProgram prob;
  const int x = prob.add_column(0.0, kInf, 1.0, "x");
  int idx[] = {x};
  double val[] = {1.0};
  prob.add_row(Relation::le, -1.0, idx, val);
  CHECK(solve_lp(prob).status == SolveStatus::infeasible);
  CHECK(vertex_enumeration_oracle(prob).status == SolveStatus::infeasible);
}

TEST_CASE("degenerate argmin still pins the objective") {
  LinearProgram prob;
  const int x = prob.add_column(0.0, kInf, -1.0, "x");
  const int y = prob.add_column(0.0, kInf, -1.0, "y");
  int idx[] = {x, y};
  double val[] = {1.0, 1.0};
  prob.add_row(Relation::le, 1.0, idx, val);
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(vertex_enumeration_oracle(prob).objective == doctest::Approx(-1.0));
}

TEST_CASE("unbounded ray is detected") {
  LinearProgram prob;
  prob.add_column(0.0, kInf, -1.0, "x");
  CHECK(solve_lp(prob).status == SolveStatus::unbounded);
  CHECK(vertex_enumeration_oracle(prob).status == SolveStatus::unbounded);
}

TEST_CASE("equality rows and free variables") {
  // minimize x + y  s.t.  x - y = 2, x + y >= 4  (y free)
  LinearProgram prob;
  const int x = prob.add_column(0.0, kInf, 1.0, "x");
  const int y = prob.add_column(-kInf, kInf, 1.0, "y");
  {
    int idx[] = {x, y};
    double val[] = {1.0, -1.0};
    prob.add_row(Relation::eq, 2.0, idx, val);
  }
  {
    int idx[] = {x, y};
    double val[] = {1.0, 1.0};
    prob.add_row(Relation::ge, 4.0, idx, val);
  }
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(4.0));
  CHECK(sol.x[0] == doctest::Approx(3.0));
  CHECK(sol.x[1] == doctest::Approx(1.0));
}

TEST_CASE("simplex agrees with vertex enumeration on random instances") {
  Rng rng(20240917);
  int optimal_seen = 0;
  for (int t = 0; t < 200; ++t) {
    const LinearProgram prob = test::random_small_lp(rng);
    const Solution fast = solve_lp(prob);
    const Solution slow = vertex_enumeration_oracle(prob);
    INFO("instance ", t, " fast=", to_string(fast.status), " slow=", to_string(slow.status));
    REQUIRE(fast.status == slow.status);
    if (fast.status == SolveStatus::optimal) {
      ++optimal_seen;
      CHECK(std::abs(fast.objective - slow.objective) <=
            1e-6 * std::max(1.0, std::abs(slow.objective)));
      CHECK(prob.max_violation(fast.x) <= 1e-8);
    }
  }
  CHECK(optimal_seen > 50); // the generator must exercise the optimal path
}

TEST_CASE("piecewise min relaxation is tight under upward pressure") {
  PiecewiseModel model;
  const int x = model.add_decision("x", 0.0, 10.0);
  const int t = model.add_min("t", {LinExpr(3.0), LinExpr().add(x, 1.0)});
  model.add_objective(LinExpr().add(t, 1.0), -1.0); // maximize t
  const LinearProgram prob = model.reformulate();
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.objective == doctest::Approx(-3.0));
  CHECK(sol.x[t] == doctest::Approx(3.0));
  CHECK(model.max_tightness_gap(sol.x) <= 1e-9);
}

TEST_CASE("piecewise max clamp of a negative constant") {
  PiecewiseModel model;
  const int t = model.add_max("t", {LinExpr(0.0), LinExpr(-5.0)});
  model.add_objective(LinExpr().add(t, 1.0));
  const LinearProgram prob = model.reformulate();
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.x[t] == doctest::Approx(0.0));
}

TEST_CASE("wrong-polarity nodes are rejected with the offending name") {
  PiecewiseModel model;
  const int x = model.add_decision("x", 0.0, 1.0);
  const int t = model.add_min("bad_node", {LinExpr(3.0), LinExpr().add(x, 1.0)});
  model.add_objective(LinExpr().add(t, 1.0)); // pressure pushes a min node down
  CHECK_THROWS_AS(model.reformulate(), polarity_error);
  try {
    model.reformulate();
  } catch (const polarity_error& e) {
    CHECK(e.node_name == "bad_node");
  }
}

TEST_CASE("nodes may not appear in plain constraints") {
  PiecewiseModel model;
  const int x = model.add_decision("x", 0.0, 1.0);
  const int t = model.add_min("node", {LinExpr(3.0), LinExpr().add(x, 1.0)});
  model.add_objective(LinExpr().add(t, 1.0), -1.0);
  model.add_constraint(LinExpr().add(t, 1.0), Relation::ge, 1.0, "pin");
  CHECK_THROWS_AS(model.reformulate(), polarity_error);
}

TEST_CASE("defined variables chain through equalities") {
  PiecewiseModel model;
  const int g = model.add_decision("g", 0.1, 0.9);
  LinExpr def;
  def.add(g, -15.0);
  def.constant = 20.0;
  const int x1 = model.add_max("x1", {LinExpr(0.0), def});
  LinExpr def2;
  def2.add(x1, 1.0).add(g, -15.0);
  def2.constant = 5.0;
  const int x2 = model.add_max("x2", {LinExpr(0.0), def2});
  model.add_objective(LinExpr().add(x1, 1.0).add(x2, 1.0));
  const LinearProgram prob = model.reformulate();
  const Solution sol = solve_lp(prob);
  REQUIRE(sol.status == SolveStatus::optimal);
  // g at 0.9: x1 = max(0, 20-13.5) = 6.5, x2 = max(0, 6.5+5-13.5) = 0
  CHECK(sol.x[x1] == doctest::Approx(6.5));
  CHECK(sol.x[x2] == doctest::Approx(0.0));
  CHECK(model.max_tightness_gap(sol.x) <= 1e-9);
  CHECK(model.max_definition_residual(sol.x) <= 1e-9);
}

TEST_CASE("warm start reuses a basis across right-hand sides") {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    LinearProgram prob = test::random_small_lp(rng);
    Basis basis;
    const Solution cold = solve_lp(prob, basis);
    const Solution warm = solve_lp(prob, basis);
    REQUIRE(cold.status == warm.status);
    if (cold.status == SolveStatus::optimal) {
      CHECK(std::abs(cold.objective - warm.objective) <= 1e-9 * std::max(1.0, std::abs(cold.objective)));
      CHECK(warm.iterations <= cold.iterations);
    }
  }
}

TEST_CASE("text dump lists one constraint per line") {
  LinearProgram prob;
  const int x = prob.add_column(0.0, 2.0, 1.0, "x");
  int idx[] = {x};
  double val[] = {1.0};
  prob.add_row(Relation::le, 1.5, idx, val, "cap");
  std::ostringstream os;
  prob.write_text(os);
  const std::string text = os.str();
  CHECK(text.find("cap: 1*x <= 1.5") != std::string::npos);
  CHECK(text.find("minimize 1*x") != std::string::npos);
}

TEST_CASE("coupling-column solves match plain solves") {
  Rng rng(4242);
  for (int t = 0; t < 120; ++t) {
    const LinearProgram prob = test::random_small_lp(rng);
    const Solution plain = solve_lp(prob);
    SimplexOptions opt;
    for (int j = 0; j < prob.num_cols(); j += 2) opt.coupling_columns.push_back(j);
    const Solution coupled = solve_lp(prob, opt);
    REQUIRE(plain.status == coupled.status);
    if (plain.status == SolveStatus::optimal) {
      CHECK(std::abs(plain.objective - coupled.objective) <=
            1e-7 * std::max(1.0, std::abs(plain.objective)));
      CHECK(prob.max_violation(coupled.x) <= 1e-8);
    }
  }
}
