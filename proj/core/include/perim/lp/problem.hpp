#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace perim::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation : std::uint8_t { le, eq, ge };

/// Minimization LP over bounded variables with sparse affine rows.
/// Rows are stored packed (CSR); columns are materialized on demand by the
/// solver. Row/column counts are fixed by construction order.
class LinearProgram {
public:
  int add_column(double lb, double ub, double cost, std::string name = {});
  int add_row(Relation rel, double rhs, std::span<const int> cols, std::span<const double> vals,
              std::string name = {});

  int num_cols() const { return static_cast<int>(col_lower_.size()); }
  int num_rows() const { return static_cast<int>(row_rhs_.size()); }
  std::int64_t num_nonzeros() const { return static_cast<std::int64_t>(row_cols_.size()); }

  double col_lower(int j) const { return col_lower_[j]; }
  double col_upper(int j) const { return col_upper_[j]; }
  double cost(int j) const { return cost_[j]; }
  Relation row_relation(int i) const { return row_rel_[i]; }
  double row_rhs(int i) const { return row_rhs_[i]; }
  std::span<const int> row_columns(int i) const;
  std::span<const double> row_values(int i) const;

  void set_objective_constant(double c) { objective_constant_ = c; }
  double objective_constant() const { return objective_constant_; }

  const std::string& col_name(int j) const { return col_names_[j]; }
  const std::string& row_name(int i) const { return row_names_[i]; }

  /// Objective value c'x + constant.
  double objective_value(std::span<const double> x) const;

  /// Largest relative violation over rows and bounds:
  /// |residual| / max(1, |rhs|). Used by tests and post-solve checks.
  double max_violation(std::span<const double> x) const;

  /// Human-readable dump, one constraint per line.
  void write_text(std::ostream& os) const;

  void reserve(int cols, int rows, std::int64_t nonzeros);

private:
  std::vector<double> col_lower_, col_upper_, cost_;
  std::vector<std::string> col_names_, row_names_;
  std::vector<Relation> row_rel_;
  std::vector<double> row_rhs_;
  std::vector<std::int64_t> row_start_{0};
  std::vector<int> row_cols_;
  std::vector<double> row_vals_;
  double objective_constant_ = 0.0;
};

enum class SolveStatus : std::uint8_t { optimal, infeasible, unbounded, failed };

const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::failed;
  std::vector<double> x;      ///< structural variable values (when optimal)
  double objective = 0.0;     ///< includes the objective constant
  long iterations = 0;
  std::string note;           ///< diagnostic detail (e.g. violated rows)
};

} // namespace perim::lp
