#include "perim/lp/problem.hpp"

#include <cmath>
#include <ostream>

#include "perim/errors.hpp"

namespace perim::lp {

const char* to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::optimal: return "optimal";
  case SolveStatus::infeasible: return "infeasible";
  case SolveStatus::unbounded: return "unbounded";
  case SolveStatus::failed: return "failed";
  }
  return "?";
}

int LinearProgram::add_column(double lb, double ub, double cost, std::string name) {
  if (lb > ub) throw config_error("LP column with lb > ub");
  col_lower_.push_back(lb);
  col_upper_.push_back(ub);
  cost_.push_back(cost);
  col_names_.push_back(std::move(name));
  return num_cols() - 1;
}

int LinearProgram::add_row(Relation rel, double rhs, std::span<const int> cols,
                           std::span<const double> vals, std::string name) {
  if (cols.size() != vals.size()) throw config_error("LP row with mismatched index/value sizes");
  for (int j : cols)
    if (j < 0 || j >= num_cols()) throw config_error("LP row references undeclared column");
  row_rel_.push_back(rel);
  row_rhs_.push_back(rhs);
  row_names_.push_back(std::move(name));
  row_cols_.insert(row_cols_.end(), cols.begin(), cols.end());
  row_vals_.insert(row_vals_.end(), vals.begin(), vals.end());
  row_start_.push_back(static_cast<std::int64_t>(row_cols_.size()));
  return num_rows() - 1;
}

std::span<const int> LinearProgram::row_columns(int i) const {
  return {row_cols_.data() + row_start_[i],
          static_cast<std::size_t>(row_start_[i + 1] - row_start_[i])};
}

std::span<const double> LinearProgram::row_values(int i) const {
  return {row_vals_.data() + row_start_[i],
          static_cast<std::size_t>(row_start_[i + 1] - row_start_[i])};
}

double LinearProgram::objective_value(std::span<const double> x) const {
  double obj = objective_constant_;
  for (int j = 0; j < num_cols(); ++j) obj += cost_[j] * x[j];
  return obj;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_cols(); ++j) {
    const double below = col_lower_[j] - x[j];
    const double above = x[j] - col_upper_[j];
    const double scale = std::max(1.0, std::max(std::abs(col_lower_[j]), std::abs(col_upper_[j])));
    worst = std::max(worst, std::max(below, above) / scale);
  }
  for (int i = 0; i < num_rows(); ++i) {
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    double lhs = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) lhs += vals[k] * x[cols[k]];
    const double r = lhs - row_rhs_[i];
    double v = 0.0;
    switch (row_rel_[i]) {
    case Relation::le: v = r; break;
    case Relation::ge: v = -r; break;
    case Relation::eq: v = std::abs(r); break;
    }
    worst = std::max(worst, v / std::max(1.0, std::abs(row_rhs_[i])));
  }
  return worst;
}

void LinearProgram::write_text(std::ostream& os) const {
  auto cname = [&](int j) {
    return col_names_[j].empty() ? "x" + std::to_string(j) : col_names_[j];
  };
  os << "minimize";
  bool first = true;
  for (int j = 0; j < num_cols(); ++j) {
    if (cost_[j] == 0.0) continue;
    os << (first ? " " : " + ") << cost_[j] << "*" << cname(j);
    first = false;
  }
  if (objective_constant_ != 0.0) os << (first ? " " : " + ") << objective_constant_;
  os << "\n";
  for (int i = 0; i < num_rows(); ++i) {
    os << (row_names_[i].empty() ? "r" + std::to_string(i) : row_names_[i]) << ": ";
    const auto cols = row_columns(i);
    const auto vals = row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (k) os << " + ";
      os << vals[k] << "*" << cname(cols[k]);
    }
    switch (row_rel_[i]) {
    case Relation::le: os << " <= "; break;
    case Relation::eq: os << " = "; break;
    case Relation::ge: os << " >= "; break;
    }
    os << row_rhs_[i] << "\n";
  }
  for (int j = 0; j < num_cols(); ++j)
    os << cname(j) << " in [" << col_lower_[j] << ", " << col_upper_[j] << "]\n";
}

void LinearProgram::reserve(int cols, int rows, std::int64_t nonzeros) {
  col_lower_.reserve(cols);
  col_upper_.reserve(cols);
  cost_.reserve(cols);
  col_names_.reserve(cols);
  row_rel_.reserve(rows);
  row_rhs_.reserve(rows);
  row_names_.reserve(rows);
  row_start_.reserve(rows + 1);
  row_cols_.reserve(nonzeros);
  row_vals_.reserve(nonzeros);
}

} // namespace perim::lp
