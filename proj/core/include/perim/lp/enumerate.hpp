#pragma once

#include "perim/lp/problem.hpp"

namespace perim::lp {

/// Exact optimum by enumerating every basic feasible point (intersections of
/// n active constraints drawn from the rows and finite bounds). Intended as
/// an independent test oracle; refuses instances beyond 8 variables or 12
/// rows. Unbounded instances are reported when an extreme ray improves the
/// objective from some feasible vertex.
Solution vertex_enumeration_oracle(const LinearProgram& lp);

} // namespace perim::lp
