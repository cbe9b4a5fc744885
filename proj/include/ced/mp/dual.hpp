#pragma once

#include <string>
#include <vector>

#include "ced/mp/problem.hpp"

namespace ced::mp {

// Columns of the LP dual appended to a target problem. With the primal read
// as min c'x + offset, rows as written and l <= x <= u, the dual is
//   max  b'y + sum_fixed l pi + sum l sigma - sum u tau + offset
//   s.t. A'y + pi + sigma - tau = c
// with y >= 0 on >= rows, y <= 0 on <= rows, y free on = rows, pi free,
// sigma, tau >= 0. Its objective terms are added to the target's costs, so
// the target should be a maximisation.
struct DualIndex {
  std::vector<int> row_dual;    // y per primal row
  std::vector<int> fixed_dual;  // pi per primal column with l == u, else -1
  std::vector<int> lower_dual;  // sigma per column with finite l < u, else -1
  std::vector<int> upper_dual;  // tau per column with finite u > l, else -1
  std::vector<int> stationarity_rows;
};

DualIndex append_dual(const ProblemDef& primal, const std::string& tag, ProblemDef& target);

}  // namespace ced::mp
