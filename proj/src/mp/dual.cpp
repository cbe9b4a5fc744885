#include "ced/mp/dual.hpp"

#include <cmath>

namespace ced::mp {

DualIndex append_dual(const ProblemDef& primal, const std::string& tag, ProblemDef& target) {
  const double sign = primal.sense() == ObjectiveSense::kMaximize ? -1.0 : 1.0;
  const int n = primal.num_vars();
  const int m = primal.num_rows();
  DualIndex idx;
  idx.row_dual.resize(static_cast<std::size_t>(m));
  idx.fixed_dual.assign(static_cast<std::size_t>(n), -1);
  idx.lower_dual.assign(static_cast<std::size_t>(n), -1);
  idx.upper_dual.assign(static_cast<std::size_t>(n), -1);

  std::vector<std::vector<Term>> columns(static_cast<std::size_t>(n));
  for (int i = 0; i < m; ++i) {
    const Row& r = primal.row(i);
    double lo = -kInfinity, hi = kInfinity;
    if (r.sense == RowSense::kGreaterEqual) lo = 0.0;
    if (r.sense == RowSense::kLessEqual) hi = 0.0;
    const int y = target.add_var(tag + "y_" + r.id, lo, hi, VarKind::kContinuous, r.rhs);
    idx.row_dual[static_cast<std::size_t>(i)] = y;
    for (const Term& t : r.terms) columns[static_cast<std::size_t>(t.var)].push_back({y, t.coef});
  }
  for (int j = 0; j < n; ++j) {
    const Variable& v = primal.var(j);
    auto& col = columns[static_cast<std::size_t>(j)];
    if (v.lower == v.upper) {
      const int pi = target.add_var(tag + "pi_" + v.id, -kInfinity, kInfinity, VarKind::kContinuous, v.lower);
      idx.fixed_dual[static_cast<std::size_t>(j)] = pi;
      col.push_back({pi, 1.0});
    } else {
      if (std::isfinite(v.lower)) {
        const int s = target.add_var(tag + "lo_" + v.id, 0.0, kInfinity, VarKind::kContinuous, v.lower);
        idx.lower_dual[static_cast<std::size_t>(j)] = s;
        col.push_back({s, 1.0});
      }
      if (std::isfinite(v.upper)) {
        const int s = target.add_var(tag + "up_" + v.id, 0.0, kInfinity, VarKind::kContinuous, -v.upper);
        idx.upper_dual[static_cast<std::size_t>(j)] = s;
        col.push_back({s, -1.0});
      }
    }
    idx.stationarity_rows.push_back(target.add_row(tag + "st_" + v.id, col, RowSense::kEqual, sign * v.cost));
  }
  target.add_offset(sign * primal.offset());
  return idx;
}

}  // namespace ced::mp
