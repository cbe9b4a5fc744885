#include "ced/mp/lp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include <fmt/format.h>

#include "simplex.hpp"

namespace ced::mp {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

namespace {

std::atomic<bool> g_audit{false};
std::mutex g_audit_mutex;
CertificateAudit g_audit_stats;

}  // namespace

void set_certificate_audit(bool enabled) { g_audit = enabled; }

void reset_certificate_audit() {
  std::lock_guard lock(g_audit_mutex);
  g_audit_stats = {};
}

CertificateAudit certificate_audit() {
  std::lock_guard lock(g_audit_mutex);
  return g_audit_stats;
}

namespace detail {

void audit_if_enabled(const ProblemDef& p, const LpSolution& s, std::span<const double> lower,
                      std::span<const double> upper) {
  if (!g_audit || s.status != LpStatus::kOptimal) return;
  const CertificateReport r = verify_certificate(p, s, lower, upper);
  std::lock_guard lock(g_audit_mutex);
  ++g_audit_stats.checked;
  if (!r.ok) {
    if (g_audit_stats.failed == 0) g_audit_stats.first_failure = r.detail;
    ++g_audit_stats.failed;
  }
}

}  // namespace detail

LpSolution solve_lp(const ProblemDef& p, const LpOptions& options) {
  detail::SimplexEngine engine(p);
  LpSolution s = engine.solve(options.lower, options.upper, options.warm_start);
  detail::audit_if_enabled(p, s, options.lower, options.upper);
  return s;
}

FixedLpSolution fix_and_resolve(const ProblemDef& p, std::span<const Fix> fixes) {
  std::vector<double> lower(static_cast<std::size_t>(p.num_vars()));
  std::vector<double> upper(lower.size());
  for (int j = 0; j < p.num_vars(); ++j) {
    lower[j] = p.var(j).lower;
    upper[j] = p.var(j).upper;
  }
  for (const Fix& f : fixes) {
    if (f.var < 0 || f.var >= p.num_vars()) {
      throw ModelError(fmt::format("fix references undeclared variable {}", f.var));
    }
    const Variable& v = p.var(f.var);
    if (f.value < v.lower - 1e-12 || f.value > v.upper + 1e-12) {
      throw ModelError(fmt::format("fix {}={} lies outside bounds [{}, {}]", v.id, f.value,
                                   v.lower, v.upper));
    }
    lower[f.var] = f.value;
    upper[f.var] = f.value;
  }
  FixedLpSolution out;
  out.lp = solve_lp(p, LpOptions{lower, upper, nullptr});
  if (out.lp.status == LpStatus::kOptimal) {
    out.fixing_duals.reserve(fixes.size());
    // A variable fixed by its bounds carries the row multiplier in its
    // reduced cost: df/dvalue = r_j, and the equality convention is -df/db.
    for (const Fix& f : fixes) out.fixing_duals.push_back(-out.lp.reduced_costs[f.var]);
  }
  return out;
}

CertificateReport verify_certificate(const ProblemDef& p, const LpSolution& s) {
  return verify_certificate(p, s, {}, {});
}

CertificateReport verify_certificate(const ProblemDef& p, const LpSolution& s,
                                     std::span<const double> lower_override,
                                     std::span<const double> upper_override) {
  CertificateReport rep;
  const auto n = static_cast<std::size_t>(p.num_vars());
  const auto m = static_cast<std::size_t>(p.num_rows());
  if (s.status != LpStatus::kOptimal || s.x.size() != n || s.duals.size() != m) {
    rep.detail = "solution is not an optimal primal/dual pair of matching shape";
    return rep;
  }
  const double sign = p.sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;
  auto lo = [&](std::size_t j) { return lower_override.empty() ? p.var(int(j)).lower : lower_override[j]; };
  auto hi = [&](std::size_t j) { return upper_override.empty() ? p.var(int(j)).upper : upper_override[j]; };

  // Primal feasibility.
  for (std::size_t j = 0; j < n; ++j) {
    const double v = std::max(lo(j) - s.x[j], s.x[j] - hi(j));
    rep.primal_violation = std::max(rep.primal_violation, v / (1.0 + std::abs(s.x[j])));
  }
  std::vector<double> slack(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = p.row(int(i));
    double act = 0.0;
    for (const Term& t : r.terms) act += t.coef * s.x[static_cast<std::size_t>(t.var)];
    double viol = 0.0;
    switch (r.sense) {
      case RowSense::kLessEqual: slack[i] = r.rhs - act; viol = -slack[i]; break;
      case RowSense::kGreaterEqual: slack[i] = act - r.rhs; viol = -slack[i]; break;
      case RowSense::kEqual: slack[i] = 0.0; viol = std::abs(act - r.rhs); break;
    }
    rep.primal_violation = std::max(rep.primal_violation, viol / (1.0 + std::abs(r.rhs)));
  }

  // Dual sign feasibility and complementary slackness on rows.
  double cost_scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) cost_scale = std::max(cost_scale, std::abs(p.var(int(j)).cost));
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = p.row(int(i));
    const double mu = s.duals[i];
    if (r.sense != RowSense::kEqual) {
      rep.dual_violation = std::max(rep.dual_violation, -mu / cost_scale);
      rep.complementarity_violation =
          std::max(rep.complementarity_violation, std::abs(mu * slack[i]) / (1.0 + std::abs(r.rhs)));
    }
  }

  // Stationarity, recomputed from scratch: r_j = c_j + sum sign_i mu_i a_ij.
  std::vector<double> red(n);
  for (std::size_t j = 0; j < n; ++j) red[j] = sign * p.var(int(j)).cost;
  double dual_obj = sign * p.offset();
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = p.row(int(i));
    const double mu = s.duals[i];
    const double row_sign = r.sense == RowSense::kGreaterEqual ? -1.0 : 1.0;
    for (const Term& t : r.terms) red[static_cast<std::size_t>(t.var)] += row_sign * mu * t.coef;
    dual_obj -= row_sign * mu * r.rhs;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double rj = red[j];
    const double scale = 1.0 + std::abs(p.var(int(j)).cost);
    const double gap_lo = s.x[j] - lo(j);
    const double gap_hi = hi(j) - s.x[j];
    if (rj > 0.0) {
      if (!std::isfinite(lo(j))) {
        rep.dual_violation = std::max(rep.dual_violation, rj / scale);
      } else {
        dual_obj += rj * lo(j);
        rep.complementarity_violation =
            std::max(rep.complementarity_violation, rj * std::max(gap_lo, 0.0) / (1.0 + std::abs(s.x[j])));
      }
    } else if (rj < 0.0) {
      if (!std::isfinite(hi(j))) {
        rep.dual_violation = std::max(rep.dual_violation, -rj / scale);
      } else {
        dual_obj += rj * hi(j);
        rep.complementarity_violation =
            std::max(rep.complementarity_violation, -rj * std::max(gap_hi, 0.0) / (1.0 + std::abs(s.x[j])));
      }
    }
  }

  double primal_obj = sign * p.offset();
  for (std::size_t j = 0; j < n; ++j) primal_obj += sign * p.var(int(j)).cost * s.x[j];
  rep.duality_gap = std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj));

  rep.ok = rep.primal_violation <= Tolerances::kPrimalFeasibility &&
           rep.dual_violation <= Tolerances::kDualFeasibility &&
           rep.complementarity_violation <= Tolerances::kComplementarity &&
           rep.duality_gap <= Tolerances::kDualityGap;
  rep.detail = fmt::format("primal {:.3g} dual {:.3g} compl {:.3g} gap {:.3g}", rep.primal_violation,
                           rep.dual_violation, rep.complementarity_violation, rep.duality_gap);
  return rep;
}

}  // namespace ced::mp
