#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ced/mp/problem.hpp"

namespace ced::mp {

// Solver tolerances. Fixed; exposed read-only so callers and tests agree.
struct Tolerances {
  static constexpr double kPrimalFeasibility = 1e-7;
  static constexpr double kDualFeasibility = 1e-7;
  static constexpr double kComplementarity = 1e-6;
  static constexpr double kDualityGap = 1e-6;  // relative to 1 + |obj|
  static constexpr double kIntegrality = 1e-7;
  static constexpr double kMilpAbsoluteGap = 1e-6;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus s);

// Simplex basis snapshot; one entry per structural then per row logical.
struct Basis {
  enum : std::uint8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFreeZero = 3 };
  std::vector<std::uint8_t> status;
  bool empty() const { return status.empty(); }
};

// Dual sign convention. The problem is read in minimisation form
// (f = -objective for maximisation problems) and every row as written:
//   L(x, mu) = f(x) + sum_{<=, =} mu_i (a_i x - b_i) + sum_{>=} mu_i (b_i - a_i x)
// so duals of <= and >= rows are non-negative, equality duals are free, and
// mu_i = -df*/db_i for <= and = rows, +df*/db_i for >= rows.
// Reduced costs are dL/dx_j of the same Lagrangian.
struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective = 0.0;  // in the problem's own sense, offset included
  std::vector<double> x;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  long iterations = 0;
  Basis basis;
};

struct LpOptions {
  // Column bound overrides (size num_vars) used by branch-and-bound.
  std::span<const double> lower;
  std::span<const double> upper;
  const Basis* warm_start = nullptr;
};

// Bounded-variable primal simplex (composite phase 1, Dantzig pricing with a
// Bland fallback under degeneracy, Harris ratio test). Binary kinds are
// ignored; use solve_milp for integrality. Throws NumericalError when the
// iteration cap 50 * (rows + cols) is exceeded.
LpSolution solve_lp(const ProblemDef& p, const LpOptions& options = {});

struct Fix {
  int var = -1;
  double value = 0.0;
};

struct FixedLpSolution {
  LpSolution lp;
  // Multiplier of each equality x_var = value, in `fixes` order and in the
  // convention above: -df*/dvalue.
  std::vector<double> fixing_duals;
};

// Solves `p` with each fixed variable's bounds collapsed to its value.
// Throws ModelError if a value lies outside the variable's declared bounds.
FixedLpSolution fix_and_resolve(const ProblemDef& p, std::span<const Fix> fixes);

// Independent optimality certificate check (does not share code with the
// solver): primal feasibility, dual sign feasibility, stationarity,
// complementary slackness and strong duality at the stated tolerances.
struct CertificateReport {
  bool ok = false;
  double primal_violation = 0.0;
  double dual_violation = 0.0;
  double complementarity_violation = 0.0;
  double duality_gap = 0.0;
  std::string detail;
};

CertificateReport verify_certificate(const ProblemDef& p, const LpSolution& s);
// Same, with column bounds overridden (e.g. a branch-and-bound node).
CertificateReport verify_certificate(const ProblemDef& p, const LpSolution& s,
                                     std::span<const double> lower,
                                     std::span<const double> upper);

// Process-wide audit. While enabled, every optimal LP returned by solve_lp,
// fix_and_resolve or a solve_milp node is passed through verify_certificate.
struct CertificateAudit {
  long checked = 0;
  long failed = 0;
  std::string first_failure;
};

void set_certificate_audit(bool enabled);
void reset_certificate_audit();
CertificateAudit certificate_audit();

}  // namespace ced::mp
