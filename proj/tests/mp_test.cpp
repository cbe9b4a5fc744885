#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ced/mp/lp.hpp"
#include "ced/mp/milp.hpp"
#include "oracles/dense_bridge.hpp"

using namespace ced::mp;
using oracle::dense_objective;
using oracle::to_dense;

namespace {

ProblemDef random_lp(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  ProblemDef p;
  std::vector<double> x0(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double lo = std::floor(3.0 * u(rng));
    const double hi = lo + 1.0 + 4.0 * pos(rng);
    p.add_var("x" + std::to_string(j), lo, hi, VarKind::kContinuous, std::round(10.0 * u(rng)));
    x0[j] = lo + (hi - lo) * pos(rng);
  }
  for (int i = 0; i < m; ++i) {
    std::vector<Term> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (pos(rng) < 0.6) {
        const double c = std::round(8.0 * u(rng)) / 2.0;
        terms.push_back({j, c});
        act += c * x0[j];
      }
    }
    const double k = pos(rng);
    if (k < 0.5) {
      p.add_row("r" + std::to_string(i), terms, RowSense::kLessEqual, act + pos(rng));
    } else if (k < 0.85) {
      p.add_row("r" + std::to_string(i), terms, RowSense::kGreaterEqual, act - pos(rng));
    } else {
      p.add_row("r" + std::to_string(i), terms, RowSense::kEqual, act);
    }
  }
  if (pos(rng) < 0.5) p.set_sense(ObjectiveSense::kMaximize);
  return p;
}

}  // namespace

TEST_CASE("single-variable maximisation reports the bound dual") {
  ProblemDef p;
  const int x = p.add_var("x", 0.0, kInfinity, VarKind::kContinuous, 1.0);
  p.add_row("cap", {{x, 1.0}}, RowSense::kLessEqual, 3.0);
  p.set_sense(ObjectiveSense::kMaximize);
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.duals[0] == doctest::Approx(1.0));
  CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("symmetric covering row has unit dual") {
  ProblemDef p;
  const int x = p.add_var("x", 0.0, kInfinity, VarKind::kContinuous, 1.0);
  const int y = p.add_var("y", 0.0, kInfinity, VarKind::kContinuous, 1.0);
  p.add_row("cover", {{x, 1.0}, {y, 1.0}}, RowSense::kGreaterEqual, 2.0);
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(2.0));
  CHECK(s.duals[0] == doctest::Approx(1.0));
  CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("infeasible and unbounded statuses") {
  SUBCASE("infeasible") {
    ProblemDef p;
    const int x = p.add_var("x", 0.0, 1.0);
    p.add_row("big", {{x, 1.0}}, RowSense::kGreaterEqual, 2.0);
    CHECK(solve_lp(p).status == LpStatus::kInfeasible);
  }
  SUBCASE("unbounded") {
    ProblemDef p;
    const int x = p.add_var("x", 0.0, kInfinity, VarKind::kContinuous, -1.0);
    const int y = p.add_var("y", -kInfinity, kInfinity);
    p.add_row("link", {{x, 1.0}, {y, -1.0}}, RowSense::kLessEqual, 1.0);
    CHECK(solve_lp(p).status == LpStatus::kUnbounded);
  }
}

TEST_CASE("free variables and equality rows") {
  ProblemDef p;
  const int x = p.add_var("x", -kInfinity, kInfinity, VarKind::kContinuous, 1.0);
  const int y = p.add_var("y", -kInfinity, kInfinity, VarKind::kContinuous, 2.0);
  p.add_row("sum", {{x, 1.0}, {y, 1.0}}, RowSense::kEqual, 4.0);
  p.add_row("diff", {{x, 1.0}, {y, -1.0}}, RowSense::kLessEqual, 1.0);
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.x[x] == doctest::Approx(2.5));
  CHECK(s.x[y] == doctest::Approx(1.5));
  CHECK(s.objective == doctest::Approx(5.5));
  // Raising the equality rhs by one costs 1.5, so mu = -1.5.
  CHECK(s.duals[0] == doctest::Approx(-1.5));
  CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("random LPs agree with the dense tableau oracle") {
  std::mt19937_64 rng(20240601);
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ProblemDef p = random_lp(rng, 8, 12);
    const LpSolution s = solve_lp(p);
    const oracle::DenseResult r = oracle::solve_dense(to_dense(p));
    INFO("trial " << trial);
    REQUIRE(r.status != oracle::Status::kUnbounded);
    REQUIRE((s.status == LpStatus::kOptimal) == (r.status == oracle::Status::kOptimal));
    if (s.status != LpStatus::kOptimal) continue;
    ++optimal;
    CHECK(s.objective == doctest::Approx(dense_objective(p, r)).epsilon(1e-8).scale(1.0));
    const CertificateReport c = verify_certificate(p, s);
    CHECK_MESSAGE(c.ok, c.detail);
  }
  CHECK(optimal > 250);
}

TEST_CASE("degenerate assignment LP") {
  const int k = 6;
  ProblemDef p;
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cost(1, 9);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      p.add_var("a" + std::to_string(i) + "_" + std::to_string(j), 0.0, kInfinity,
                VarKind::kContinuous, cost(rng));
    }
  }
  for (int i = 0; i < k; ++i) {
    std::vector<Term> row, col;
    for (int j = 0; j < k; ++j) {
      row.push_back({i * k + j, 1.0});
      col.push_back({j * k + i, 1.0});
    }
    p.add_row("row" + std::to_string(i), row, RowSense::kEqual, 1.0);
    p.add_row("col" + std::to_string(i), col, RowSense::kEqual, 1.0);
  }
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::kOptimal);
  const oracle::DenseResult r = oracle::solve_dense(to_dense(p));
  CHECK(s.objective == doctest::Approx(r.objective));
  CHECK(verify_certificate(p, s).ok);
}

TEST_CASE("scaling the objective keeps the optimum") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    ProblemDef p = random_lp(rng, 6, 9);
    const LpSolution a = solve_lp(p);
    if (a.status != LpStatus::kOptimal) continue;
    for (int j = 0; j < p.num_vars(); ++j) p.set_cost(j, 3.5 * p.var(j).cost);
    const LpSolution b = solve_lp(p);
    REQUIRE(b.status == LpStatus::kOptimal);
    CHECK(b.objective == doctest::Approx(3.5 * a.objective).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("warm start from the optimal basis takes no pivots") {
  std::mt19937_64 rng(5);
  const ProblemDef p = random_lp(rng, 8, 12);
  const LpSolution a = solve_lp(p);
  REQUIRE(a.status == LpStatus::kOptimal);
  LpOptions o;
  o.warm_start = &a.basis;
  const LpSolution b = solve_lp(p, o);
  CHECK(b.iterations == 0);
  CHECK(b.objective == doctest::Approx(a.objective));
}

TEST_CASE("fix_and_resolve") {
  ProblemDef p;
  const int x = p.add_var("x", 0.0, kInfinity, VarKind::kContinuous, 1.0);
  p.add_row("cap", {{x, 1.0}}, RowSense::kLessEqual, 5.0);
  p.set_sense(ObjectiveSense::kMaximize);

  const Fix fix[] = {{x, 3.0}};
  const FixedLpSolution s = fix_and_resolve(p, fix);
  REQUIRE(s.lp.status == LpStatus::kOptimal);
  CHECK(s.lp.objective == doctest::Approx(3.0));
  REQUIRE(s.fixing_duals.size() == 1);
  CHECK(s.fixing_duals[0] == doctest::Approx(1.0));

  const Fix bad[] = {{x, -1.0}};
  CHECK_THROWS_AS(fix_and_resolve(p, bad), ModelError);
}

TEST_CASE("fixing duals match finite differences") {
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 20; ++trial) {
    const ProblemDef p = random_lp(rng, 6, 8);
    const LpSolution base = solve_lp(p);
    if (base.status != LpStatus::kOptimal) continue;
    const int j = trial % p.num_vars();
    const double v = base.x[j];
    const Fix f0[] = {{j, v}};
    const FixedLpSolution s = fix_and_resolve(p, f0);
    REQUIRE(s.lp.status == LpStatus::kOptimal);
    const double h = 1e-6;
    if (v + h > p.var(j).upper || v - h < p.var(j).lower) continue;
    const Fix fp[] = {{j, v + h}};
    const Fix fm[] = {{j, v - h}};
    const FixedLpSolution sp = fix_and_resolve(p, fp);
    const FixedLpSolution sm = fix_and_resolve(p, fm);
    if (sp.lp.status != LpStatus::kOptimal || sm.lp.status != LpStatus::kOptimal) continue;
    const double sign = p.sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;
    // Directional derivatives of min-form f bracket -mu at a kink.
    const double right = sign * (sp.lp.objective - s.lp.objective) / h;
    const double left = sign * (s.lp.objective - sm.lp.objective) / h;
    const double grad = -s.fixing_duals[0];
    CHECK(grad >= std::min(left, right) - 1e-4);
    CHECK(grad <= std::max(left, right) + 1e-4);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("knapsack matches enumeration") {
  const double value[] = {10, 13, 7, 8, 4, 11};
  const double weight[] = {5, 7, 4, 5, 2, 6};
  const double cap = 15;
  ProblemDef p;
  std::vector<Term> w;
  for (int i = 0; i < 6; ++i) {
    p.add_var("item" + std::to_string(i), 0, 1, VarKind::kBinary, value[i]);
    w.push_back({i, weight[i]});
  }
  p.add_row("weight", w, RowSense::kLessEqual, cap);
  p.set_sense(ObjectiveSense::kMaximize);
  double best = 0;
  for (int mask = 0; mask < 64; ++mask) {
    double v = 0, wt = 0;
    for (int i = 0; i < 6; ++i) {
      if (mask >> i & 1) {
        v += value[i];
        wt += weight[i];
      }
    }
    if (wt <= cap) best = std::max(best, v);
  }
  const MilpSolution s = solve_milp(p);
  REQUIRE(s.status == MilpStatus::kOptimal);
  CHECK(s.objective == doctest::Approx(best));
  for (int i = 0; i < 6; ++i) CHECK((s.x[i] == 0.0 || s.x[i] == 1.0));
  CHECK_FALSE(s.history.empty());
}

TEST_CASE("binaries fixed by bounds reduce to the LP") {
  std::mt19937_64 rng(3);
  ProblemDef p = random_lp(rng, 5, 6);
  const int b0 = p.add_var("b0", 1, 1, VarKind::kBinary, 2.0);
  const int b1 = p.add_var("b1", 0, 0, VarKind::kBinary, -1.0);
  p.add_row("mix", {{0, 1.0}, {b0, 1.0}, {b1, 1.0}}, RowSense::kLessEqual, 100.0);
  const LpSolution lp = solve_lp(p);
  const MilpSolution m = solve_milp(p);
  REQUIRE(lp.status == LpStatus::kOptimal);
  REQUIRE(m.status == MilpStatus::kOptimal);
  CHECK(m.objective == doctest::Approx(lp.objective));
  CHECK(m.nodes == 1);
}

TEST_CASE("parity-infeasible binary system") {
  ProblemDef p;
  const int a = p.add_var("x1", 0, 1, VarKind::kBinary);
  const int b = p.add_var("x2", 0, 1, VarKind::kBinary);
  p.add_row("half", {{a, 1.0}, {b, 1.0}}, RowSense::kEqual, 1.5);
  CHECK(solve_milp(p).status == MilpStatus::kInfeasible);
}

TEST_CASE("node limit reports incumbent and bound") {
  ProblemDef p;
  std::vector<Term> w;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> d(10, 40);
  for (int i = 0; i < 30; ++i) {
    p.add_var("k" + std::to_string(i), 0, 1, VarKind::kBinary, d(rng));
    w.push_back({i, static_cast<double>(d(rng))});
  }
  p.add_row("w", w, RowSense::kLessEqual, 200.5);
  p.set_sense(ObjectiveSense::kMaximize);
  MilpOptions o;
  o.node_limit = 5;
  const MilpSolution s = solve_milp(p, o);
  CHECK(s.status == MilpStatus::kNodeLimit);
  CHECK(s.nodes == 5);
  if (s.has_incumbent()) CHECK(s.best_bound >= s.objective - 1e-9);
}

TEST_CASE("random MILPs match brute-force enumeration") {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int nb = 1 + trial % 12;
    const int nc = trial % 4;
    const int m = 2 + trial % 6;
    ProblemDef p;
    std::vector<double> x0;
    for (int j = 0; j < nb; ++j) {
      p.add_var("b" + std::to_string(j), 0, 1, VarKind::kBinary, std::round(10 * u(rng)));
      x0.push_back(pos(rng) < 0.5 ? 0.0 : 1.0);
    }
    for (int j = 0; j < nc; ++j) {
      p.add_var("c" + std::to_string(j), 0, 3, VarKind::kContinuous, std::round(10 * u(rng)) / 2);
      x0.push_back(3 * pos(rng));
    }
    for (int i = 0; i < m; ++i) {
      std::vector<Term> t;
      double act = 0;
      for (int j = 0; j < nb + nc; ++j) {
        if (pos(rng) < 0.7) {
          const double c = std::round(6 * u(rng));
          t.push_back({j, c});
          act += c * x0[j];
        }
      }
      const RowSense s = pos(rng) < 0.7 ? RowSense::kLessEqual : RowSense::kGreaterEqual;
      const double slack = pos(rng) < 0.2 ? -1.0 : pos(rng);  // some infeasible
      p.add_row("r" + std::to_string(i), t, s, s == RowSense::kLessEqual ? act + slack : act - slack);
    }
    if (trial % 3 == 0) p.set_sense(ObjectiveSense::kMaximize);

    const double sgn = p.sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;
    bool any = false;
    double best = 0;
    for (int mask = 0; mask < (1 << nb); ++mask) {
      std::vector<std::pair<int, double>> fixed;
      for (int j = 0; j < nb; ++j) fixed.push_back({j, double(mask >> j & 1)});
      const oracle::DenseResult r = oracle::solve_dense(to_dense(p, fixed));
      if (r.status != oracle::Status::kOptimal) continue;
      const double v = dense_objective(p, r, fixed);
      if (!any || sgn * v < sgn * best) best = v;
      any = true;
    }
    const MilpSolution s = solve_milp(p);
    INFO("trial " << trial);
    REQUIRE(s.status != MilpStatus::kNodeLimit);
    REQUIRE((s.status == MilpStatus::kOptimal) == any);
    if (!any) continue;
    ++solved;
    CHECK(std::abs(s.objective - best) <= 1e-6);
    for (int j = 0; j < nb; ++j) CHECK((s.x[j] == 0.0 || s.x[j] == 1.0));
  }
  CHECK(solved > 100);
}

TEST_CASE("LP text dump") {
  ProblemDef p;
  const int x = p.add_var("x[1]", 0, 1, VarKind::kBinary, 1.0);
  const int y = p.add_var("y", -kInfinity, kInfinity, VarKind::kContinuous, -2.0);
  p.add_row("r 1", {{x, 1.0}, {y, -1.0}}, RowSense::kGreaterEqual, 0.5);
  std::ostringstream out;
  write_lp_format(p, out);
  const std::string s = out.str();
  CHECK(s.find("Minimize") != std::string::npos);
  CHECK(s.find("r_1: 1 x_1_ - 1 y >= 0.5") != std::string::npos);
  CHECK(s.find("y free") != std::string::npos);
  CHECK(s.find("Binaries") != std::string::npos);
}
