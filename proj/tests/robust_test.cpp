#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "ced/mp/dual.hpp"
#include "ced/mp/lp.hpp"
#include "ced/mp/milp.hpp"
#include "ced/robust/robust.hpp"
#include "fixtures.hpp"

using namespace ced;
using namespace ced::robust;

namespace {

const relax::HyperplaneSet& planes() {
  static const relax::HyperplaneSet h = relax::algorithm1(fixtures::reference());
  return h;
}

double deterministic_objective(const model::SystemSpec& s) {
  dispatch::DeterministicModel m = dispatch::build_deterministic(s, planes(), dispatch::expected_scenario(s));
  const mp::MilpSolution r = mp::solve_milp(m.problem);
  REQUIRE(r.status == mp::MilpStatus::kOptimal);
  return r.objective;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("ced_robust_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("dual columns reproduce the primal optimum") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int solved = 0;
  for (int trial = 0; trial < 40; ++trial) {
    mp::ProblemDef p;
    const int n = 4, m = 3;
    for (int j = 0; j < n; ++j) {
      const double lo = trial % 3 == 0 && j == 0 ? 0.7 : 0.0;
      const double hi = trial % 3 == 0 && j == 0 ? 0.7 : 5.0 + 5.0 * u(rng);
      p.add_var("x" + std::to_string(j), lo, hi, mp::VarKind::kContinuous, 3.0 * u(rng));
    }
    for (int i = 0; i < m; ++i) {
      std::vector<mp::Term> t;
      for (int j = 0; j < n; ++j) t.push_back({j, u(rng)});
      const auto sense = i == 0 ? mp::RowSense::kEqual : i == 1 ? mp::RowSense::kLessEqual : mp::RowSense::kGreaterEqual;
      p.add_row("r" + std::to_string(i), t, sense, i == 1 ? 4.0 : u(rng));
    }
    p.set_offset(1.5);
    const mp::LpSolution primal = mp::solve_lp(p);
    if (primal.status != mp::LpStatus::kOptimal) continue;
    mp::ProblemDef d;
    d.set_sense(mp::ObjectiveSense::kMaximize);
    mp::append_dual(p, "d", d);
    const mp::LpSolution dual = mp::solve_lp(d);
    REQUIRE(dual.status == mp::LpStatus::kOptimal);
    CHECK(dual.objective == doctest::Approx(primal.objective).epsilon(1e-8));
    ++solved;
  }
  CHECK(solved > 10);
}

TEST_CASE("zero half-width gives the deterministic commitment in one iteration") {
  model::SystemSpec s = fixtures::truncated(6);
  for (auto& r : s.renewables) std::fill(r.half_width.begin(), r.half_width.end(), 0.0);
  const CcgResult r = ccg_loop(s, planes(), {});
  CHECK(r.state.iteration == 1);
  CHECK(r.state.converged);
  CHECK(r.state.upper_bound == doctest::Approx(deterministic_objective(s)).epsilon(1e-9));
}

TEST_CASE("subproblem matches enumeration of the box corners") {
  model::SystemSpec s = fixtures::truncated(2);
  REQUIRE(s.renewables.size() == 1);
  // A tight evening so some corners cost punish slack.
  fixtures::set_demand(s, {470, 520});
  for (auto& r : s.renewables) r.half_width = {30, 40};
  const MasterResult m = master_solve(s, planes(), {}, {});
  const SubproblemResult sub = subproblem_solve(s, planes(), m.decision);
  CHECK(sub.certified);
  double best = -1e300;
  for (int a : {-1, 1}) {
    for (int b : {-1, 1}) {
      const ScenarioVertex v = vertex_from_signs(s, {{a, b}});
      best = std::max(best, recourse_value(s, planes(), m.decision, v.values));
    }
  }
  CHECK(sub.value == doctest::Approx(best).epsilon(1e-7));
  CHECK(recourse_value(s, planes(), m.decision, sub.vertex.values) == doctest::Approx(best).epsilon(1e-7));
  CHECK(sub.heuristic_value <= sub.value + 1e-6);
}

TEST_CASE("C&CG bounds and nested boxes") {
  model::SystemSpec s = fixtures::truncated(4);
  fixtures::set_demand(s, {420, 460, 500, 480});
  double previous = -1e300;
  for (double scale : {0.0, 0.5, 1.0, 2.0}) {
    model::SystemSpec b = s;
    for (auto& r : b.renewables) {
      for (std::size_t k = 0; k < r.half_width.size(); ++k) r.half_width[k] = scale * 0.15 * r.expected[k];
    }
    const CcgResult r = ccg_loop(b, planes(), {});
    for (std::size_t i = 1; i < r.state.log.size(); ++i) {
      CHECK(r.state.log[i].lower_bound >= r.state.log[i - 1].lower_bound - 1e-6);
      CHECK(r.state.log[i].upper_bound <= r.state.log[i - 1].upper_bound + 1e-6);
    }
    CHECK(r.state.lower_bound <= r.state.upper_bound + 1e-6);
    const double tol = b.ccg_gap_tol * (1 + std::abs(r.state.upper_bound));
    CHECK(r.state.upper_bound >= previous - tol);
    previous = r.state.upper_bound;
  }
}

TEST_CASE("iteration cap raises with the last state") {
  model::SystemSpec s = fixtures::truncated(3);
  fixtures::set_demand(s, {470, 520, 500});
  for (auto& r : s.renewables) r.half_width = {30, 40, 30};
  s.ccg_max_iters = 1;
  try {
    ccg_loop(s, planes(), {});
    // Converging in one iteration is also legitimate.
  } catch (const CcgCapError& e) {
    CHECK(e.state().iteration == 1);
    CHECK(e.state().lower_bound <= e.state().upper_bound + 1e-6);
  }
}

TEST_CASE("scenario files round trip") {
  const model::SystemSpec s = fixtures::truncated(3);
  const std::vector<ScenarioVertex> in = {expected_vertex(s), vertex_from_signs(s, {{1, -1, 0}}),
                                          vertex_from_signs(s, {{-1, -1, -1}})};
  const auto dir = scratch("roundtrip");
  const auto files = write_scenarios(s, in, dir);
  CHECK(files.size() == 4);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  const auto out = read_scenarios(s, dir);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out[i] == in[i]);
    CHECK(out[i].values == in[i].values);
  }
  CHECK(in[1].deviations() == 2);

  // Wrong period count.
  const model::SystemSpec longer = fixtures::truncated(4);
  CHECK_THROWS_AS(read_scenarios(longer, dir), ConfigError);
}

TEST_CASE("cuts that exclude every commitment are named") {
  model::SystemSpec s = fixtures::truncated(2);
  dispatch::CutRow a{"no_units", 1, std::vector<double>(s.generators.size(), 1.0), {0.0}, -1.0};
  CHECK_THROWS_AS(master_solve(s, planes(), std::vector<dispatch::CutRow>{a}, {}), MasterInfeasibleError);
  try {
    master_solve(s, planes(), std::vector<dispatch::CutRow>{a}, {});
  } catch (const MasterInfeasibleError& e) {
    REQUIRE(e.cut_ids().size() == 1);
    CHECK(e.cut_ids()[0] == "no_units");
  }
}
