#include <doctest.h>

#include "ced/correction/correction.hpp"
#include "fixtures.hpp"

using namespace ced;
using namespace ced::correction;

namespace {

dispatch::DayAheadDecision only_first_unit(const model::SystemSpec& s) {
  const std::size_t n = static_cast<std::size_t>(s.n_periods);
  dispatch::DayAheadDecision d;
  for (std::size_t g = 0; g < s.generators.size(); ++g) {
    d.commit.push_back(std::vector<int>(n, g == 0 ? 1 : 0));
    d.startup.push_back(std::vector<int>(n, 0));
    d.shutdown.push_back(std::vector<int>(n, 0));
  }
  for (std::size_t b = 0; b < s.fqr_loads.size(); ++b) d.fqr_cap.push_back(std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < s.cl_loads.size(); ++c) d.cl_cap.push_back(std::vector<double>(n, 0.0));
  return d;
}

model::SystemSpec short_of_power() {
  model::SystemSpec s = fixtures::truncated(2);
  for (auto& r : s.renewables) {
    std::fill(r.expected.begin(), r.expected.end(), 0.0);
    std::fill(r.half_width.begin(), r.half_width.end(), 0.0);
  }
  fixtures::set_demand(s, {250, 250});
  for (std::size_t g = 1; g < s.generators.size(); ++g) s.generators[g].initial_on = false;
  return s;
}

model::SystemSpec stressed(int periods) {
  model::SystemSpec s = model::load_system("data/case14_stressed.json");
  s.n_periods = periods;
  for (auto& r : s.renewables) {
    r.expected.resize(static_cast<std::size_t>(periods));
    r.half_width.resize(static_cast<std::size_t>(periods));
  }
  for (auto& d : s.demands) d.demand.resize(static_cast<std::size_t>(periods));
  return s;
}

}  // namespace

TEST_CASE("cut from a seeded shortfall") {
  const model::SystemSpec s = short_of_power();
  const auto d = only_first_unit(s);
  const auto e = evolution::evolve_scenario(s, relax::HyperplaneSet{}, d, dispatch::expected_scenario(s), 0,
                                            evolution::ClMode::kFixEquality);
  const auto bad = evolution::collect_infeasible(std::vector<evolution::ScenarioEvolution>{e}, s.lpun_tol);
  // Storage can give (e_init - e_min) eta_dc = 7.6 MW in period 1, then nothing.
  REQUIRE(bad.size() == 2);
  CHECK(bad[0].t == 2);
  CHECK(bad[0].lpun == doctest::Approx(50 * s.punish_price));
  CHECK(bad[1].t == 1);
  CHECK(bad[1].lpun == doctest::Approx(42.4 * s.punish_price));

  const Cut c = build_cut(bad[1], d, s, 1);
  CHECK(c.violated_by(d));
  CHECK(c.lhs(d) == doctest::Approx(0));
  // Starting any idle unit helps.
  for (std::size_t g = 1; g < s.generators.size(); ++g) CHECK(c.commit_coef[g] < 0);
  CHECK(c.cl_coef[0] < 0);
  CHECK(c.id() == "cut_k1_w0_t1");

  auto fixed = d;
  fixed.commit[1][0] = 1;
  CHECK_FALSE(c.violated_by(fixed));

  // The master row says the same thing as the cut.
  const dispatch::CutRow row = c.row();
  for (const dispatch::DayAheadDecision* dec : {&d, static_cast<const dispatch::DayAheadDecision*>(&fixed)}) {
    double lhs = 0;
    for (std::size_t g = 0; g < s.generators.size(); ++g) lhs += row.commit_coef[g] * dec->commit[g][0];
    lhs += row.cl_coef[0] * dec->cl_cap[0][0];
    CHECK((lhs > row.rhs + 1e-6) == c.violated_by(*dec));
  }
}

TEST_CASE("vanishing duals give no cut") {
  const model::SystemSpec s = short_of_power();
  evolution::InfeasibleEntry entry;
  entry.t = 1;
  entry.lpun = 5;
  const std::size_t n = s.generators.size();
  entry.duals.output_lower = entry.duals.output_upper = entry.duals.ramp_down = entry.duals.ramp_up =
      std::vector<double>(n, 0.0);
  entry.duals.cl_tie = entry.duals.cl_lower = {0.0};
  CHECK_THROWS_AS(build_cut(entry, only_first_unit(s), s, 1), CutError);
}

TEST_CASE("cut set keys") {
  CutSet set;
  Cut a;
  a.period = 3;
  a.scenario = 1;
  a.outer_iteration = 1;
  CHECK(set.add(a));
  CHECK_FALSE(set.add(a));
  a.outer_iteration = 2;
  CHECK(set.add(a));
  CHECK(set.size() == 2);
  CHECK(set.rows().size() == 2);
}

TEST_CASE("outer loop closes a myopic shortfall") {
  const model::SystemSpec s = stressed(9);
  const OuterReport r = outer_loop(s);
  REQUIRE(r.status == OuterStatus::kClosed);
  CHECK(r.separation_failures == 0);
  REQUIRE(!r.iterations.empty());
  const auto before = evolution::average_imbalance(s, r.before);
  const auto after = evolution::average_imbalance(s, r.after);
  double worst_before = 0;
  for (double v : before) worst_before = std::max(worst_before, v);
  CHECK(worst_before > 0);
  for (const auto& e : r.after) CHECK(e.max_lpun() <= s.lpun_tol);
  for (double v : after) CHECK(v * s.punish_price <= s.lpun_tol);
  CHECK(r.iterations.back().cuts_total == static_cast<int>(r.cuts.size()));
}
