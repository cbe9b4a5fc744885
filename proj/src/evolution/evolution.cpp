#include "ced/evolution/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "ced/error.hpp"
#include "ced/mp/lp.hpp"

namespace ced::evolution {

using mp::RowSense;
using mp::VarKind;

namespace {

std::size_t at(int k) { return static_cast<std::size_t>(k); }

// Keeps "-0.000000" out of the CSV.
double clean(double v) { return std::abs(v) < 5e-7 ? 0.0 : v; }

}  // namespace

const char* to_string(ClMode m) { return m == ClMode::kFixEquality ? "fix-equality" : "cap-bound"; }

ClMode parse_cl_mode(const std::string& s) {
  if (s == "fix-equality") return ClMode::kFixEquality;
  if (s == "cap-bound") return ClMode::kCapBound;
  throw ConfigError("--mode", fmt::format("unknown mode '{}' (expected fix-equality or cap-bound)", s));
}

PeriodState initial_state(const model::SystemSpec& spec) {
  PeriodState s;
  for (const auto& g : spec.generators) s.p_prev.push_back(dispatch::initial_output(g));
  for (const auto& e : spec.storages) s.soc.push_back(e.e_init);
  return s;
}

PeriodLp build_period_lp(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                         const dispatch::DayAheadDecision& fixed, const dispatch::RenewableScenario& scenario, int t,
                         const PeriodState& state, ClMode mode) {
  if (t < 1 || t > spec.n_periods) throw DomainError(fmt::format("period {} out of range", t));
  const std::size_t k = at(t - 1);
  PeriodLp lp;
  mp::ProblemDef& p = lp.problem;

  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const auto& gen = spec.generators[g];
    lp.p_gen.push_back(p.add_var(fmt::format("p_{}", gen.id), 0, mp::kInfinity, VarKind::kContinuous, gen.cost_energy));
  }
  double renewable = 0;
  for (std::size_t r = 0; r < spec.renewables.size(); ++r) renewable += scenario.at(r).at(k);
  for (const auto& e : spec.storages) {
    lp.charge.push_back(p.add_var("ch_" + e.id, 0, e.p_max, VarKind::kContinuous, e.cost_throughput));
    lp.discharge.push_back(p.add_var("dc_" + e.id, 0, e.p_max, VarKind::kContinuous, e.cost_throughput));
    lp.soc.push_back(p.add_var("soc_" + e.id, e.e_min, e.e_max));
  }
  for (std::size_t b = 0; b < spec.fqr_loads.size(); ++b) {
    const double cap = fixed.fqr_cap[b][k];
    lp.p_fqr.push_back(p.add_var("pb_" + spec.fqr_loads[b].id, cap, cap));
  }
  for (const auto& c : spec.cl_loads) lp.p_cl.push_back(p.add_var("pc_" + c.id, 0, mp::kInfinity));
  lp.slack_up = p.add_var("sup", 0, mp::kInfinity, VarKind::kContinuous, spec.punish_price);
  lp.slack_down = p.add_var("sdn", 0, mp::kInfinity, VarKind::kContinuous, spec.punish_price);

  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const auto& gen = spec.generators[g];
    const double x = fixed.commit[g][k];
    const double x_prev = k > 0 ? fixed.commit[g][k - 1] : (gen.initial_on ? 1.0 : 0.0);
    const int pg = lp.p_gen[g];
    lp.output_lower_rows.push_back(p.add_row("pmin_" + gen.id, {{pg, 1}}, RowSense::kGreaterEqual, gen.p_min * x));
    lp.output_upper_rows.push_back(p.add_row("pmax_" + gen.id, {{pg, 1}}, RowSense::kLessEqual, gen.p_max * x));
    lp.ramp_down_rows.push_back(p.add_row("rampdn_" + gen.id, {{pg, -1}}, RowSense::kLessEqual,
                                          gen.ramp_down * x + gen.p_max * (1 - x) - state.p_prev[g]));
    lp.ramp_up_rows.push_back(p.add_row("rampup_" + gen.id, {{pg, 1}}, RowSense::kLessEqual,
                                        state.p_prev[g] + gen.ramp_up * x_prev + gen.p_max * (1 - x_prev)));
  }
  for (std::size_t e = 0; e < spec.storages.size(); ++e) {
    const auto& st = spec.storages[e];
    p.add_row("soc_" + st.id, {{lp.soc[e], 1}, {lp.charge[e], -st.eta_ch}, {lp.discharge[e], 1.0 / st.eta_dc}},
              RowSense::kEqual, state.soc[e]);
    if (t == spec.n_periods) {
      // A myopic policy cannot plan for the terminal target, so it is soft.
      lp.terminal_slack.push_back(
          p.add_var("socend_slack_" + st.id, 0, mp::kInfinity, VarKind::kContinuous, spec.punish_price));
      p.add_row("socend_" + st.id, {{lp.soc[e], 1}, {lp.terminal_slack.back(), 1}}, RowSense::kGreaterEqual,
                st.e_init);
    }
  }
  for (std::size_t c = 0; c < spec.cl_loads.size(); ++c) {
    lp.cl_tie_rows.push_back(p.add_row("cltie_" + spec.cl_loads[c].id, {{lp.p_cl[c], 1}},
                                       mode == ClMode::kFixEquality ? RowSense::kEqual : RowSense::kLessEqual,
                                       fixed.cl_cap[c][k]));
  }

  std::vector<mp::Term> bal;
  for (int v : lp.p_gen) bal.push_back({v, 1});
  for (std::size_t e = 0; e < spec.storages.size(); ++e) {
    bal.push_back({lp.discharge[e], 1});
    bal.push_back({lp.charge[e], -1});
  }
  for (int v : lp.p_cl) bal.push_back({v, 1});
  bal.push_back({lp.slack_up, 1});
  bal.push_back({lp.slack_down, -1});
  lp.balance_row = p.add_row("balance", bal, RowSense::kEqual, model::total_demand(spec, t) - renewable);

  for (const auto& h : hps.planes) {
    const dispatch::FrequencyRow fr = dispatch::frequency_row(spec, h, t);
    std::vector<mp::Term> row;
    double rhs = fr.rhs;
    for (int v : lp.p_fqr) row.push_back({v, -1});
    for (std::size_t g = 0; g < spec.generators.size(); ++g) rhs += fr.commit_coef[g] * fixed.commit[g][k];
    p.add_row(fmt::format("freq_{}", h.id), row, RowSense::kLessEqual, rhs);
  }
  return lp;
}

double ScenarioEvolution::max_lpun() const {
  double m = 0;
  for (const auto& p : periods) m = std::max(m, p.lpun);
  return m;
}

bool ScenarioEvolution::feasible(double tol) const { return !errored && max_lpun() <= tol; }

ScenarioEvolution evolve_scenario(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                  const dispatch::DayAheadDecision& fixed, const dispatch::RenewableScenario& scenario,
                                  int index, ClMode mode) {
  ScenarioEvolution out;
  out.scenario = index;
  PeriodState state = initial_state(spec);
  for (int t = 1; t <= spec.n_periods; ++t) {
    const PeriodLp lp = build_period_lp(spec, hps, fixed, scenario, t, state, mode);
    const mp::LpSolution s = mp::solve_lp(lp.problem);
    if (s.status != mp::LpStatus::kOptimal) {
      out.errored = true;
      out.error = fmt::format("period {} LP is {}", t, mp::to_string(s.status));
      return out;
    }
    auto val = [&](int j) { return s.x[at(j)]; };
    auto dual = [&](int i) { return s.duals[at(i)]; };
    PeriodOutcome o;
    o.t = t;
    o.objective = s.objective;
    o.slack_up = val(lp.slack_up);
    o.slack_down = val(lp.slack_down);
    o.lpun = spec.punish_price * (o.slack_up + o.slack_down);
    for (int j : lp.terminal_slack) o.terminal_slack += val(j);
    for (int j : lp.p_gen) o.p_gen.push_back(val(j));
    for (int j : lp.charge) o.charge.push_back(val(j));
    for (int j : lp.discharge) o.discharge.push_back(val(j));
    for (int j : lp.soc) o.soc.push_back(val(j));
    for (int j : lp.p_cl) o.p_cl.push_back(val(j));
    for (int i : lp.output_lower_rows) o.duals.output_lower.push_back(dual(i));
    for (int i : lp.output_upper_rows) o.duals.output_upper.push_back(dual(i));
    for (int i : lp.ramp_down_rows) o.duals.ramp_down.push_back(dual(i));
    for (int i : lp.ramp_up_rows) o.duals.ramp_up.push_back(dual(i));
    for (int i : lp.cl_tie_rows) o.duals.cl_tie.push_back(dual(i));
    for (int j : lp.p_cl) o.duals.cl_lower.push_back(s.reduced_costs[at(j)]);
    o.duals.balance = dual(lp.balance_row);
    o.certificate_ok = mp::verify_certificate(lp.problem, s).ok;
    state.p_prev = o.p_gen;
    state.soc = o.soc;
    out.periods.push_back(std::move(o));
  }
  return out;
}

std::vector<ScenarioEvolution> evolve_all(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                          const dispatch::DayAheadDecision& fixed,
                                          std::span<const dispatch::RenewableScenario> scenarios, ClMode mode,
                                          int jobs) {
  std::vector<ScenarioEvolution> out(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        out[i] = evolve_scenario(spec, hps, fixed, scenarios[i], static_cast<int>(i), mode);
      } catch (const Error& e) {
        out[i].scenario = static_cast<int>(i);
        out[i].errored = true;
        out[i].error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(scenarios.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < n; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

std::vector<InfeasibleEntry> collect_infeasible(std::span<const ScenarioEvolution> results, double tol) {
  std::vector<InfeasibleEntry> out;
  for (const auto& r : results) {
    for (const auto& p : r.periods) {
      if (p.lpun > tol) out.push_back({r.scenario, p.t, p.lpun, p.duals});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const InfeasibleEntry& a, const InfeasibleEntry& b) {
    if (a.lpun != b.lpun) return a.lpun > b.lpun;
    if (a.scenario != b.scenario) return a.scenario < b.scenario;
    return a.t < b.t;
  });
  return out;
}

std::vector<double> average_imbalance(const model::SystemSpec& spec, std::span<const ScenarioEvolution> results) {
  std::vector<double> avg(at(spec.n_periods), 0.0);
  if (results.empty()) return avg;
  for (const auto& r : results) {
    for (const auto& p : r.periods) avg[at(p.t - 1)] += p.slack_up + p.slack_down;
  }
  for (double& v : avg) v /= static_cast<double>(results.size());
  return avg;
}

void write_evolution_csv(std::ostream& out, const model::SystemSpec& spec, const ScenarioEvolution& e) {
  out << "t,lpun,slack_up,slack_down,terminal_slack";
  for (const auto& s : spec.storages) out << ",soc_" << s.id;
  for (const auto& g : spec.generators) out << ",p_" << g.id;
  out << '\n';
  for (const auto& p : e.periods) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f}", p.t, clean(p.lpun), clean(p.slack_up), clean(p.slack_down),
                       clean(p.terminal_slack));
    for (double v : p.soc) out << fmt::format(",{:.6f}", clean(v));
    for (double v : p.p_gen) out << fmt::format(",{:.6f}", clean(v));
    out << '\n';
  }
}

}  // namespace ced::evolution
