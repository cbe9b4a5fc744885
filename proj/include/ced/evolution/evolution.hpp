#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ced/dispatch/dispatch.hpp"
#include "ced/mp/problem.hpp"

namespace ced::evolution {

// How the procured curtailable capacity binds intraday curtailment:
// curtailment equals the capacity, or is bounded by it.
enum class ClMode { kFixEquality, kCapBound };

const char* to_string(ClMode m);
ClMode parse_cl_mode(const std::string& s);  // "fix-equality" | "cap-bound"

struct PeriodState {
  std::vector<double> p_prev;  // generator outputs at t-1
  std::vector<double> soc;     // storage energy at t-1
};

PeriodState initial_state(const model::SystemSpec& spec);

// Row duals of one period LP in the mp sign convention (>= 0 for
// inequalities, free for equalities).
struct DualBundle {
  std::vector<double> output_lower;  // p >= p_min x
  std::vector<double> output_upper;  // p <= p_max x
  std::vector<double> ramp_down;     // p_{t-1} - p_t <= RD x_t + p_max (1 - x_t)
  std::vector<double> ramp_up;       // p_t - p_{t-1} <= RU x_{t-1} + p_max (1 - x_{t-1})
  std::vector<double> cl_tie;        // p_c = cap (or p_c <= cap)
  std::vector<double> cl_lower;      // reduced cost of p_c at zero
  double balance = 0.0;

  bool operator==(const DualBundle&) const = default;
};

struct PeriodLp {
  mp::ProblemDef problem;
  std::vector<int> p_gen, charge, discharge, soc, p_fqr, p_cl, terminal_slack;
  int slack_up = -1, slack_down = -1;
  std::vector<int> output_lower_rows, output_upper_rows, ramp_down_rows, ramp_up_rows, cl_tie_rows;
  int balance_row = -1;
};

// Period-t operation with the day-ahead decision and the renewable values of
// period t fixed. `t` is 1-based. Only scenario[r][t-1] is read.
PeriodLp build_period_lp(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                         const dispatch::DayAheadDecision& fixed, const dispatch::RenewableScenario& scenario, int t,
                         const PeriodState& state, ClMode mode);

struct PeriodOutcome {
  int t = 0;
  double objective = 0.0;
  double lpun = 0.0;  // c^p (s+ + s-)
  double slack_up = 0.0;
  double slack_down = 0.0;
  double terminal_slack = 0.0;
  std::vector<double> p_gen, charge, discharge, soc, p_cl;
  DualBundle duals;
  bool certificate_ok = false;

  bool operator==(const PeriodOutcome&) const = default;
};

struct ScenarioEvolution {
  int scenario = 0;  // index in the scenario list
  std::vector<PeriodOutcome> periods;
  bool errored = false;
  std::string error;

  double max_lpun() const;
  bool feasible(double tol) const;
};

ScenarioEvolution evolve_scenario(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                  const dispatch::DayAheadDecision& fixed, const dispatch::RenewableScenario& scenario,
                                  int index, ClMode mode);

// Scenarios run on up to `jobs` threads; results keep input order.
std::vector<ScenarioEvolution> evolve_all(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                          const dispatch::DayAheadDecision& fixed,
                                          std::span<const dispatch::RenewableScenario> scenarios, ClMode mode,
                                          int jobs);

struct InfeasibleEntry {
  int scenario = 0;
  int t = 0;
  double lpun = 0.0;
  DualBundle duals;
};

// Every (scenario, period) with lpun > tol, largest first; ties by
// scenario then period.
std::vector<InfeasibleEntry> collect_infeasible(std::span<const ScenarioEvolution> results, double tol);

// Average over scenarios of s+ + s- per period (MW).
std::vector<double> average_imbalance(const model::SystemSpec& spec, std::span<const ScenarioEvolution> results);

// Columns: t, lpun, slack_up, slack_down, terminal_slack, soc_<id>..., p_<id>...
void write_evolution_csv(std::ostream& out, const model::SystemSpec& spec, const ScenarioEvolution& e);

}  // namespace ced::evolution
