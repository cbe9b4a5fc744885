#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ced/dispatch/dispatch.hpp"
#include "ced/error.hpp"

namespace ced::robust {

using dispatch::Grid;

// A corner (or the centre) of the renewable box.
struct ScenarioVertex {
  Grid<int> sign;  // [renewable][period] in {-1, 0, +1}
  dispatch::RenewableScenario values;

  int deviations() const;
  bool operator==(const ScenarioVertex& o) const { return sign == o.sign; }
};

ScenarioVertex vertex_from_signs(const model::SystemSpec& spec, Grid<int> sign);
ScenarioVertex expected_vertex(const model::SystemSpec& spec);

class MasterInfeasibleError : public Error {
 public:
  MasterInfeasibleError(std::vector<std::string> cut_ids);
  // A subset of cuts that is infeasible together (empty when the model is
  // infeasible without any cut).
  const std::vector<std::string>& cut_ids() const noexcept { return cut_ids_; }

 private:
  std::vector<std::string> cut_ids_;
};

struct MasterResult {
  dispatch::DayAheadDecision decision;
  double lower_bound = 0.0;
  double first_stage_cost = 0.0;
  double epigraph = 0.0;
  // Recourse of each scenario copy at the optimum.
  std::vector<dispatch::RecourseDecision> recourse;
  long nodes = 0;
};

// First stage + one recourse copy per scenario + epigraph of the worst
// recourse cost. An empty scenario list means the expected scenario only.
MasterResult master_solve(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                          std::span<const dispatch::CutRow> cuts, std::span<const ScenarioVertex> scenarios);

struct SubproblemResult {
  ScenarioVertex vertex;
  double value = 0.0;       // worst-case recourse cost
  bool certified = false;   // false if the search stopped at its node limit
  double heuristic_value = 0.0;
  long nodes = 0;
};

// Recourse LP optimum with the first stage and renewables fixed.
double recourse_value(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                      const dispatch::DayAheadDecision& fixed, const dispatch::RenewableScenario& scenario);

// max over the renewable box (or budgeted subset) of the recourse optimum.
// The inner LP is dualised; renewable outputs multiply one free dual each,
// and those products are linearised with bound c^p. A local-search
// incumbent seeds branch-and-bound as a cutoff. The returned value is
// re-checked against the primal LP at the chosen vertex.
SubproblemResult subproblem_solve(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                  const dispatch::DayAheadDecision& fixed);

struct CcgIteration {
  int iteration = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double subproblem_value = 0.0;
  bool certified = true;
  int scenarios = 0;
};

struct CcgState {
  int iteration = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::vector<ScenarioVertex> scenarios;
  dispatch::DayAheadDecision incumbent;
  std::vector<CcgIteration> log;
  bool converged = false;
};

class CcgCapError : public Error {
 public:
  CcgCapError(CcgState state);
  const CcgState& state() const noexcept { return state_; }

 private:
  CcgState state_;
};

struct CcgResult {
  dispatch::DayAheadDecision decision;
  std::vector<ScenarioVertex> omega_w;  // every subproblem vertex, first-seen order
  CcgState state;
  MasterResult master;
};

// Alternates master and subproblem until UB - LB <= ccg_gap_tol (1 + |UB|).
CcgResult ccg_loop(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                   std::span<const dispatch::CutRow> cuts);

// One CSV per scenario (columns renewable, t, sign, p_mw) plus manifest.json.
std::vector<std::filesystem::path> write_scenarios(const model::SystemSpec& spec,
                                                   std::span<const ScenarioVertex> scenarios,
                                                   const std::filesystem::path& dir);
std::vector<ScenarioVertex> read_scenarios(const model::SystemSpec& spec, const std::filesystem::path& dir);

}  // namespace ced::robust
