#pragma once

#include <span>
#include <string>
#include <vector>

#include "ced/model/system.hpp"
#include "ced/mp/problem.hpp"
#include "ced/relax/relax.hpp"

namespace ced::dispatch {

// All grids are [device][period] with 0-based period index.
template <class T>
using Grid = std::vector<std::vector<T>>;

struct DayAheadDecision {
  Grid<int> commit;
  Grid<int> startup;
  Grid<int> shutdown;
  Grid<double> fqr_cap;
  Grid<double> cl_cap;

  // Consecutive periods on (off) up to and including t; diagnostics only.
  Grid<int> on_duration() const;
  Grid<int> off_duration() const;
  bool operator==(const DayAheadDecision&) const = default;
};

struct RecourseDecision {
  Grid<double> p_gen;
  Grid<double> p_ren;
  Grid<double> charge;
  Grid<double> discharge;
  Grid<double> soc;
  Grid<double> p_fqr;
  Grid<double> p_cl;
  std::vector<double> slack_up;    // s+ : unserved demand
  std::vector<double> slack_down;  // s- : surplus
};

struct CostBreakdown {
  std::vector<double> l_sa, l_si, l_es, l_fqr, l_cl, l_pun;

  double total_sa() const;
  double total_si() const;
  double total_es() const;
  double total_fqr() const;
  double total_cl() const;
  double total_pun() const;
  double total() const;
};

// Renewable output per [renewable][period], MW.
using RenewableScenario = Grid<double>;

RenewableScenario expected_scenario(const model::SystemSpec& spec);

// A first-stage quantity seen from a recourse row: either a column of the
// same problem or a known constant.
struct Ref {
  int var = -1;
  double value = 0.0;
  bool is_var() const { return var >= 0; }
};

struct FirstStageRefs {
  Grid<Ref> commit;
  Grid<Ref> fqr_cap;
  Grid<Ref> cl_cap;
};

FirstStageRefs constant_refs(const DayAheadDecision& d);

// Master-side row sum_g a_g x_{g,t} + sum_c b_c cap_{c,t} <= rhs.
struct CutRow {
  std::string id;
  int period = 1;  // 1-based
  std::vector<double> commit_coef;
  std::vector<double> cl_coef;
  double rhs = 0.0;
};

struct FirstStageIndex {
  Grid<int> commit;
  Grid<int> startup;
  Grid<int> shutdown;
  Grid<int> fqr_cap;
  Grid<int> cl_cap;
  std::vector<int> cut_rows;

  FirstStageRefs refs() const;
};

// Commitment, start-up/shut-down and capacities with window min up/down
// rows, start/stop linking and all cut rows. Start-up, shut-down and
// capacity prices go into the objective.
FirstStageIndex build_first_stage(const model::SystemSpec& spec, std::span<const CutRow> cuts,
                                  mp::ProblemDef& p);

struct RecourseIndex {
  Grid<int> p_gen, p_ren, charge, discharge, soc, p_fqr, p_cl;
  std::vector<int> slack_up, slack_down;
  std::vector<int> balance_rows;
  Grid<int> freq_rows;  // [plane][period]
  // Recourse cost as a linear expression (no constant part).
  std::vector<mp::Term> cost;
};

// One full-horizon copy of the operating constraints. Renewable outputs
// are fixed to `scenario`. With `price_in_objective` the recourse cost is
// added to the problem objective; otherwise it is only returned in
// RecourseIndex::cost. `tag` prefixes every id.
RecourseIndex build_recourse(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                             const FirstStageRefs& first, const RenewableScenario& scenario,
                             const std::string& tag, bool price_in_objective, mp::ProblemDef& p);

// The deterministic unit commitment on one scenario.
struct DeterministicModel {
  mp::ProblemDef problem;
  FirstStageIndex first;
  RecourseIndex recourse;
};
DeterministicModel build_deterministic(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                       const RenewableScenario& scenario, std::span<const CutRow> cuts = {});

DayAheadDecision extract_first_stage(const model::SystemSpec& spec, const FirstStageIndex& idx,
                                     const std::vector<double>& x);
RecourseDecision extract_recourse(const model::SystemSpec& spec, const RecourseIndex& idx,
                                  const std::vector<double>& x);

// Per-period cost terms. Flexible-load terms are charged on the procured
// capacity.
CostBreakdown cost_terms(const model::SystemSpec& spec, const DayAheadDecision& d, const RecourseDecision& r);
double first_stage_cost(const model::SystemSpec& spec, const DayAheadDecision& d);

// Independent re-check of every device, balance and frequency constraint.
// Returns one message per violation larger than `tol`.
std::vector<std::string> check_constraints(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                           const DayAheadDecision& d, const RecourseDecision& r,
                                           const RenewableScenario& scenario, double tol = 1e-6);

// Coefficients of one frequency row written as
//   -sum_b p_b - sum_g coef_g x_g <= rhs   (MW)
struct FrequencyRow {
  std::vector<double> commit_coef;
  double rhs = 0.0;
};
FrequencyRow frequency_row(const model::SystemSpec& spec, const relax::Hyperplane& h, int t);

// Initial output implied by initial_on.
double initial_output(const model::GeneratorSpec& g);

// Keys are device ids; each value is an n_periods array.
nlohmann::json to_json(const model::SystemSpec& spec, const DayAheadDecision& d);
// ConfigError (with a JSON path) on missing devices or wrong lengths.
DayAheadDecision decision_from_json(const model::SystemSpec& spec, const nlohmann::json& doc);
DayAheadDecision load_decision(const model::SystemSpec& spec, const std::filesystem::path& path);

}  // namespace ced::dispatch
