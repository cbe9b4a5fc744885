#pragma once

#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ced/dispatch/dispatch.hpp"
#include "ced/error.hpp"
#include "ced/evolution/evolution.hpp"
#include "ced/relax/relax.hpp"
#include "ced/robust/robust.hpp"

namespace ced::correction {

// sum_g a_g (x_{g,t} - xref_g) + sum_c b_c (cap_{c,t} - capref_c) <= -lpun
struct Cut {
  int period = 0;  // 1-based
  int scenario = 0;
  int outer_iteration = 0;
  std::vector<double> commit_coef;
  std::vector<double> cl_coef;
  std::vector<double> commit_ref;
  std::vector<double> cl_ref;
  double lpun = 0.0;
  evolution::DualBundle provenance;
  std::vector<std::string> warnings;

  std::string id() const;
  double lhs(const dispatch::DayAheadDecision& d) const;
  bool violated_by(const dispatch::DayAheadDecision& d) const { return lhs(d) > -lpun; }
  dispatch::CutRow row() const;
};

class CutError : public Error {
 public:
  using Error::Error;
};

// Lagrangian-gradient cut from one infeasible (scenario, period). The
// commitment coefficient of unit g is
//   -mu_upper p_max + mu_lower p_min + mu_rampdn (p_max - RD) + mu_rampup (p_max - RU)
// and the curtailable-capacity coefficient is -mu_tie, with duals in the mp
// convention. Throws CutError when every coefficient is zero. A positive
// coefficient on a unit that was off is kept but recorded as a warning.
Cut build_cut(const evolution::InfeasibleEntry& entry, const dispatch::DayAheadDecision& fixed,
              const model::SystemSpec& spec, int outer_iteration);

class CutSet {
 public:
  // False if a cut with the same (period, scenario, outer iteration) exists.
  bool add(Cut c);
  const std::vector<Cut>& cuts() const { return cuts_; }
  std::vector<dispatch::CutRow> rows() const;
  std::size_t size() const { return cuts_.size(); }

 private:
  std::vector<Cut> cuts_;
  std::set<std::tuple<int, int, int>> keys_;
};

struct OuterOptions {
  evolution::ClMode mode = evolution::ClMode::kFixEquality;
  int jobs = 1;
  std::optional<relax::HyperplaneSet> hyperplanes;  // skip the relaxation when given
};

struct OuterIteration {
  int iteration = 0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  int ccg_iterations = 0;
  bool subproblems_certified = true;
  int omega_size = 0;
  int cuts_added = 0;
  int cuts_total = 0;
  double max_lpun = 0.0;
  double objective = 0.0;
  std::vector<double> avg_imbalance;
};

enum class OuterStatus { kClosed, kNotClosed };

struct OuterReport {
  OuterStatus status = OuterStatus::kNotClosed;
  std::string note;
  relax::HyperplaneSet hyperplanes;
  dispatch::DayAheadDecision decision;   // last decision
  dispatch::DayAheadDecision initial;    // before any correction
  robust::CcgResult last_ccg;
  std::vector<robust::ScenarioVertex> omega_w;  // cumulative
  std::vector<evolution::ScenarioEvolution> before;  // first decision on the final Omega_W
  std::vector<evolution::ScenarioEvolution> after;   // last decision on the final Omega_W
  CutSet cuts;
  std::vector<OuterIteration> iterations;
  int separation_failures = 0;
};

// relaxation -> C&CG -> evolution over Omega_W -> cuts, until every
// scenario's punish cost is within lpun_tol or max_outer_iters is hit.
OuterReport outer_loop(const model::SystemSpec& spec, const OuterOptions& options = {});

}  // namespace ced::correction
