#include "ced/correction/correction.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ced::correction {

namespace {

std::size_t at(int k) { return static_cast<std::size_t>(k); }

std::vector<dispatch::RenewableScenario> values_of(const std::vector<robust::ScenarioVertex>& v) {
  std::vector<dispatch::RenewableScenario> out;
  for (const auto& s : v) out.push_back(s.values);
  return out;
}

}  // namespace

std::string Cut::id() const { return fmt::format("cut_k{}_w{}_t{}", outer_iteration, scenario, period); }

double Cut::lhs(const dispatch::DayAheadDecision& d) const {
  const std::size_t k = at(period - 1);
  double v = 0;
  for (std::size_t g = 0; g < commit_coef.size(); ++g) v += commit_coef[g] * (d.commit[g][k] - commit_ref[g]);
  for (std::size_t c = 0; c < cl_coef.size(); ++c) v += cl_coef[c] * (d.cl_cap[c][k] - cl_ref[c]);
  return v;
}

dispatch::CutRow Cut::row() const {
  dispatch::CutRow r;
  r.id = id();
  r.period = period;
  r.commit_coef = commit_coef;
  r.cl_coef = cl_coef;
  r.rhs = -lpun;
  for (std::size_t g = 0; g < commit_coef.size(); ++g) r.rhs += commit_coef[g] * commit_ref[g];
  for (std::size_t c = 0; c < cl_coef.size(); ++c) r.rhs += cl_coef[c] * cl_ref[c];
  return r;
}

Cut build_cut(const evolution::InfeasibleEntry& entry, const dispatch::DayAheadDecision& fixed,
              const model::SystemSpec& spec, int outer_iteration) {
  Cut c;
  c.period = entry.t;
  c.scenario = entry.scenario;
  c.outer_iteration = outer_iteration;
  c.lpun = entry.lpun;
  c.provenance = entry.duals;
  const std::size_t k = at(entry.t - 1);
  const evolution::DualBundle& d = entry.duals;
  bool any = false;
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const auto& gen = spec.generators[g];
    const double a = -d.output_upper[g] * gen.p_max + d.output_lower[g] * gen.p_min +
                     d.ramp_down[g] * (gen.p_max - gen.ramp_down) + d.ramp_up[g] * (gen.p_max - gen.ramp_up);
    c.commit_coef.push_back(a);
    c.commit_ref.push_back(fixed.commit[g][k]);
    any = any || a != 0.0;
    if (fixed.commit[g][k] == 0 && a > 0) {
      c.warnings.push_back(fmt::format("committing {} would raise the predicted punish cost", gen.id));
    }
  }
  for (std::size_t l = 0; l < spec.cl_loads.size(); ++l) {
    // The tie row p_c - cap (= or <=) 0 enters the Lagrangian as
    // mu (p_c - cap), so its capacity gradient is -mu.
    const double b = -d.cl_tie[l];
    c.cl_coef.push_back(b);
    c.cl_ref.push_back(fixed.cl_cap[l][k]);
    any = any || b != 0.0;
  }
  if (!any) {
    throw CutError(fmt::format("all cut coefficients vanish for scenario {} period {} (punish cost {:.6g})",
                               entry.scenario, entry.t, entry.lpun));
  }
  return c;
}

bool CutSet::add(Cut c) {
  if (!keys_.insert({c.period, c.scenario, c.outer_iteration}).second) return false;
  cuts_.push_back(std::move(c));
  return true;
}

std::vector<dispatch::CutRow> CutSet::rows() const {
  std::vector<dispatch::CutRow> out;
  for (const Cut& c : cuts_) out.push_back(c.row());
  return out;
}

OuterReport outer_loop(const model::SystemSpec& spec, const OuterOptions& options) {
  OuterReport rep;
  rep.hyperplanes = options.hyperplanes ? *options.hyperplanes : relax::algorithm1(spec);

  for (int k = 1; k <= spec.max_outer_iters; ++k) {
    robust::CcgResult ccg = robust::ccg_loop(spec, rep.hyperplanes, rep.cuts.rows());
    for (const auto& v : ccg.omega_w) {
      if (std::find(rep.omega_w.begin(), rep.omega_w.end(), v) == rep.omega_w.end()) rep.omega_w.push_back(v);
    }
    if (k == 1) rep.initial = ccg.decision;
    rep.decision = ccg.decision;

    const auto scenarios = values_of(rep.omega_w);
    rep.after = evolution::evolve_all(spec, rep.hyperplanes, rep.decision, scenarios, options.mode, options.jobs);
    const auto bad = evolution::collect_infeasible(rep.after, spec.lpun_tol);

    OuterIteration it;
    it.iteration = k;
    it.lower_bound = ccg.state.lower_bound;
    it.upper_bound = ccg.state.upper_bound;
    it.ccg_iterations = ccg.state.iteration;
    for (const auto& l : ccg.state.log) it.subproblems_certified = it.subproblems_certified && l.certified;
    it.omega_size = static_cast<int>(rep.omega_w.size());
    it.objective = ccg.master.lower_bound;
    it.avg_imbalance = evolution::average_imbalance(spec, rep.after);
    for (const auto& e : rep.after) it.max_lpun = std::max(it.max_lpun, e.max_lpun());
    rep.last_ccg = std::move(ccg);

    bool errored = false;
    for (const auto& e : rep.after) errored = errored || e.errored;
    if (errored) {
      rep.iterations.push_back(it);
      rep.note = "an evolution LP failed";
      break;
    }
    if (bad.empty()) {
      it.cuts_total = static_cast<int>(rep.cuts.size());
      rep.iterations.push_back(it);
      rep.status = OuterStatus::kClosed;
      break;
    }
    for (const auto& entry : bad) {
      Cut c = build_cut(entry, rep.decision, spec, k);
      if (!c.violated_by(rep.decision)) ++rep.separation_failures;
      if (rep.cuts.add(std::move(c))) ++it.cuts_added;
    }
    it.cuts_total = static_cast<int>(rep.cuts.size());
    rep.iterations.push_back(it);
    if (k == spec.max_outer_iters) rep.note = "outer iteration cap reached with residual punish cost";
  }
  rep.before = evolution::evolve_all(spec, rep.hyperplanes, rep.initial, values_of(rep.omega_w), options.mode,
                                     options.jobs);
  return rep;
}

}  // namespace ced::correction
