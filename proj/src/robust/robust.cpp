#include "ced/robust/robust.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "ced/mp/dual.hpp"
#include "ced/mp/lp.hpp"
#include "ced/mp/milp.hpp"

namespace ced::robust {

using dispatch::DayAheadDecision;
using dispatch::RenewableScenario;
using mp::RowSense;
using mp::VarKind;

namespace {

std::size_t at(int k) { return static_cast<std::size_t>(k); }

bool has_uncertainty(const model::SystemSpec& spec) {
  for (const auto& r : spec.renewables) {
    for (double h : r.half_width) {
      if (h > 0) return true;
    }
  }
  return false;
}

std::vector<std::string> cut_ids(std::span<const dispatch::CutRow> cuts) {
  std::vector<std::string> ids;
  for (const auto& c : cuts) ids.push_back(c.id);
  return ids;
}

struct MasterModel {
  mp::ProblemDef problem;
  dispatch::FirstStageIndex first;
  std::vector<dispatch::RecourseIndex> copies;
  int epigraph = -1;
};

MasterModel build_master(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                         std::span<const dispatch::CutRow> cuts, std::span<const ScenarioVertex> scenarios) {
  MasterModel m;
  m.first = dispatch::build_first_stage(spec, cuts, m.problem);
  m.epigraph = m.problem.add_var("epigraph", 0.0, mp::kInfinity, VarKind::kContinuous, 1.0);
  const dispatch::FirstStageRefs refs = m.first.refs();
  for (std::size_t k = 0; k < scenarios.size(); ++k) {
    const std::string tag = fmt::format("w{}_", k);
    m.copies.push_back(dispatch::build_recourse(spec, hps, refs, scenarios[k].values, tag, false, m.problem));
    std::vector<mp::Term> row{{m.epigraph, 1.0}};
    for (const mp::Term& t : m.copies.back().cost) row.push_back({t.var, -t.coef});
    m.problem.add_row(tag + "epigraph", row, RowSense::kGreaterEqual, 0.0);
  }
  return m;
}

bool master_feasible(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                     std::span<const dispatch::CutRow> cuts, std::span<const ScenarioVertex> scenarios) {
  MasterModel m = build_master(spec, hps, cuts, scenarios);
  mp::MilpOptions o;
  o.node_limit = spec.master_node_limit;
  const mp::MilpSolution s = mp::solve_milp(m.problem, o);
  return s.has_incumbent();
}

}  // namespace

int ScenarioVertex::deviations() const {
  int n = 0;
  for (const auto& row : sign) {
    for (int s : row) n += s != 0;
  }
  return n;
}

ScenarioVertex vertex_from_signs(const model::SystemSpec& spec, Grid<int> sign) {
  if (sign.size() != spec.renewables.size()) throw DomainError("scenario signs do not match the renewables");
  ScenarioVertex v;
  for (std::size_t r = 0; r < sign.size(); ++r) {
    const auto& ren = spec.renewables[r];
    if (sign[r].size() != at(spec.n_periods)) throw DomainError("scenario signs do not match the horizon");
    v.values.emplace_back();
    for (int k = 0; k < spec.n_periods; ++k) {
      v.values[r].push_back(ren.expected[at(k)] + sign[r][at(k)] * ren.half_width[at(k)]);
    }
  }
  v.sign = std::move(sign);
  return v;
}

ScenarioVertex expected_vertex(const model::SystemSpec& spec) {
  return vertex_from_signs(spec, Grid<int>(spec.renewables.size(), std::vector<int>(at(spec.n_periods), 0)));
}

MasterInfeasibleError::MasterInfeasibleError(std::vector<std::string> ids)
    : Error(ids.empty() ? std::string("master problem is infeasible without any cut")
                        : fmt::format("master problem is infeasible; conflicting cuts: {}", fmt::join(ids, ", "))),
      cut_ids_(std::move(ids)) {}

MasterResult master_solve(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                          std::span<const dispatch::CutRow> cuts, std::span<const ScenarioVertex> scenarios) {
  std::vector<ScenarioVertex> list(scenarios.begin(), scenarios.end());
  if (list.empty()) list.push_back(expected_vertex(spec));
  MasterModel m = build_master(spec, hps, cuts, list);
  mp::MilpOptions o;
  o.node_limit = spec.master_node_limit;
  const mp::MilpSolution s = mp::solve_milp(m.problem, o);
  if (!s.has_incumbent()) {
    if (s.status == mp::MilpStatus::kNodeLimit) {
      throw NumericalError("master problem found no incumbent within its node limit");
    }
    // Deletion filter: drop every cut that is not needed for infeasibility.
    std::vector<dispatch::CutRow> keep(cuts.begin(), cuts.end());
    if (keep.empty() || master_feasible(spec, hps, {}, list)) {
      if (keep.empty()) throw MasterInfeasibleError({});
      for (std::size_t i = 0; i < keep.size();) {
        std::vector<dispatch::CutRow> trial = keep;
        trial.erase(trial.begin() + static_cast<long>(i));
        if (!master_feasible(spec, hps, trial, list)) {
          keep = std::move(trial);
        } else {
          ++i;
        }
      }
      throw MasterInfeasibleError(cut_ids(keep));
    }
    throw MasterInfeasibleError({});
  }
  MasterResult r;
  r.decision = dispatch::extract_first_stage(spec, m.first, s.x);
  r.lower_bound = s.status == mp::MilpStatus::kOptimal ? s.objective : s.best_bound;
  r.first_stage_cost = dispatch::first_stage_cost(spec, r.decision);
  r.epigraph = s.x[at(m.epigraph)];
  for (const auto& c : m.copies) r.recourse.push_back(dispatch::extract_recourse(spec, c, s.x));
  r.nodes = s.nodes;
  return r;
}

double recourse_value(const model::SystemSpec& spec, const relax::HyperplaneSet& hps, const DayAheadDecision& fixed,
                      const RenewableScenario& scenario) {
  mp::ProblemDef p;
  dispatch::build_recourse(spec, hps, dispatch::constant_refs(fixed), scenario, "", true, p);
  const mp::LpSolution s = mp::solve_lp(p);
  if (s.status != mp::LpStatus::kOptimal) {
    throw NumericalError(fmt::format("recourse LP is {} for a fixed first stage", mp::to_string(s.status)));
  }
  return s.objective;
}

SubproblemResult subproblem_solve(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                  const DayAheadDecision& fixed) {
  SubproblemResult out;
  const std::size_t R = spec.renewables.size();
  const int T = spec.n_periods;
  if (!has_uncertainty(spec)) {
    out.vertex = expected_vertex(spec);
    out.value = out.heuristic_value = recourse_value(spec, hps, fixed, out.vertex.values);
    out.certified = true;
    return out;
  }
  const bool budgeted = spec.uncertainty_budget.has_value();
  const int budget = budgeted ? *spec.uncertainty_budget : R * T;

  // Local search over sign patterns for an incumbent.
  auto value_of = [&](const Grid<int>& sign) {
    return recourse_value(spec, hps, fixed, vertex_from_signs(spec, sign).values);
  };
  auto uncertain = [&](std::size_t r, int k) { return spec.renewables[r].half_width[at(k)] > 0; };
  Grid<int> best(R, std::vector<int>(at(T), 0));
  double best_value = -mp::kInfinity;
  std::vector<int> options = budgeted ? std::vector<int>{0, -1, 1} : std::vector<int>{-1, 1};
  if (!budgeted) {
    for (int start : {-1, 1}) {
      Grid<int> s(R, std::vector<int>(at(T), 0));
      for (std::size_t r = 0; r < R; ++r) {
        for (int k = 0; k < T; ++k) s[r][at(k)] = uncertain(r, k) ? start : 0;
      }
      const double v = value_of(s);
      if (v > best_value + 1e-9) {
        best_value = v;
        best = s;
      }
    }
  } else {
    best_value = value_of(best);
  }
  for (int pass = 0; pass < 4; ++pass) {
    bool improved = false;
    for (std::size_t r = 0; r < R; ++r) {
      for (int k = 0; k < T; ++k) {
        if (!uncertain(r, k)) continue;
        for (int o : options) {
          if (o == best[r][at(k)]) continue;
          Grid<int> trial = best;
          trial[r][at(k)] = o;
          if (budgeted && vertex_from_signs(spec, trial).deviations() > budget) continue;
          const double v = value_of(trial);
          if (v > best_value + 1e-9) {
            best_value = v;
            best = std::move(trial);
            improved = true;
          }
        }
      }
    }
    if (!improved) break;
  }
  out.heuristic_value = best_value;

  // Dualised recourse with renewable outputs at the box base point.
  RenewableScenario base(R);
  for (std::size_t r = 0; r < R; ++r) {
    for (int k = 0; k < T; ++k) {
      const auto& ren = spec.renewables[r];
      base[r].push_back(budgeted ? ren.expected[at(k)] : ren.expected[at(k)] - ren.half_width[at(k)]);
    }
  }
  mp::ProblemDef primal;
  const dispatch::RecourseIndex rec =
      dispatch::build_recourse(spec, hps, dispatch::constant_refs(fixed), base, "", true, primal);
  mp::ProblemDef sub;
  sub.set_sense(mp::ObjectiveSense::kMaximize);
  const mp::DualIndex dual = mp::append_dual(primal, "", sub);
  const double big_m = spec.punish_price;

  // product w = v * pi of a binary and a dual bounded by big_m
  auto product = [&](int v, int pi, const std::string& id, double weight) {
    const int w = sub.add_var("w_" + id, -big_m, big_m, VarKind::kContinuous, weight);
    sub.add_row("wv1_" + id, {{w, 1}, {v, -big_m}}, RowSense::kLessEqual, 0);
    sub.add_row("wv2_" + id, {{w, 1}, {v, big_m}}, RowSense::kGreaterEqual, 0);
    sub.add_row("wp1_" + id, {{w, 1}, {pi, -1}, {v, big_m}}, RowSense::kLessEqual, big_m);
    sub.add_row("wp2_" + id, {{w, 1}, {pi, -1}, {v, -big_m}}, RowSense::kGreaterEqual, -big_m);
  };
  Grid<int> up(R, std::vector<int>(at(T), -1)), down = up;
  std::vector<mp::Term> budget_row;
  for (std::size_t r = 0; r < R; ++r) {
    for (int k = 0; k < T; ++k) {
      if (!uncertain(r, k)) continue;
      const double h = spec.renewables[r].half_width[at(k)];
      const int pi = dual.fixed_dual[at(rec.p_ren[r][at(k)])];
      sub.set_bounds(pi, -big_m, big_m);
      const std::string id = fmt::format("{}_{}", spec.renewables[r].id, k + 1);
      if (!budgeted) {
        up[r][at(k)] = sub.add_var("v_" + id, 0, 1, VarKind::kBinary);
        product(up[r][at(k)], pi, id, 2 * h);
      } else {
        up[r][at(k)] = sub.add_var("vu_" + id, 0, 1, VarKind::kBinary);
        down[r][at(k)] = sub.add_var("vd_" + id, 0, 1, VarKind::kBinary);
        product(up[r][at(k)], pi, "u" + id, h);
        product(down[r][at(k)], pi, "d" + id, -h);
        sub.add_row("one_" + id, {{up[r][at(k)], 1}, {down[r][at(k)], 1}}, RowSense::kLessEqual, 1);
        budget_row.push_back({up[r][at(k)], 1});
        budget_row.push_back({down[r][at(k)], 1});
      }
    }
  }
  if (budgeted) sub.add_row("budget", budget_row, RowSense::kLessEqual, budget);

  mp::MilpOptions o;
  o.node_limit = spec.subproblem_node_limit;
  o.cutoff = best_value;
  const mp::MilpSolution s = mp::solve_milp(sub, o);
  out.nodes = s.nodes;
  out.certified = s.status != mp::MilpStatus::kNodeLimit;
  if (s.has_incumbent() && s.objective > best_value + 1e-9) {
    Grid<int> sign(R, std::vector<int>(at(T), 0));
    for (std::size_t r = 0; r < R; ++r) {
      for (int k = 0; k < T; ++k) {
        if (!uncertain(r, k)) continue;
        if (!budgeted) {
          sign[r][at(k)] = s.x[at(up[r][at(k)])] > 0.5 ? 1 : -1;
        } else {
          sign[r][at(k)] = (s.x[at(up[r][at(k)])] > 0.5 ? 1 : 0) - (s.x[at(down[r][at(k)])] > 0.5 ? 1 : 0);
        }
      }
    }
    const double check = value_of(sign);
    if (std::abs(check - s.objective) > 1e-6 * (1 + std::abs(check))) {
      throw NumericalError(fmt::format(
          "worst-case search value {:.6f} disagrees with the recourse LP {:.6f}; the dual bound needs a larger M",
          s.objective, check));
    }
    best = std::move(sign);
    best_value = check;
  }
  out.vertex = vertex_from_signs(spec, best);
  out.value = best_value;
  return out;
}

CcgCapError::CcgCapError(CcgState state)
    : Error(fmt::format("column-and-constraint generation stopped after {} iterations (LB {:.4f}, UB {:.4f})",
                        state.iteration, state.lower_bound, state.upper_bound)),
      state_(std::move(state)) {}

CcgResult ccg_loop(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                   std::span<const dispatch::CutRow> cuts) {
  CcgResult out;
  CcgState& st = out.state;
  st.scenarios.push_back(expected_vertex(spec));
  st.lower_bound = -mp::kInfinity;
  st.upper_bound = mp::kInfinity;
  while (true) {
    ++st.iteration;
    MasterResult m = master_solve(spec, hps, cuts, st.scenarios);
    st.lower_bound = std::max(st.lower_bound, m.lower_bound);
    st.incumbent = m.decision;
    const SubproblemResult sub = subproblem_solve(spec, hps, m.decision);
    st.upper_bound = std::min(st.upper_bound, m.first_stage_cost + sub.value);
    st.log.push_back({st.iteration, st.lower_bound, st.upper_bound, sub.value, sub.certified,
                      static_cast<int>(st.scenarios.size())});
    if (std::find(out.omega_w.begin(), out.omega_w.end(), sub.vertex) == out.omega_w.end()) {
      out.omega_w.push_back(sub.vertex);
    }
    out.master = std::move(m);
    const bool known = std::find(st.scenarios.begin(), st.scenarios.end(), sub.vertex) != st.scenarios.end();
    // A vertex already in the master cannot raise the bound any further.
    if (st.upper_bound - st.lower_bound <= spec.ccg_gap_tol * (1 + std::abs(st.upper_bound)) || known) {
      st.converged = true;
      break;
    }
    if (st.iteration >= spec.ccg_max_iters) throw CcgCapError(st);
    st.scenarios.push_back(sub.vertex);
  }
  out.decision = st.incumbent;
  return out;
}

std::vector<std::filesystem::path> write_scenarios(const model::SystemSpec& spec,
                                                   std::span<const ScenarioVertex> scenarios,
                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> files;
  nlohmann::json manifest = {{"count", scenarios.size()}, {"files", nlohmann::json::array()}};
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const std::string name = fmt::format("scenario_{:03d}.csv", i + 1);
    std::ofstream out(dir / name);
    out << "renewable,t,sign,p_mw\n";
    for (std::size_t r = 0; r < spec.renewables.size(); ++r) {
      for (int k = 0; k < spec.n_periods; ++k) {
        out << fmt::format("{},{},{},{:.6f}\n", spec.renewables[r].id, k + 1, scenarios[i].sign[r][at(k)],
                           scenarios[i].values[r][at(k)]);
      }
    }
    files.push_back(dir / name);
    manifest["files"].push_back({{"file", name}, {"deviations", scenarios[i].deviations()}});
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  files.push_back(dir / "manifest.json");
  return files;
}

std::vector<ScenarioVertex> read_scenarios(const model::SystemSpec& spec, const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError((dir / "manifest.json").string(), "cannot open scenario manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((dir / "manifest.json").string(), e.what());
  }
  std::vector<ScenarioVertex> out;
  for (const auto& f : manifest.at("files")) {
    const std::filesystem::path path = dir / f.at("file").get<std::string>();
    std::ifstream csv(path);
    if (!csv) throw ConfigError(path.string(), "cannot open scenario file");
    Grid<int> sign(spec.renewables.size(), std::vector<int>(at(spec.n_periods), 0));
    std::string line;
    std::getline(csv, line);
    int count = 0, lineno = 1;
    while (std::getline(csv, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, t, s;
      std::getline(ss, id, ',');
      std::getline(ss, t, ',');
      std::getline(ss, s, ',');
      std::size_t r = 0;
      while (r < spec.renewables.size() && spec.renewables[r].id != id) ++r;
      int k = 0, v = 0;
      try {
        k = std::stoi(t);
        v = std::stoi(s);
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}:{}", path.string(), lineno), "malformed row");
      }
      if (r == spec.renewables.size() || k < 1 || k > spec.n_periods || v < -1 || v > 1) {
        throw ConfigError(fmt::format("{}:{}", path.string(), lineno), "row does not match the system");
      }
      sign[r][at(k - 1)] = v;
      ++count;
    }
    if (count != static_cast<int>(spec.renewables.size()) * spec.n_periods) {
      throw ConfigError(path.string(), fmt::format("expected {} rows, found {}",
                                                   spec.renewables.size() * at(spec.n_periods), count));
    }
    out.push_back(vertex_from_signs(spec, std::move(sign)));
  }
  return out;
}

}  // namespace ced::robust
