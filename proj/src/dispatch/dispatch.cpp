#include "ced/dispatch/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "ced/error.hpp"
#include "ced/sfr/sfr.hpp"

namespace ced::dispatch {

using mp::RowSense;
using mp::Term;
using mp::VarKind;

namespace {

template <class T>
Grid<T> grid(std::size_t rows, int cols, T fill = T{}) {
  return Grid<T>(rows, std::vector<T>(static_cast<std::size_t>(cols), fill));
}

std::size_t at(int k) { return static_cast<std::size_t>(k); }

// Solver noise below this is reported as exact zero.
double clean(double v) { return std::abs(v) < 1e-9 ? 0.0 : v; }

// Adds coef * ref to a row, moving constants to the right-hand side.
void add_ref(std::vector<Term>& terms, double& rhs, const Ref& ref, double coef) {
  if (ref.is_var()) {
    terms.push_back({ref.var, coef});
  } else {
    rhs -= coef * ref.value;
  }
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

double initial_output(const model::GeneratorSpec& g) { return g.initial_on ? g.p_min : 0.0; }

Grid<int> DayAheadDecision::on_duration() const {
  Grid<int> out = commit;
  for (auto& row : out) {
    int run = 0;
    for (int& v : row) v = run = v ? run + 1 : 0;
  }
  return out;
}

Grid<int> DayAheadDecision::off_duration() const {
  Grid<int> out = commit;
  for (auto& row : out) {
    int run = 0;
    for (int& v : row) v = run = v ? 0 : run + 1;
  }
  return out;
}

double CostBreakdown::total_sa() const { return sum(l_sa); }
double CostBreakdown::total_si() const { return sum(l_si); }
double CostBreakdown::total_es() const { return sum(l_es); }
double CostBreakdown::total_fqr() const { return sum(l_fqr); }
double CostBreakdown::total_cl() const { return sum(l_cl); }
double CostBreakdown::total_pun() const { return sum(l_pun); }
double CostBreakdown::total() const {
  return total_sa() + total_si() + total_es() + total_fqr() + total_cl() + total_pun();
}

RenewableScenario expected_scenario(const model::SystemSpec& spec) {
  RenewableScenario s;
  for (const auto& r : spec.renewables) s.push_back(r.expected);
  return s;
}

FirstStageRefs constant_refs(const DayAheadDecision& d) {
  FirstStageRefs r;
  auto lift = [](const auto& g) {
    Grid<Ref> out;
    for (const auto& row : g) {
      out.emplace_back();
      for (auto v : row) out.back().push_back(Ref{-1, static_cast<double>(v)});
    }
    return out;
  };
  r.commit = lift(d.commit);
  r.fqr_cap = lift(d.fqr_cap);
  r.cl_cap = lift(d.cl_cap);
  return r;
}

FirstStageRefs FirstStageIndex::refs() const {
  auto lift = [](const Grid<int>& g) {
    Grid<Ref> out;
    for (const auto& row : g) {
      out.emplace_back();
      for (int v : row) out.back().push_back(Ref{v, 0.0});
    }
    return out;
  };
  return {lift(commit), lift(fqr_cap), lift(cl_cap)};
}

FirstStageIndex build_first_stage(const model::SystemSpec& spec, std::span<const CutRow> cuts, mp::ProblemDef& p) {
  const int T = spec.n_periods;
  const std::size_t G = spec.generators.size();
  FirstStageIndex idx;
  idx.commit = grid<int>(G, T);
  idx.startup = grid<int>(G, T);
  idx.shutdown = grid<int>(G, T);

  for (std::size_t g = 0; g < G; ++g) {
    const auto& gen = spec.generators[g];
    for (int k = 0; k < T; ++k) {
      idx.commit[g][at(k)] = p.add_var(fmt::format("x_{}_{}", gen.id, k + 1), 0, 1, VarKind::kBinary);
      idx.startup[g][at(k)] = p.add_var(fmt::format("y_{}_{}", gen.id, k + 1), 0, 1, VarKind::kBinary, gen.cost_up);
      idx.shutdown[g][at(k)] =
          p.add_var(fmt::format("z_{}_{}", gen.id, k + 1), 0, 1, VarKind::kBinary, gen.cost_down);
    }
    for (int k = 0; k < T; ++k) {
      const int x = idx.commit[g][at(k)], y = idx.startup[g][at(k)], z = idx.shutdown[g][at(k)];
      std::vector<Term> link{{y, 1}, {z, -1}, {x, -1}};
      double rhs = 0;
      if (k > 0) {
        link.push_back({idx.commit[g][at(k - 1)], 1});
      } else {
        rhs = gen.initial_on ? -1.0 : 0.0;
      }
      p.add_row(fmt::format("startstop_{}_{}", gen.id, k + 1), link, RowSense::kEqual, rhs);
      p.add_row(fmt::format("onestate_{}_{}", gen.id, k + 1), {{y, 1}, {z, 1}}, RowSense::kLessEqual, 1);

      if (gen.t_on_min > 1) {
        std::vector<Term> up{{x, -1}};
        for (int s = std::max(0, k - gen.t_on_min + 1); s <= k; ++s) up.push_back({idx.startup[g][at(s)], 1});
        p.add_row(fmt::format("minup_{}_{}", gen.id, k + 1), up, RowSense::kLessEqual, 0);
      }
      if (gen.t_off_min > 1) {
        std::vector<Term> dn{{x, 1}};
        for (int s = std::max(0, k - gen.t_off_min + 1); s <= k; ++s) dn.push_back({idx.shutdown[g][at(s)], 1});
        p.add_row(fmt::format("mindown_{}_{}", gen.id, k + 1), dn, RowSense::kLessEqual, 1);
      }
    }
  }

  auto caps = [&](const std::vector<model::FlexLoadSpec>& loads, const char* tag) {
    Grid<int> out = grid<int>(loads.size(), T);
    for (std::size_t b = 0; b < loads.size(); ++b) {
      for (int k = 0; k < T; ++k) {
        const double hi = model::cap_upper(spec, loads[b], k + 1);
        out[b][at(k)] = p.add_var(fmt::format("{}_{}_{}", tag, loads[b].id, k + 1), std::min(loads[b].cap_min, hi),
                                  hi, VarKind::kContinuous, loads[b].cost);
      }
    }
    return out;
  };
  idx.fqr_cap = caps(spec.fqr_loads, "capb");
  idx.cl_cap = caps(spec.cl_loads, "capc");

  for (const CutRow& c : cuts) {
    if (c.period < 1 || c.period > T || c.commit_coef.size() != G || c.cl_coef.size() != spec.cl_loads.size()) {
      throw DomainError(fmt::format("cut {} does not match the system shape", c.id));
    }
    const std::size_t k = at(c.period - 1);
    std::vector<Term> terms;
    for (std::size_t g = 0; g < G; ++g) terms.push_back({idx.commit[g][k], c.commit_coef[g]});
    for (std::size_t l = 0; l < spec.cl_loads.size(); ++l) terms.push_back({idx.cl_cap[l][k], c.cl_coef[l]});
    idx.cut_rows.push_back(p.add_row(c.id, terms, RowSense::kLessEqual, c.rhs));
  }
  return idx;
}

FrequencyRow frequency_row(const model::SystemSpec& spec, const relax::Hyperplane& h, int t) {
  const double scale = spec.max_deviation_pu() * spec.b_base;
  FrequencyRow row;
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const sfr::AlphaVector u = sfr::unit_contribution(spec, static_cast<int>(g));
    double c = 0;
    for (int i = 0; i < 4; ++i) c += h.gradient[at(i)] * u[i];
    row.commit_coef.push_back(scale * c);
  }
  row.rhs = scale * h.intercept() - model::delta_p(spec, t);
  return row;
}

RecourseIndex build_recourse(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                             const FirstStageRefs& first, const RenewableScenario& scenario, const std::string& tag,
                             bool price_in_objective, mp::ProblemDef& p) {
  const int T = spec.n_periods;
  const std::size_t G = spec.generators.size(), R = spec.renewables.size(), E = spec.storages.size(),
                    B = spec.fqr_loads.size(), C = spec.cl_loads.size();
  if (scenario.size() != R) throw DomainError("scenario has the wrong number of renewables");
  RecourseIndex idx;
  idx.p_gen = grid<int>(G, T);
  idx.p_ren = grid<int>(R, T);
  idx.charge = grid<int>(E, T);
  idx.discharge = grid<int>(E, T);
  idx.soc = grid<int>(E, T);
  idx.p_fqr = grid<int>(B, T);
  idx.p_cl = grid<int>(C, T);
  idx.freq_rows = grid<int>(hps.planes.size(), T);

  auto var = [&](std::string id, double lo, double hi, double cost) {
    const int j = p.add_var(tag + id, lo, hi, VarKind::kContinuous, price_in_objective ? cost : 0.0);
    if (cost != 0.0) idx.cost.push_back({j, cost});
    return j;
  };

  for (int k = 0; k < T; ++k) {
    const int t = k + 1;
    for (std::size_t g = 0; g < G; ++g) {
      const auto& gen = spec.generators[g];
      idx.p_gen[g][at(k)] = var(fmt::format("p_{}_{}", gen.id, t), 0, gen.p_max, gen.cost_energy);
    }
    for (std::size_t r = 0; r < R; ++r) {
      if (scenario[r].size() != at(T)) throw DomainError("scenario has the wrong number of periods");
      const double v = scenario[r][at(k)];
      idx.p_ren[r][at(k)] = var(fmt::format("pr_{}_{}", spec.renewables[r].id, t), v, v, 0.0);
    }
    for (std::size_t e = 0; e < E; ++e) {
      const auto& st = spec.storages[e];
      idx.charge[e][at(k)] = var(fmt::format("ch_{}_{}", st.id, t), 0, st.p_max, st.cost_throughput);
      idx.discharge[e][at(k)] = var(fmt::format("dc_{}_{}", st.id, t), 0, st.p_max, st.cost_throughput);
      idx.soc[e][at(k)] = var(fmt::format("soc_{}_{}", st.id, t), st.e_min, st.e_max, 0.0);
    }
    for (std::size_t b = 0; b < B; ++b) {
      idx.p_fqr[b][at(k)] = var(fmt::format("pb_{}_{}", spec.fqr_loads[b].id, t), 0,
                                model::cap_upper(spec, spec.fqr_loads[b], t), 0.0);
    }
    for (std::size_t c = 0; c < C; ++c) {
      idx.p_cl[c][at(k)] =
          var(fmt::format("pc_{}_{}", spec.cl_loads[c].id, t), 0, model::cap_upper(spec, spec.cl_loads[c], t), 0.0);
    }
    idx.slack_up.push_back(var(fmt::format("sup_{}", t), 0, mp::kInfinity, spec.punish_price));
    idx.slack_down.push_back(var(fmt::format("sdn_{}", t), 0, mp::kInfinity, spec.punish_price));
  }

  for (int k = 0; k < T; ++k) {
    const int t = k + 1;
    for (std::size_t g = 0; g < G; ++g) {
      const auto& gen = spec.generators[g];
      const int pg = idx.p_gen[g][at(k)];
      const Ref& xk = first.commit[g][at(k)];
      {
        std::vector<Term> lo{{pg, 1}};
        double rhs = 0;
        add_ref(lo, rhs, xk, -gen.p_min);
        p.add_row(fmt::format("{}pmin_{}_{}", tag, gen.id, t), lo, RowSense::kGreaterEqual, rhs);
        std::vector<Term> hi{{pg, 1}};
        rhs = 0;
        add_ref(hi, rhs, xk, -gen.p_max);
        p.add_row(fmt::format("{}pmax_{}_{}", tag, gen.id, t), hi, RowSense::kLessEqual, rhs);
      }
      // p_{t-1} - p_t <= RD x_t + pmax (1 - x_t)
      {
        std::vector<Term> dn{{pg, -1}};
        double rhs = gen.p_max;
        if (k > 0) {
          dn.push_back({idx.p_gen[g][at(k - 1)], 1});
        } else {
          rhs -= initial_output(gen);
        }
        add_ref(dn, rhs, xk, gen.p_max - gen.ramp_down);
        p.add_row(fmt::format("{}rampdn_{}_{}", tag, gen.id, t), dn, RowSense::kLessEqual, rhs);
      }
      // p_t - p_{t-1} <= RU x_{t-1} + pmax (1 - x_{t-1})
      {
        std::vector<Term> up{{pg, 1}};
        double rhs = gen.p_max;
        if (k > 0) {
          up.push_back({idx.p_gen[g][at(k - 1)], -1});
          add_ref(up, rhs, first.commit[g][at(k - 1)], gen.p_max - gen.ramp_up);
        } else {
          rhs += initial_output(gen) - (gen.initial_on ? gen.p_max - gen.ramp_up : 0.0);
        }
        p.add_row(fmt::format("{}rampup_{}_{}", tag, gen.id, t), up, RowSense::kLessEqual, rhs);
      }
    }
    for (std::size_t e = 0; e < E; ++e) {
      const auto& st = spec.storages[e];
      std::vector<Term> bal{{idx.soc[e][at(k)], 1},
                            {idx.charge[e][at(k)], -st.eta_ch},
                            {idx.discharge[e][at(k)], 1.0 / st.eta_dc}};
      double rhs = 0;
      if (k > 0) {
        bal.push_back({idx.soc[e][at(k - 1)], -1});
      } else {
        rhs = st.e_init;
      }
      p.add_row(fmt::format("{}soc_{}_{}", tag, st.id, t), bal, RowSense::kEqual, rhs);
      if (k == T - 1) {
        p.add_row(fmt::format("{}socend_{}", tag, st.id), {{idx.soc[e][at(k)], 1}}, RowSense::kGreaterEqual, st.e_init);
      }
    }
    for (std::size_t b = 0; b < B; ++b) {
      std::vector<Term> row{{idx.p_fqr[b][at(k)], 1}};
      double rhs = 0;
      add_ref(row, rhs, first.fqr_cap[b][at(k)], -1);
      p.add_row(fmt::format("{}pbcap_{}_{}", tag, spec.fqr_loads[b].id, t), row, RowSense::kLessEqual, rhs);
    }
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<Term> row{{idx.p_cl[c][at(k)], 1}};
      double rhs = 0;
      add_ref(row, rhs, first.cl_cap[c][at(k)], -1);
      p.add_row(fmt::format("{}pccap_{}_{}", tag, spec.cl_loads[c].id, t), row, RowSense::kLessEqual, rhs);
    }

    std::vector<Term> bal;
    for (std::size_t g = 0; g < G; ++g) bal.push_back({idx.p_gen[g][at(k)], 1});
    for (std::size_t r = 0; r < R; ++r) bal.push_back({idx.p_ren[r][at(k)], 1});
    for (std::size_t e = 0; e < E; ++e) {
      bal.push_back({idx.discharge[e][at(k)], 1});
      bal.push_back({idx.charge[e][at(k)], -1});
    }
    for (std::size_t c = 0; c < C; ++c) bal.push_back({idx.p_cl[c][at(k)], 1});
    bal.push_back({idx.slack_up[at(k)], 1});
    bal.push_back({idx.slack_down[at(k)], -1});
    idx.balance_rows.push_back(
        p.add_row(fmt::format("{}balance_{}", tag, t), bal, RowSense::kEqual, model::total_demand(spec, t)));

    for (std::size_t h = 0; h < hps.planes.size(); ++h) {
      const FrequencyRow fr = frequency_row(spec, hps.planes[h], t);
      std::vector<Term> row;
      double rhs = fr.rhs;
      for (std::size_t b = 0; b < B; ++b) row.push_back({idx.p_fqr[b][at(k)], -1});
      for (std::size_t g = 0; g < G; ++g) add_ref(row, rhs, first.commit[g][at(k)], -fr.commit_coef[g]);
      idx.freq_rows[h][at(k)] =
          p.add_row(fmt::format("{}freq_{}_{}", tag, hps.planes[h].id, t), row, RowSense::kLessEqual, rhs);
    }
  }
  return idx;
}

DeterministicModel build_deterministic(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                       const RenewableScenario& scenario, std::span<const CutRow> cuts) {
  DeterministicModel m;
  m.first = build_first_stage(spec, cuts, m.problem);
  m.recourse = build_recourse(spec, hps, m.first.refs(), scenario, "", true, m.problem);
  return m;
}

DayAheadDecision extract_first_stage(const model::SystemSpec& spec, const FirstStageIndex& idx,
                                     const std::vector<double>& x) {
  (void)spec;
  auto ints = [&](const Grid<int>& g) {
    Grid<int> out;
    for (const auto& row : g) {
      out.emplace_back();
      for (int j : row) out.back().push_back(x[at(j)] > 0.5 ? 1 : 0);
    }
    return out;
  };
  auto reals = [&](const Grid<int>& g) {
    Grid<double> out;
    for (const auto& row : g) {
      out.emplace_back();
      for (int j : row) out.back().push_back(clean(x[at(j)]));
    }
    return out;
  };
  return {ints(idx.commit), ints(idx.startup), ints(idx.shutdown), reals(idx.fqr_cap), reals(idx.cl_cap)};
}

RecourseDecision extract_recourse(const model::SystemSpec& spec, const RecourseIndex& idx,
                                  const std::vector<double>& x) {
  (void)spec;
  auto reals = [&](const Grid<int>& g) {
    Grid<double> out;
    for (const auto& row : g) {
      out.emplace_back();
      for (int j : row) out.back().push_back(clean(x[at(j)]));
    }
    return out;
  };
  RecourseDecision r{reals(idx.p_gen), reals(idx.p_ren), reals(idx.charge), reals(idx.discharge),
                     reals(idx.soc),   reals(idx.p_fqr), reals(idx.p_cl),   {},
                     {}};
  for (int j : idx.slack_up) r.slack_up.push_back(clean(x[at(j)]));
  for (int j : idx.slack_down) r.slack_down.push_back(clean(x[at(j)]));
  return r;
}

CostBreakdown cost_terms(const model::SystemSpec& spec, const DayAheadDecision& d, const RecourseDecision& r) {
  const int T = spec.n_periods;
  CostBreakdown c;
  for (int k = 0; k < T; ++k) {
    double sa = 0, si = 0, es = 0, fqr = 0, cl = 0;
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
      sa += spec.generators[g].cost_up * d.startup[g][at(k)] + spec.generators[g].cost_down * d.shutdown[g][at(k)];
      si += spec.generators[g].cost_energy * r.p_gen[g][at(k)];
    }
    for (std::size_t e = 0; e < spec.storages.size(); ++e) {
      es += spec.storages[e].cost_throughput * (r.charge[e][at(k)] + r.discharge[e][at(k)]);
    }
    for (std::size_t b = 0; b < spec.fqr_loads.size(); ++b) fqr += spec.fqr_loads[b].cost * d.fqr_cap[b][at(k)];
    for (std::size_t l = 0; l < spec.cl_loads.size(); ++l) cl += spec.cl_loads[l].cost * d.cl_cap[l][at(k)];
    c.l_sa.push_back(sa);
    c.l_si.push_back(si);
    c.l_es.push_back(es);
    c.l_fqr.push_back(fqr);
    c.l_cl.push_back(cl);
    c.l_pun.push_back(spec.punish_price * (r.slack_up[at(k)] + r.slack_down[at(k)]));
  }
  return c;
}

double first_stage_cost(const model::SystemSpec& spec, const DayAheadDecision& d) {
  double total = 0;
  for (int k = 0; k < spec.n_periods; ++k) {
    for (std::size_t g = 0; g < spec.generators.size(); ++g) {
      total += spec.generators[g].cost_up * d.startup[g][at(k)] + spec.generators[g].cost_down * d.shutdown[g][at(k)];
    }
    for (std::size_t b = 0; b < spec.fqr_loads.size(); ++b) total += spec.fqr_loads[b].cost * d.fqr_cap[b][at(k)];
    for (std::size_t l = 0; l < spec.cl_loads.size(); ++l) total += spec.cl_loads[l].cost * d.cl_cap[l][at(k)];
  }
  return total;
}

std::vector<std::string> check_constraints(const model::SystemSpec& spec, const relax::HyperplaneSet& hps,
                                           const DayAheadDecision& d, const RecourseDecision& r,
                                           const RenewableScenario& scenario, double tol) {
  std::vector<std::string> bad;
  auto need = [&](bool ok, std::string what) {
    if (!ok) bad.push_back(std::move(what));
  };
  const int T = spec.n_periods;
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    const auto& gen = spec.generators[g];
    int prev = gen.initial_on ? 1 : 0;
    double prev_p = initial_output(gen);
    int run_on = 0, run_off = 0;
    bool first_run = true;
    for (int k = 0; k < T; ++k) {
      const int t = k + 1;
      const int x = d.commit[g][at(k)];
      const double pg = r.p_gen[g][at(k)];
      need(d.startup[g][at(k)] - d.shutdown[g][at(k)] == x - prev, fmt::format("start/stop of {} at {}", gen.id, t));
      need(pg >= gen.p_min * x - tol && pg <= gen.p_max * x + tol, fmt::format("output of {} at {}", gen.id, t));
      need(prev_p - pg <= gen.ramp_down * x + gen.p_max * (1 - x) + tol, fmt::format("ramp down of {} at {}", gen.id, t));
      need(pg - prev_p <= gen.ramp_up * prev + gen.p_max * (1 - prev) + tol, fmt::format("ramp up of {} at {}", gen.id, t));
      // A completed run shorter than its minimum is a violation; runs in
      // progress from the initial state carry no obligation.
      if (x != prev) {
        if (prev == 1 && !(first_run && gen.initial_on) && run_on < gen.t_on_min) {
          bad.push_back(fmt::format("minimum up time of {} ending at {}", gen.id, t - 1));
        }
        if (prev == 0 && !(first_run && !gen.initial_on) && run_off < gen.t_off_min) {
          bad.push_back(fmt::format("minimum down time of {} ending at {}", gen.id, t - 1));
        }
        first_run = false;
        run_on = run_off = 0;
      }
      (x ? run_on : run_off) += 1;
      prev = x;
      prev_p = pg;
    }
  }
  for (std::size_t e = 0; e < spec.storages.size(); ++e) {
    const auto& st = spec.storages[e];
    double soc = st.e_init;
    for (int k = 0; k < T; ++k) {
      const double ch = r.charge[e][at(k)], dc = r.discharge[e][at(k)];
      need(ch >= -tol && ch <= st.p_max + tol && dc >= -tol && dc <= st.p_max + tol,
           fmt::format("storage power of {} at {}", st.id, k + 1));
      soc += st.eta_ch * ch - dc / st.eta_dc;
      need(std::abs(soc - r.soc[e][at(k)]) <= tol, fmt::format("state of charge chain of {} at {}", st.id, k + 1));
      need(r.soc[e][at(k)] >= st.e_min - tol && r.soc[e][at(k)] <= st.e_max + tol,
           fmt::format("state of charge bounds of {} at {}", st.id, k + 1));
    }
    need(r.soc[e][at(T - 1)] >= st.e_init - tol, fmt::format("terminal state of charge of {}", st.id));
  }
  for (int k = 0; k < T; ++k) {
    const int t = k + 1;
    double supply = r.slack_up[at(k)] - r.slack_down[at(k)];
    need(r.slack_up[at(k)] >= -tol && r.slack_down[at(k)] >= -tol, fmt::format("negative slack at {}", t));
    for (std::size_t g = 0; g < spec.generators.size(); ++g) supply += r.p_gen[g][at(k)];
    for (std::size_t i = 0; i < spec.renewables.size(); ++i) {
      need(std::abs(r.p_ren[i][at(k)] - scenario[i][at(k)]) <= tol, fmt::format("renewable output at {}", t));
      supply += r.p_ren[i][at(k)];
    }
    for (std::size_t e = 0; e < spec.storages.size(); ++e) supply += r.discharge[e][at(k)] - r.charge[e][at(k)];
    double fqr = 0;
    for (std::size_t b = 0; b < spec.fqr_loads.size(); ++b) {
      const auto& l = spec.fqr_loads[b];
      const double cap = d.fqr_cap[b][at(k)];
      need(cap >= std::min(l.cap_min, model::cap_upper(spec, l, t)) - tol && cap <= model::cap_upper(spec, l, t) + tol,
           fmt::format("regulation capacity of {} at {}", l.id, t));
      need(r.p_fqr[b][at(k)] >= -tol && r.p_fqr[b][at(k)] <= cap + tol,
           fmt::format("regulation power of {} at {}", l.id, t));
      fqr += r.p_fqr[b][at(k)];
    }
    for (std::size_t c = 0; c < spec.cl_loads.size(); ++c) {
      const auto& l = spec.cl_loads[c];
      const double cap = d.cl_cap[c][at(k)];
      need(cap >= std::min(l.cap_min, model::cap_upper(spec, l, t)) - tol && cap <= model::cap_upper(spec, l, t) + tol,
           fmt::format("curtailable capacity of {} at {}", l.id, t));
      need(r.p_cl[c][at(k)] >= -tol && r.p_cl[c][at(k)] <= cap + tol,
           fmt::format("curtailed power of {} at {}", l.id, t));
      supply += r.p_cl[c][at(k)];
    }
    need(std::abs(supply - model::total_demand(spec, t)) <= tol * std::max(1.0, model::total_demand(spec, t)),
         fmt::format("power balance at {}", t));

    std::vector<double> x(spec.generators.size());
    for (std::size_t g = 0; g < x.size(); ++g) x[g] = d.commit[g][at(k)];
    const sfr::AlphaVector a = sfr::aggregate(x, spec);
    const double lhs = (model::delta_p(spec, t) - fqr) / spec.b_base;
    for (const auto& h : hps.planes) {
      need(lhs <= spec.max_deviation_pu() * h.eval(a) + tol, fmt::format("frequency plane {} at {}", h.id, t));
    }
  }
  return bad;
}

nlohmann::json to_json(const model::SystemSpec& spec, const DayAheadDecision& d) {
  nlohmann::json doc = {{"n_periods", spec.n_periods}};
  auto section = [&](const char* key, const auto& grid, const auto& devices) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < devices.size(); ++i) obj[devices[i].id] = grid.at(i);
    doc[key] = obj;
  };
  section("commit", d.commit, spec.generators);
  section("startup", d.startup, spec.generators);
  section("shutdown", d.shutdown, spec.generators);
  section("fqr_cap", d.fqr_cap, spec.fqr_loads);
  section("cl_cap", d.cl_cap, spec.cl_loads);
  return doc;
}

DayAheadDecision decision_from_json(const model::SystemSpec& spec, const nlohmann::json& doc) {
  const auto n = static_cast<std::size_t>(spec.n_periods);
  auto read = [&](const char* key, const auto& devices, auto& grid) {
    using T = typename std::decay_t<decltype(grid)>::value_type::value_type;
    if (!doc.is_object() || !doc.contains(key) || !doc[key].is_object()) {
      throw ConfigError(fmt::format("/{}", key), "missing object");
    }
    grid.clear();
    for (const auto& dev : devices) {
      const std::string path = fmt::format("/{}/{}", key, dev.id);
      if (!doc[key].contains(dev.id)) throw ConfigError(path, "missing device");
      const auto& arr = doc[key][dev.id];
      if (!arr.is_array() || arr.size() != n) {
        throw ConfigError(path, fmt::format("expected an array of {} numbers", n));
      }
      std::vector<T> row;
      for (const auto& v : arr) {
        if (!v.is_number()) throw ConfigError(path, "non-numeric entry");
        row.push_back(v.template get<T>());
      }
      grid.push_back(std::move(row));
    }
  };
  DayAheadDecision d;
  read("commit", spec.generators, d.commit);
  read("startup", spec.generators, d.startup);
  read("shutdown", spec.generators, d.shutdown);
  read("fqr_cap", spec.fqr_loads, d.fqr_cap);
  read("cl_cap", spec.cl_loads, d.cl_cap);
  for (const auto* g : {&d.commit, &d.startup, &d.shutdown}) {
    for (const auto& row : *g) {
      for (int v : row) {
        if (v != 0 && v != 1) throw ConfigError("/commit", "binary entries must be 0 or 1");
      }
    }
  }
  return d;
}

DayAheadDecision load_decision(const model::SystemSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open decision file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return decision_from_json(spec, doc);
}

}  // namespace ced::dispatch
