// ced: relaxation, robust dispatch with controlled evolution, and replay.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ced/correction/correction.hpp"
#include "ced/mp/milp.hpp"
#include "ced/sfr/sfr.hpp"

namespace fs = std::filesystem;
using namespace ced;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRelaxCap = 3;
constexpr int kExitNotClosed = 4;

double clean(double v) { return std::abs(v) < 5e-7 ? 0.0 : v; }

class Bundle {
 public:
  Bundle(fs::path dir, std::string command, std::string config, unsigned seed)
      : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)), seed_(seed) {
    fs::create_directories(dir_);
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    fs::create_directories(p.parent_path());
    files_.push_back(name);
    return std::ofstream(p);
  }
  void add(const std::string& name) { files_.push_back(name); }

  void stage(const std::string& name, double seconds) { timings_[name] = seconds; }

  void write_manifest(int exit_code) {
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : files_) {
      const fs::path p = dir_ / f;
      outputs.push_back({{"file", f}, {"bytes", fs::exists(p) ? fs::file_size(p) : 0}});
    }
    nlohmann::json m = {{"config", config_},      {"command", command_}, {"seed", seed_},
                        {"version", CED_VERSION}, {"exit_code", exit_code}, {"timing_s", timings_},
                        {"outputs", outputs}};
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::string config_;
  unsigned seed_;
  std::vector<std::string> files_;
  nlohmann::json timings_ = nlohmann::json::object();
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct Common {
  std::string config;
  std::string out_dir = "out";
  int jobs = 1;
  unsigned seed = 1;
  std::string hyperplanes;
  std::string mode = "fix-equality";
};

nlohmann::json relax_report(const model::SystemSpec& spec, const relax::HyperplaneSet& h, unsigned seed) {
  const auto check = relax::sample_envelope(h, relax::PaRegion::from_spec(spec), 10000, seed);
  return {{"planes", h.planes.size()},      {"iterations", h.iterations},        {"terminal_gap", h.terminal_gap},
          {"delta_cr", h.delta_cr},         {"beta_history", h.beta_history},    {"sampled_points", check.samples},
          {"envelope_minus_g_min", check.min_error}, {"envelope_minus_g_max", check.max_error}};
}

relax::HyperplaneSet obtain_planes(const model::SystemSpec& spec, const std::string& file) {
  if (!file.empty()) return relax::load_hyperplanes(file);
  return relax::algorithm1(spec);
}

void write_grid_csv(std::ostream& out, const model::SystemSpec& spec, const auto& devices, const auto& grid) {
  out << "t";
  for (const auto& d : devices) out << ',' << d.id;
  out << '\n';
  for (int t = 1; t <= spec.n_periods; ++t) {
    out << t;
    for (const auto& row : grid) out << fmt::format(",{}", clean(static_cast<double>(row[static_cast<std::size_t>(t - 1)])));
    out << '\n';
  }
}

void write_frequency_table(std::ostream& out, const model::SystemSpec& spec, const dispatch::DayAheadDecision& d) {
  out << "t,delta_p_mw,fqr_mw,disturbance_mw,max_deviation_hz,limit_hz,nadir_time_s\n";
  const double limit = spec.f0 - spec.f_min;
  for (int t = 1; t <= spec.n_periods; ++t) {
    const auto k = static_cast<std::size_t>(t - 1);
    std::vector<double> x;
    for (const auto& row : d.commit) x.push_back(row[k]);
    double fqr = 0;
    for (const auto& row : d.fqr_cap) fqr += row[k];
    const double dp = model::delta_p(spec, t);
    const double dist = std::max(0.0, dp - fqr);
    double dev = 0, when = 0;
    if (dist > 0) {
      const auto traj = sfr::sfr_simulate(sfr::aggregate(x, spec), spec.damping_d, dist / spec.b_base);
      dev = traj.nadir * spec.f0;
      when = traj.nadir_time;
    }
    out << fmt::format("{},{:.4f},{:.4f},{:.4f},{:.6f},{:.4f},{:.3f}\n", t, dp, clean(fqr), dist, dev, limit, when);
  }
}

void write_evolutions(Bundle& b, const model::SystemSpec& spec, const std::vector<evolution::ScenarioEvolution>& evs,
                      const std::string& dir) {
  for (const auto& e : evs) {
    auto out = b.open(fmt::format("{}/scenario_{:03d}.csv", dir, e.scenario + 1));
    evolution::write_evolution_csv(out, spec, e);
  }
}

void write_infeasible(std::ostream& out, const std::vector<evolution::ScenarioEvolution>& evs, double tol) {
  out << "scenario,t,lpun\n";
  for (const auto& e : evolution::collect_infeasible(evs, tol)) out << fmt::format("{},{},{:.6f}\n", e.scenario + 1, e.t, e.lpun);
  for (const auto& e : evs) {
    if (e.errored) std::cerr << fmt::format("scenario {}: {}\n", e.scenario + 1, e.error);
  }
}

int cmd_relax(const Common& c) {
  const model::SystemSpec spec = model::load_system(c.config);
  Bundle b(c.out_dir, "relax", c.config, c.seed);
  Stopwatch sw;
  int code = 0;
  relax::HyperplaneSet h;
  try {
    h = relax::algorithm1(spec);
  } catch (const relax::RelaxCapError& e) {
    std::cerr << e.what() << '\n';
    h = e.partial();
    code = kExitRelaxCap;
  }
  b.stage("relax", sw.lap());
  relax::save_hyperplanes(h, b.path("hyperplanes.json"));
  b.add("hyperplanes.json");
  const auto report = relax_report(spec, h, c.seed);
  b.open("relax_report.json") << report.dump(2) << '\n';
  b.stage("sampling", sw.lap());
  b.write_manifest(code);
  fmt::print("{} planes after {} iterations, terminal gap {:.3g}; sampled envelope - g in [{:.4g}, {:.4g}]\n",
             h.planes.size(), h.iterations, h.terminal_gap, report["envelope_minus_g_min"].get<double>(),
             report["envelope_minus_g_max"].get<double>());
  return code;
}

int cmd_run(const Common& c) {
  const model::SystemSpec spec = model::load_system(c.config);
  correction::OuterOptions opt;
  opt.mode = evolution::parse_cl_mode(c.mode);
  opt.jobs = c.jobs;
  Bundle b(c.out_dir, "run", c.config, c.seed);
  Stopwatch sw;

  opt.hyperplanes = obtain_planes(spec, c.hyperplanes);
  b.stage("relax", sw.lap());
  relax::save_hyperplanes(*opt.hyperplanes, b.path("hyperplanes.json"));
  b.add("hyperplanes.json");

  // Deterministic unit commitment on the expected scenario, for comparison.
  dispatch::DeterministicModel det =
      dispatch::build_deterministic(spec, *opt.hyperplanes, dispatch::expected_scenario(spec));
  const mp::MilpSolution ds = mp::solve_milp(det.problem);
  if (ds.status != mp::MilpStatus::kOptimal) throw NumericalError("deterministic unit commitment did not solve");
  const auto det_decision = dispatch::extract_first_stage(spec, det.first, ds.x);
  b.open("deterministic/decision.json") << dispatch::to_json(spec, det_decision).dump(2) << '\n';
  {
    auto out = b.open("deterministic/uc_table.csv");
    write_grid_csv(out, spec, spec.generators, det_decision.commit);
  }
  b.stage("deterministic", sw.lap());

  const correction::OuterReport r = correction::outer_loop(spec, opt);
  b.stage("outer_loop", sw.lap());

  {
    auto out = b.open("uc_table.csv");
    write_grid_csv(out, spec, spec.generators, r.decision.commit);
  }
  {
    auto out = b.open("cl_capacity.csv");
    write_grid_csv(out, spec, spec.cl_loads, r.decision.cl_cap);
  }
  {
    auto out = b.open("fqr_capacity.csv");
    write_grid_csv(out, spec, spec.fqr_loads, r.decision.fqr_cap);
  }
  {
    auto out = b.open("imbalance.csv");
    const auto before = evolution::average_imbalance(spec, r.before);
    const auto after = evolution::average_imbalance(spec, r.after);
    out << "t,before_mw,after_mw\n";
    for (std::size_t k = 0; k < before.size(); ++k) out << fmt::format("{},{:.6f},{:.6f}\n", k + 1, clean(before[k]), clean(after[k]));
  }
  {
    auto out = b.open("frequency_table.csv");
    write_frequency_table(out, spec, r.decision);
  }
  {
    auto out = b.open("outer_log.csv");
    out << "iteration,lower_bound,upper_bound,ccg_iterations,subproblems_certified,scenarios,cuts_added,cuts_total,"
           "max_lpun\n";
    for (const auto& it : r.iterations) {
      out << fmt::format("{},{:.4f},{:.4f},{},{},{},{},{},{:.6f}\n", it.iteration, it.lower_bound, it.upper_bound,
                         it.ccg_iterations, it.subproblems_certified ? 1 : 0, it.omega_size, it.cuts_added,
                         it.cuts_total, clean(it.max_lpun));
    }
  }
  {
    nlohmann::json cuts = nlohmann::json::array();
    for (const auto& cut : r.cuts.cuts()) {
      const auto row = cut.row();
      cuts.push_back({{"id", cut.id()},
                      {"period", cut.period},
                      {"scenario", cut.scenario},
                      {"lpun", cut.lpun},
                      {"commit_coef", row.commit_coef},
                      {"cl_coef", row.cl_coef},
                      {"rhs", row.rhs},
                      {"warnings", cut.warnings}});
    }
    b.open("cuts.json") << cuts.dump(2) << '\n';
  }
  b.open("decision.json") << dispatch::to_json(spec, r.decision).dump(2) << '\n';
  b.open("decision_initial.json") << dispatch::to_json(spec, r.initial).dump(2) << '\n';
  for (const auto& f : robust::write_scenarios(spec, r.omega_w, b.path("scenarios"))) {
    b.add(fs::relative(f, b.path("")).string());
  }
  write_evolutions(b, spec, r.before, "evolution_before");
  write_evolutions(b, spec, r.after, "evolution_after");

  const bool closed = r.status == correction::OuterStatus::kClosed;
  const auto costs = r.last_ccg.master;
  nlohmann::json summary = {{"status", closed ? "closed" : "not_closed"},
                            {"note", r.note},
                            {"outer_iterations", r.iterations.size()},
                            {"cuts", r.cuts.size()},
                            {"separation_failures", r.separation_failures},
                            {"scenarios", r.omega_w.size()},
                            {"robust_objective", r.iterations.back().upper_bound},
                            {"first_stage_cost", costs.first_stage_cost},
                            {"deterministic_objective", ds.objective},
                            {"hyperplanes", r.hyperplanes.planes.size()},
                            {"mode", evolution::to_string(opt.mode)}};
  b.open("summary.json") << summary.dump(2) << '\n';
  b.stage("reports", sw.lap());
  const int code = closed ? 0 : kExitNotClosed;
  b.write_manifest(code);

  fmt::print("{} after {} outer iteration(s), {} cut(s), {} scenario(s); robust objective {:.2f} (deterministic {:.2f})\n",
             closed ? "closed" : "NOT closed", r.iterations.size(), r.cuts.size(), r.omega_w.size(),
             r.iterations.back().upper_bound, ds.objective);
  if (!closed) std::cerr << r.note << '\n';
  return code;
}

int cmd_evolve(const Common& c, const std::string& decision, const std::string& scenarios) {
  const model::SystemSpec spec = model::load_system(c.config);
  const auto mode = evolution::parse_cl_mode(c.mode);
  const auto d = dispatch::load_decision(spec, decision);
  const auto vertices = robust::read_scenarios(spec, scenarios);
  Bundle b(c.out_dir, "evolve", c.config, c.seed);
  Stopwatch sw;
  const auto h = obtain_planes(spec, c.hyperplanes);
  b.stage("relax", sw.lap());
  std::vector<dispatch::RenewableScenario> values;
  for (const auto& v : vertices) values.push_back(v.values);
  const auto evs = evolution::evolve_all(spec, h, d, values, mode, c.jobs);
  b.stage("evolution", sw.lap());
  write_evolutions(b, spec, evs, "evolution");
  {
    auto out = b.open("infeasible.csv");
    write_infeasible(out, evs, spec.lpun_tol);
  }
  b.write_manifest(0);
  fmt::print("{} scenario(s), {} infeasible period(s)\n", evs.size(),
             evolution::collect_infeasible(evs, spec.lpun_tol).size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-constrained robust dispatch with controlled evolution"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", c.config, "system JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--out-dir", c.out_dir, "output directory");
    s->add_option("--seed", c.seed, "seed for sampled reports");
  };
  auto* relax_cmd = app.add_subcommand("relax", "build the frequency hyperplanes");
  common(relax_cmd);

  auto* run_cmd = app.add_subcommand("run", "full pipeline");
  common(run_cmd);
  auto flows = [&](CLI::App* s) {
    s->add_option("--jobs", c.jobs, "concurrent scenario evolutions")->check(CLI::PositiveNumber);
    s->add_option("--hyperplanes", c.hyperplanes, "reuse a hyperplane file")->check(CLI::ExistingFile);
    s->add_option("--mode", c.mode, "fix-equality | cap-bound");
  };
  flows(run_cmd);

  std::string decision, scenarios;
  auto* evolve_cmd = app.add_subcommand("evolve", "replay a decision over saved scenarios");
  common(evolve_cmd);
  flows(evolve_cmd);
  evolve_cmd->add_option("--decision", decision, "decision JSON")->required()->check(CLI::ExistingFile);
  evolve_cmd->add_option("--scenarios", scenarios, "scenario directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*relax_cmd) return cmd_relax(c);
    if (*run_cmd) return cmd_run(c);
    return cmd_evolve(c, decision, scenarios);
  } catch (const ConfigError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvariantError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const relax::RelaxCapError& e) {
    std::cerr << e.what() << '\n';
    return kExitRelaxCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
