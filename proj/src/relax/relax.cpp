#include "ced/relax/relax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "ced/mp/lp.hpp"

namespace ced::relax {

using sfr::AlphaVector;

double Hyperplane::eval(const AlphaVector& a) const {
  double v = value;
  for (int i = 0; i < 4; ++i) v += gradient[static_cast<std::size_t>(i)] * (a[i] - anchor[i]);
  return v;
}

double Hyperplane::intercept() const {
  double c = value;
  for (int i = 0; i < 4; ++i) c -= gradient[static_cast<std::size_t>(i)] * anchor[i];
  return c;
}

PaRegion PaRegion::from_spec(const model::SystemSpec& spec, double floor_fraction) {
  PaRegion r;
  AlphaVector full;
  for (std::size_t g = 0; g < spec.generators.size(); ++g) {
    r.units.push_back(sfr::unit_contribution(spec, static_cast<int>(g)));
    for (int i = 0; i < 4; ++i) full[i] += r.units.back()[i];
  }
  r.floor.a_hg = floor_fraction * full.a_hg;
  r.floor.a_rg = floor_fraction * full.a_rg;
  return r;
}

AlphaVector PaRegion::at(const std::vector<double>& x) const {
  AlphaVector a;
  for (std::size_t g = 0; g < units.size(); ++g) {
    for (int i = 0; i < 4; ++i) a[i] += units[g][i] * x[g];
  }
  return a;
}

bool PaRegion::strictly_inside(const AlphaVector& a) const {
  return a.a_hg > floor.a_hg && a.a_rg > floor.a_rg;
}

double HyperplaneSet::envelope(const AlphaVector& a) const {
  double v = std::numeric_limits<double>::infinity();
  for (const Hyperplane& h : planes) v = std::min(v, h.eval(a));
  return v;
}

Hyperplane tangent_plane(const AlphaVector& anchor, const PaRegion& region, double damping, int id) {
  if (!region.strictly_inside(anchor)) {
    throw DomainError(fmt::format("anchor ({:.6g}, {:.6g}) is not strictly above the region floor",
                                  anchor.a_hg, anchor.a_rg));
  }
  Hyperplane h;
  h.id = id;
  h.anchor = anchor;
  h.value = sfr::g_eval(anchor, damping);
  h.gradient = sfr::g_grad(anchor, damping, region.floor);
  return h;
}

OaStepResult oa_step(const HyperplaneSet& hps, const PaRegion& region) {
  if (hps.planes.empty()) throw DomainError("outer approximation needs at least one hyperplane");
  mp::ProblemDef p;
  const int n = static_cast<int>(region.units.size());
  for (int g = 0; g < n; ++g) p.add_var(fmt::format("x_{}", g), 0.0, 1.0);
  const int beta = p.add_var("beta", -mp::kInfinity, mp::kInfinity, mp::VarKind::kContinuous, 1.0);
  p.set_sense(mp::ObjectiveSense::kMaximize);
  for (const Hyperplane& h : hps.planes) {
    std::vector<mp::Term> terms{{beta, 1.0}};
    for (int g = 0; g < n; ++g) {
      double c = 0.0;
      for (int i = 0; i < 4; ++i) c += h.gradient[static_cast<std::size_t>(i)] * region.units[g][i];
      terms.push_back({g, -c});
    }
    p.add_row(fmt::format("plane_{}", h.id), terms, mp::RowSense::kLessEqual, h.intercept());
  }
  std::vector<mp::Term> hg, rg;
  for (int g = 0; g < n; ++g) {
    hg.push_back({g, region.units[g].a_hg});
    rg.push_back({g, region.units[g].a_rg});
  }
  p.add_row("floor_hg", hg, mp::RowSense::kGreaterEqual, region.floor.a_hg);
  p.add_row("floor_rg", rg, mp::RowSense::kGreaterEqual, region.floor.a_rg);

  const mp::LpSolution s = mp::solve_lp(p);
  if (s.status != mp::LpStatus::kOptimal) {
    throw ConfigError("generators", fmt::format("outer-approximation LP is {}", mp::to_string(s.status)));
  }
  OaStepResult out;
  out.x.assign(s.x.begin(), s.x.begin() + n);
  out.anchor = region.at(out.x);
  out.beta = s.objective;
  return out;
}

RelaxCapError::RelaxCapError(HyperplaneSet partial, double gap)
    : Error(fmt::format("outer approximation did not converge after {} iterations (gap {:.6g})",
                        partial.iterations, gap)),
      partial_(std::move(partial)),
      gap_(gap) {}

HyperplaneSet algorithm1(const model::SystemSpec& spec) {
  return algorithm1(spec, std::vector<double>(spec.generators.size(), 1.0));
}

HyperplaneSet algorithm1(const model::SystemSpec& spec, const std::vector<double>& x_init) {
  const PaRegion region = PaRegion::from_spec(spec);
  HyperplaneSet hps;
  hps.damping = spec.damping_d;
  hps.delta_cr = spec.delta_cr;
  hps.floor = region.floor;

  std::vector<AlphaVector> anchors{region.at(x_init)};
  hps.planes.push_back(tangent_plane(anchors.front(), region, spec.damping_d, 1));
  double best_g = hps.planes.front().value;

  while (true) {
    const OaStepResult step = oa_step(hps, region);
    ++hps.iterations;
    hps.beta_history.push_back(step.beta);
    const bool repeated = std::find(anchors.begin(), anchors.end(), step.anchor) != anchors.end();
    if (!repeated) best_g = std::max(best_g, sfr::g_eval(step.anchor, spec.damping_d));
    hps.terminal_gap = step.beta - best_g;
    if (hps.terminal_gap < spec.delta_cr) return hps;
    if (hps.iterations >= spec.relax_max_iters) throw RelaxCapError(hps, hps.terminal_gap);
    if (repeated) {
      // A repeated anchor adds nothing; L_h(anchor) = g(anchor) so the gap
      // above is already zero there and this is unreachable in exact math.
      throw NumericalError("outer approximation revisited an anchor with a positive gap");
    }
    anchors.push_back(step.anchor);
    hps.planes.push_back(
        tangent_plane(step.anchor, region, spec.damping_d, static_cast<int>(hps.planes.size()) + 1));
  }
}

EnvelopeCheck sample_envelope(const HyperplaneSet& hps, const PaRegion& region, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EnvelopeCheck out;
  out.min_error = std::numeric_limits<double>::infinity();
  out.max_error = -std::numeric_limits<double>::infinity();
  std::vector<double> x(region.units.size());
  for (long draws = 0; out.samples < count && draws < 100L * count; ++draws) {
    for (double& v : x) v = u(rng);
    const AlphaVector a = region.at(x);
    if (!region.strictly_inside(a)) continue;
    double g = 0;
    try {
      g = sfr::g_eval(a, hps.damping);
    } catch (const DomainError&) {
      ++out.skipped;
      continue;
    }
    const double e = hps.envelope(a) - g;
    out.min_error = std::min(out.min_error, e);
    out.max_error = std::max(out.max_error, e);
    ++out.samples;
  }
  return out;
}

nlohmann::json to_json(const HyperplaneSet& hps) {
  nlohmann::json planes = nlohmann::json::array();
  for (const Hyperplane& h : hps.planes) {
    planes.push_back({{"id", h.id}, {"anchor", h.anchor.array()}, {"value", h.value}, {"gradient", h.gradient}});
  }
  return {{"damping", hps.damping},
          {"delta_cr", hps.delta_cr},
          {"terminal_gap", hps.terminal_gap},
          {"iterations", hps.iterations},
          {"beta_history", hps.beta_history},
          {"floor", hps.floor.array()},
          {"planes", planes}};
}

HyperplaneSet hyperplanes_from_json(const nlohmann::json& doc) {
  HyperplaneSet hps;
  try {
    hps.damping = doc.at("damping").get<double>();
    hps.delta_cr = doc.at("delta_cr").get<double>();
    hps.terminal_gap = doc.at("terminal_gap").get<double>();
    hps.iterations = doc.at("iterations").get<int>();
    hps.beta_history = doc.at("beta_history").get<std::vector<double>>();
    hps.floor = AlphaVector::from(doc.at("floor").get<std::array<double, 4>>());
    for (const auto& p : doc.at("planes")) {
      Hyperplane h;
      h.id = p.at("id").get<int>();
      h.anchor = AlphaVector::from(p.at("anchor").get<std::array<double, 4>>());
      h.value = p.at("value").get<double>();
      h.gradient = p.at("gradient").get<std::array<double, 4>>();
      hps.planes.push_back(h);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("hyperplanes", e.what());
  }
  if (hps.planes.empty()) throw ConfigError("hyperplanes.planes", "empty hyperplane set");
  return hps;
}

void save_hyperplanes(const HyperplaneSet& hps, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path.string(), "cannot write hyperplane file");
  out << to_json(hps).dump(2) << '\n';
}

HyperplaneSet load_hyperplanes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open hyperplane file");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), e.what());
  }
  return hyperplanes_from_json(doc);
}

}  // namespace ced::relax
