#include "ced/sfr/sfr.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "ced/error.hpp"

namespace ced::sfr {

AlphaVector aggregate(std::span<const double> x, const model::SystemSpec& spec) {
  if (x.size() != spec.generators.size()) {
    throw DomainError(fmt::format("commitment vector has {} entries for {} generators", x.size(),
                                  spec.generators.size()));
  }
  AlphaVector a;
  for (std::size_t g = 0; g < x.size(); ++g) {
    const AlphaVector u = unit_contribution(spec, static_cast<int>(g));
    a.a_hg += u.a_hg * x[g];
    a.a_rg += u.a_rg * x[g];
    a.a_fh += u.a_fh * x[g];
    a.a_tr += u.a_tr * x[g];
  }
  return a;
}

AlphaVector unit_contribution(const model::SystemSpec& spec, int g) {
  const model::GeneratorSpec& gen = spec.generators.at(static_cast<std::size_t>(g));
  const double share = gen.p_max / spec.b_base;
  AlphaVector u;
  u.a_hg = gen.inertia_h * share;
  u.a_rg = gen.droop_inv * share;
  if (spec.fh_tr_weighting == model::FhTrWeighting::kCapacity) {
    u.a_fh = gen.f_h * gen.droop_inv * share;
    u.a_tr = gen.t_r * gen.droop_inv * share;
  } else {
    u.a_fh = gen.f_h * gen.droop_inv;
    u.a_tr = gen.t_r * gen.droop_inv;
  }
  return u;
}

SfrDerived derived_params(const AlphaVector& a, double d) {
  if (!(a.a_hg > 0 && a.a_rg > 0 && a.a_tr > 0 && a.a_fh >= 0) || !(d >= 0)) {
    throw DomainError(fmt::format("alpha ({}, {}, {}, {}) outside the model domain", a.a_hg, a.a_rg,
                                  a.a_fh, a.a_tr));
  }
  const double tr = a.a_tr / a.a_rg;
  SfrDerived s;
  s.omega_n = std::sqrt((d + a.a_rg) / (2.0 * a.a_hg * tr));
  s.zeta = (2.0 * a.a_hg + (d + a.a_fh) * tr) / (2.0 * std::sqrt(2.0 * a.a_hg * tr * (d + a.a_rg)));
  if (!(s.zeta < 1.0)) {
    throw DomainError(fmt::format("overdamped response (zeta = {:.4f})", s.zeta));
  }
  s.omega_r = s.omega_n * std::sqrt(1.0 - s.zeta * s.zeta);
  s.t_nadir = std::atan2(tr * s.omega_r, tr * s.zeta * s.omega_n - 1.0) / s.omega_r;
  s.amplitude_term = std::sqrt(tr * tr * s.omega_n * s.omega_n - 2.0 * s.zeta * s.omega_n * tr + 1.0);
  return s;
}

double g_eval(const AlphaVector& a, double d) {
  const SfrDerived s = derived_params(a, d);
  return (d + a.a_rg) / (1.0 + s.amplitude_term * std::exp(-s.zeta * s.omega_n * s.t_nadir));
}

namespace {

bool evaluable(const AlphaVector& a, const AlphaVector& floor, double d) {
  for (int i = 0; i < 4; ++i) {
    if (a[i] < floor[i]) return false;
  }
  try {
    derived_params(a, d);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

}  // namespace

std::array<double, 4> g_grad(const AlphaVector& a, double d, const AlphaVector& floor) {
  std::array<double, 4> grad{};
  for (int i = 0; i < 4; ++i) {
    double h = 1e-5 * std::max(std::abs(a[i]), 1e-2);
    AlphaVector up = a;
    AlphaVector dn = a;
    while (true) {
      up[i] = a[i] + h;
      dn[i] = a[i] - h;
      if (evaluable(up, floor, d) && evaluable(dn, floor, d)) break;
      h *= 0.5;
      if (h < 1e-9) {
        throw DomainError(fmt::format("gradient step for coordinate {} left the region", i));
      }
    }
    grad[static_cast<std::size_t>(i)] = (g_eval(up, d) - g_eval(dn, d)) / (2.0 * h);
  }
  return grad;
}

Trajectory sfr_simulate(const AlphaVector& a, double d, double dp, const SimulateOptions& o) {
  if (!(a.a_hg > 0 && a.a_rg > 0 && a.a_tr > 0 && a.a_fh >= 0)) {
    throw DomainError("alpha outside the model domain");
  }
  if (dp < 0) throw DomainError("disturbance must be non-negative");
  const double tr = a.a_tr / a.a_rg;
  const double fh = a.a_fh / a.a_rg;
  const double two_h = 2.0 * a.a_hg;
  // State: frequency drop x and lagged (reheat) turbine power w.
  auto rhs = [&](double x, double w, double& dx, double& dw) {
    const double mech = fh * a.a_rg * x + w;
    dx = (dp - d * x - mech) / two_h;
    dw = ((1.0 - fh) * a.a_rg * x - w) / tr;
  };

  Trajectory out;
  const long steps = std::lround(o.horizon / o.dt);
  out.t.reserve(static_cast<std::size_t>(steps / o.record_every + 2));
  out.df.reserve(out.t.capacity());
  out.t.push_back(0.0);
  out.df.push_back(0.0);
  double x = 0.0;
  double w = 0.0;
  for (long k = 1; k <= steps; ++k) {
    double k1x, k1w, k2x, k2w, k3x, k3w, k4x, k4w;
    rhs(x, w, k1x, k1w);
    rhs(x + 0.5 * o.dt * k1x, w + 0.5 * o.dt * k1w, k2x, k2w);
    rhs(x + 0.5 * o.dt * k2x, w + 0.5 * o.dt * k2w, k3x, k3w);
    rhs(x + o.dt * k3x, w + o.dt * k3w, k4x, k4w);
    x += o.dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    w += o.dt / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w);
    if (!std::isfinite(x) || !std::isfinite(w)) {
      throw NumericalError(fmt::format("SFR integration diverged at t = {}", k * o.dt));
    }
    const double t = static_cast<double>(k) * o.dt;
    if (std::abs(x) > out.nadir) {
      out.nadir = std::abs(x);
      out.nadir_time = t;
    }
    if (k % o.record_every == 0) {
      out.t.push_back(t);
      out.df.push_back(x);
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double f0) {
  out << "t_s,delta_f_pu,delta_f_hz\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    out << fmt::format("{:.3f},{:.9g},{:.9g}\n", traj.t[k], traj.df[k], traj.df[k] * f0);
  }
}

}  // namespace ced::sfr
