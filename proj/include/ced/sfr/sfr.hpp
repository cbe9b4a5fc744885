#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "ced/model/system.hpp"

namespace ced::sfr {

// Aggregated frequency parameters, per unit on b_base:
// inertia, droop gain, reheat-weighted droop, time-constant-weighted droop.
struct AlphaVector {
  double a_hg = 0.0;
  double a_rg = 0.0;
  double a_fh = 0.0;
  double a_tr = 0.0;

  double& operator[](int i) { return i == 0 ? a_hg : i == 1 ? a_rg : i == 2 ? a_fh : a_tr; }
  double operator[](int i) const { return i == 0 ? a_hg : i == 1 ? a_rg : i == 2 ? a_fh : a_tr; }
  std::array<double, 4> array() const { return {a_hg, a_rg, a_fh, a_tr}; }
  static AlphaVector from(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
  bool operator==(const AlphaVector&) const = default;
};

struct SfrDerived {
  double omega_n = 0.0;  // rad/s
  double zeta = 0.0;
  double omega_r = 0.0;  // rad/s
  double t_nadir = 0.0;  // s
  double amplitude_term = 0.0;
};

// Linear in x (x_g in [0, 1]).
AlphaVector aggregate(std::span<const double> x, const model::SystemSpec& spec);
// Contribution of generator g alone, i.e. aggregate(e_g).
AlphaVector unit_contribution(const model::SystemSpec& spec, int g);

// Throws DomainError outside a_hg, a_rg, a_tr > 0, a_fh >= 0, or if the
// response is not underdamped.
SfrDerived derived_params(const AlphaVector& a, double damping);

// Nadir gain: the per-unit frequency drop after a per-unit step loss dp is
// dp / g_eval(a, d).
double g_eval(const AlphaVector& a, double damping);

// Central differences with relative step 1e-5. Steps are shrunk so every
// evaluation point keeps each coordinate >= floor (and inside the
// underdamped domain); DomainError if a step would fall below 1e-9.
std::array<double, 4> g_grad(const AlphaVector& a, double damping, const AlphaVector& floor = {});

struct Trajectory {
  std::vector<double> t;   // s
  std::vector<double> df;  // frequency drop, p.u. of f0 (positive = below nominal)
  double nadir = 0.0;      // max |df|
  double nadir_time = 0.0;
};

struct SimulateOptions {
  double dt = 1e-3;
  double horizon = 30.0;
  int record_every = 10;  // samples kept in the trajectory
};

// Fixed-step RK4 on the two-state reheat-turbine model. Throws
// NumericalError on a non-finite state and DomainError on a negative dp.
Trajectory sfr_simulate(const AlphaVector& a, double damping, double delta_p_pu,
                        const SimulateOptions& options = {});

// CSV columns: t_s, delta_f_pu, delta_f_hz.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double f0);

}  // namespace ced::sfr
