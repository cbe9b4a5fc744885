#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace ced::model {

struct GeneratorSpec {
  std::string id;
  int t_on_min = 1;   // periods
  int t_off_min = 1;  // periods
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_down = 0.0;  // MW per period
  double ramp_up = 0.0;
  double inertia_h = 0.0;  // s
  double droop_inv = 0.0;  // 1/R on the machine base
  double f_h = 0.0;
  double t_r = 0.0;  // s
  double cost_up = 0.0;
  double cost_down = 0.0;
  double cost_energy = 0.0;  // $/MW
  bool initial_on = false;

  bool operator==(const GeneratorSpec&) const = default;
};

struct StorageSpec {
  std::string id;
  double p_max = 0.0;
  double e_min = 0.0;
  double e_max = 0.0;
  double e_init = 0.0;
  double eta_ch = 1.0;
  double eta_dc = 1.0;
  double cost_throughput = 0.0;

  bool operator==(const StorageSpec&) const = default;
};

// Frequency-regulation and curtailable loads share a shape. When
// `cap_max_load_fraction` is set the per-period upper bound is that fraction
// of total demand, further limited by `cap_max`.
struct FlexLoadSpec {
  std::string id;
  double cap_min = 0.0;
  double cap_max = 0.0;
  double cost = 0.0;
  std::optional<double> cap_max_load_fraction;

  bool operator==(const FlexLoadSpec&) const = default;
};
using FqrLoadSpec = FlexLoadSpec;
using ClLoadSpec = FlexLoadSpec;

struct RenewableSeries {
  std::string id;
  std::vector<double> expected;
  std::vector<double> half_width;

  bool operator==(const RenewableSeries&) const = default;
};

struct DemandSeries {
  std::string id;
  std::vector<double> demand;

  bool operator==(const DemandSeries&) const = default;
};

enum class FhTrWeighting { kCapacity, kAsPrinted };

struct SystemSpec {
  std::vector<GeneratorSpec> generators;
  std::vector<StorageSpec> storages;
  std::vector<FqrLoadSpec> fqr_loads;
  std::vector<ClLoadSpec> cl_loads;
  std::vector<RenewableSeries> renewables;
  std::vector<DemandSeries> demands;

  int n_periods = 24;
  double b_base = 0.0;     // MW
  double damping_d = 0.0;  // p.u. power per p.u. frequency
  double f0 = 50.0;
  double f_min = 49.7;
  double delta_p_fraction = 0.1;
  double punish_price = 1000.0;
  double delta_cr = 1e-3;
  double lpun_tol = 1.0;
  int max_outer_iters = 10;
  double ccg_gap_tol = 1e-4;
  std::optional<int> uncertainty_budget;  // empty: whole box
  FhTrWeighting fh_tr_weighting = FhTrWeighting::kCapacity;
  int relax_max_iters = 200;
  int ccg_max_iters = 25;
  long subproblem_node_limit = 2000;
  long master_node_limit = 200000;

  bool operator==(const SystemSpec&) const = default;

  // Largest admissible per-unit frequency drop, 1 - f_min / f0.
  double max_deviation_pu() const { return 1.0 - f_min / f0; }
};

// Reads and validates a JSON config. Throws ConfigError (with line/column or
// JSON path) on malformed input and InvariantError naming the offending field.
SystemSpec load_system(const std::filesystem::path& path);
SystemSpec parse_system(const nlohmann::json& doc);
SystemSpec parse_system_text(const std::string& text);

nlohmann::json to_json(const SystemSpec& spec);

// Checks every type invariant; throws InvariantError.
void validate(const SystemSpec& spec);

// Periods are 1-based throughout the public API.
double total_demand(const SystemSpec& spec, int t);
double delta_p(const SystemSpec& spec, int t);
// Upper capacity bound of a flexible load in period t.
double cap_upper(const SystemSpec& spec, const FlexLoadSpec& load, int t);

}  // namespace ced::model
