#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "ced/error.hpp"
#include "ced/model/system.hpp"
#include "ced/sfr/sfr.hpp"

namespace ced::relax {

// Affine model L(a) = value + gradient . (a - anchor).
struct Hyperplane {
  int id = 0;
  sfr::AlphaVector anchor;
  double value = 0.0;
  std::array<double, 4> gradient{};

  double eval(const sfr::AlphaVector& a) const;
  // L(a) = intercept() + gradient . a
  double intercept() const;
  bool operator==(const Hyperplane&) const = default;
};

// Image of the unit box under aggregate(), cut by floors on inertia and droop.
struct PaRegion {
  std::vector<sfr::AlphaVector> units;  // per-generator contributions
  sfr::AlphaVector floor;               // only a_hg and a_rg are non-zero

  static PaRegion from_spec(const model::SystemSpec& spec, double floor_fraction = 0.05);
  sfr::AlphaVector at(const std::vector<double>& x) const;
  // Strictly above both floors.
  bool strictly_inside(const sfr::AlphaVector& a) const;
};

struct HyperplaneSet {
  std::vector<Hyperplane> planes;
  double damping = 0.0;
  double delta_cr = 0.0;
  double terminal_gap = 0.0;  // beta_hat - max_h g(anchor_h) at the last check
  int iterations = 0;
  std::vector<double> beta_history;
  sfr::AlphaVector floor;

  // min_h L_h(a)
  double envelope(const sfr::AlphaVector& a) const;
  bool operator==(const HyperplaneSet&) const = default;
};

// Tangent plane of g at `anchor`. Throws DomainError unless the anchor lies
// strictly above the region floors.
Hyperplane tangent_plane(const sfr::AlphaVector& anchor, const PaRegion& region, double damping, int id);

struct OaStepResult {
  sfr::AlphaVector anchor;
  std::vector<double> x;
  double beta = 0.0;
};

// max beta s.t. beta <= L_h(aggregate(x)), x in [0,1]^n, floors.
// Throws ConfigError if the floors cannot be met.
OaStepResult oa_step(const HyperplaneSet& hps, const PaRegion& region);

class RelaxCapError : public Error {
 public:
  RelaxCapError(HyperplaneSet partial, double gap);
  const HyperplaneSet& partial() const noexcept { return partial_; }
  double gap() const noexcept { return gap_; }

 private:
  HyperplaneSet partial_;
  double gap_;
};

// Outer approximation from the all-on anchor until
// beta_hat - max_h g(anchor_h) < delta_cr. Throws RelaxCapError after
// spec.relax_max_iters steps.
HyperplaneSet algorithm1(const model::SystemSpec& spec);
// Same, starting from the anchor aggregate(x_init).
HyperplaneSet algorithm1(const model::SystemSpec& spec, const std::vector<double>& x_init);

// envelope - g over points aggregate(x) with x uniform in the unit box,
// keeping those strictly inside the region. Points where g is undefined
// are counted and skipped.
struct EnvelopeCheck {
  double min_error = 0.0;
  double max_error = 0.0;
  int samples = 0;
  int skipped = 0;
};
EnvelopeCheck sample_envelope(const HyperplaneSet& hps, const PaRegion& region, int count, unsigned seed);

nlohmann::json to_json(const HyperplaneSet& hps);
HyperplaneSet hyperplanes_from_json(const nlohmann::json& doc);
void save_hyperplanes(const HyperplaneSet& hps, const std::filesystem::path& path);
HyperplaneSet load_hyperplanes(const std::filesystem::path& path);

}  // namespace ced::relax
