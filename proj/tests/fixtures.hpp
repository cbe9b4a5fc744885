#pragma once

#include <algorithm>

#include "ced/model/system.hpp"

namespace fixtures {

inline const ced::model::SystemSpec& reference() {
  static const ced::model::SystemSpec s = ced::model::load_system("data/case14_reference.json");
  return s;
}

// Reference system cut to the first `periods` periods.
inline ced::model::SystemSpec truncated(int periods) {
  ced::model::SystemSpec s = reference();
  s.n_periods = periods;
  for (auto& r : s.renewables) {
    r.expected.resize(static_cast<std::size_t>(periods));
    r.half_width.resize(static_cast<std::size_t>(periods));
  }
  for (auto& d : s.demands) d.demand.resize(static_cast<std::size_t>(periods));
  return s;
}

// One demand series carrying the whole load.
inline void set_demand(ced::model::SystemSpec& s, const std::vector<double>& total) {
  s.demands.resize(1);
  s.demands[0].demand = total;
}

}  // namespace fixtures
