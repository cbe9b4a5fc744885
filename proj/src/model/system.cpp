#include "ced/model/system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ced/error.hpp"

namespace ced::model {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t i) { return fmt::format("{}[{}]", path, i); }

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(join(path, item.key()), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double number(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "missing required field");
  if (!v->is_number()) throw ConfigError(join(path, key), "expected a number");
  return v->get<double>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  return find(obj, key) ? number(obj, key, path) : fallback;
}

int integer(const json& obj, const char* key, const std::string& path) {
  const double v = number(obj, key, path);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError(join(path, key), "expected an integer");
  }
  return static_cast<int>(v);
}

int integer_or(const json& obj, const char* key, const std::string& path, int fallback) {
  return find(obj, key) ? integer(obj, key, path) : fallback;
}

std::string text(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "missing required field");
  if (!v->is_string()) throw ConfigError(join(path, key), "expected a string");
  return v->get<std::string>();
}

bool flag_or(const json& obj, const char* key, const std::string& path, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::vector<double> series(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "missing required field");
  if (!v->is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v->size());
  for (std::size_t i = 0; i < v->size(); ++i) {
    if (!(*v)[i].is_number()) throw ConfigError(at(join(path, key), i), "expected a number");
    out.push_back((*v)[i].get<double>());
  }
  return out;
}

const json& array(const json& doc, const char* key, bool required) {
  static const json empty = json::array();
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) {
    if (required) throw ConfigError(key, "missing required field");
    return empty;
  }
  if (!it->is_array()) throw ConfigError(key, "expected an array");
  return *it;
}

GeneratorSpec parse_generator(const json& j, const std::string& p) {
  check_keys(j, {"id", "t_on_min", "t_off_min", "p_min", "p_max", "ramp_down", "ramp_up", "inertia_h",
                 "droop_inv", "f_h", "t_r", "cost_up", "cost_down", "cost_energy", "initial_on"},
             p);
  GeneratorSpec g;
  g.id = text(j, "id", p);
  g.t_on_min = integer(j, "t_on_min", p);
  g.t_off_min = integer(j, "t_off_min", p);
  g.p_min = number(j, "p_min", p);
  g.p_max = number(j, "p_max", p);
  g.ramp_down = number(j, "ramp_down", p);
  g.ramp_up = number(j, "ramp_up", p);
  g.inertia_h = number(j, "inertia_h", p);
  g.droop_inv = number(j, "droop_inv", p);
  g.f_h = number(j, "f_h", p);
  g.t_r = number(j, "t_r", p);
  g.cost_up = number(j, "cost_up", p);
  g.cost_down = number(j, "cost_down", p);
  g.cost_energy = number(j, "cost_energy", p);
  g.initial_on = flag_or(j, "initial_on", p, false);
  return g;
}

StorageSpec parse_storage(const json& j, const std::string& p) {
  check_keys(j, {"id", "p_max", "e_min", "e_max", "e_init", "eta_ch", "eta_dc", "cost_throughput"}, p);
  StorageSpec s;
  s.id = text(j, "id", p);
  s.p_max = number(j, "p_max", p);
  s.e_min = number(j, "e_min", p);
  s.e_max = number(j, "e_max", p);
  s.e_init = number(j, "e_init", p);
  s.eta_ch = number(j, "eta_ch", p);
  s.eta_dc = number(j, "eta_dc", p);
  s.cost_throughput = number_or(j, "cost_throughput", p, 2.0);
  return s;
}

FlexLoadSpec parse_flex(const json& j, const std::string& p, double default_cost) {
  check_keys(j, {"id", "cap_min", "cap_max", "cost", "cap_max_load_fraction"}, p);
  FlexLoadSpec f;
  f.id = text(j, "id", p);
  f.cap_min = number_or(j, "cap_min", p, 0.0);
  f.cap_max = number(j, "cap_max", p);
  f.cost = number_or(j, "cost", p, default_cost);
  if (find(j, "cap_max_load_fraction")) f.cap_max_load_fraction = number(j, "cap_max_load_fraction", p);
  return f;
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw InvariantError(field, what);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

SystemSpec parse_system(const json& doc) {
  check_keys(doc, {"comment", "system", "generators", "storages", "fqr_loads", "cl_loads", "renewables", "demands"}, "");
  SystemSpec s;

  auto sys_it = doc.find("system");
  if (sys_it == doc.end()) throw ConfigError("system", "missing required field");
  const json& sys = *sys_it;
  const std::string sp = "system";
  check_keys(sys,
             {"n_periods", "b_base", "damping_d", "damping_mw_per_hz", "f0", "f_min", "delta_p_fraction",
              "punish_price", "delta_cr", "lpun_tol", "max_outer_iters", "ccg_gap_tol", "uncertainty_budget",
              "fh_tr_weighting", "relax_max_iters", "ccg_max_iters", "subproblem_node_limit",
              "master_node_limit", "comment"},
             sp);

  const json& gens = array(doc, "generators", false);
  for (std::size_t i = 0; i < gens.size(); ++i) s.generators.push_back(parse_generator(gens[i], at("generators", i)));
  const json& stor = array(doc, "storages", false);
  for (std::size_t i = 0; i < stor.size(); ++i) s.storages.push_back(parse_storage(stor[i], at("storages", i)));
  const json& fqr = array(doc, "fqr_loads", false);
  for (std::size_t i = 0; i < fqr.size(); ++i) s.fqr_loads.push_back(parse_flex(fqr[i], at("fqr_loads", i), 5.0));
  const json& cl = array(doc, "cl_loads", false);
  for (std::size_t i = 0; i < cl.size(); ++i) s.cl_loads.push_back(parse_flex(cl[i], at("cl_loads", i), 80.0));
  const json& ren = array(doc, "renewables", false);
  for (std::size_t i = 0; i < ren.size(); ++i) {
    const std::string p = at("renewables", i);
    check_keys(ren[i], {"id", "expected", "half_width"}, p);
    RenewableSeries r;
    r.id = text(ren[i], "id", p);
    r.expected = series(ren[i], "expected", p);
    r.half_width = series(ren[i], "half_width", p);
    s.renewables.push_back(std::move(r));
  }
  const json& dem = array(doc, "demands", true);
  for (std::size_t i = 0; i < dem.size(); ++i) {
    const std::string p = at("demands", i);
    check_keys(dem[i], {"id", "demand"}, p);
    DemandSeries d;
    d.id = text(dem[i], "id", p);
    d.demand = series(dem[i], "demand", p);
    s.demands.push_back(std::move(d));
  }

  s.n_periods = integer(sys, "n_periods", sp);
  s.f0 = number_or(sys, "f0", sp, 50.0);
  s.f_min = number_or(sys, "f_min", sp, 49.7);
  if (find(sys, "b_base")) {
    s.b_base = number(sys, "b_base", sp);
  } else {
    s.b_base = 0.0;
    for (const GeneratorSpec& g : s.generators) s.b_base += g.p_max;
  }
  const bool has_pu = find(sys, "damping_d") != nullptr;
  const bool has_mw = find(sys, "damping_mw_per_hz") != nullptr;
  if (has_pu && has_mw) throw ConfigError("system.damping_d", "give damping_d or damping_mw_per_hz, not both");
  if (has_pu) {
    s.damping_d = number(sys, "damping_d", sp);
  } else if (has_mw) {
    // MW/Hz -> p.u. power on b_base per p.u. frequency on f0.
    const double d = number(sys, "damping_mw_per_hz", sp);
    s.damping_d = s.b_base > 0 ? d * s.f0 / s.b_base : d;
  } else {
    throw ConfigError("system.damping_d", "missing required field");
  }
  s.delta_p_fraction = number_or(sys, "delta_p_fraction", sp, 0.1);
  s.punish_price = number_or(sys, "punish_price", sp, 1000.0);
  s.delta_cr = number_or(sys, "delta_cr", sp, 1e-3);
  s.lpun_tol = number_or(sys, "lpun_tol", sp, 1.0);
  s.max_outer_iters = integer_or(sys, "max_outer_iters", sp, 10);
  s.ccg_gap_tol = number_or(sys, "ccg_gap_tol", sp, 1e-4);
  if (find(sys, "uncertainty_budget")) s.uncertainty_budget = integer(sys, "uncertainty_budget", sp);
  if (const json* w = find(sys, "fh_tr_weighting")) {
    if (!w->is_string()) throw ConfigError("system.fh_tr_weighting", "expected a string");
    const std::string v = w->get<std::string>();
    if (v == "capacity") {
      s.fh_tr_weighting = FhTrWeighting::kCapacity;
    } else if (v == "as_printed") {
      s.fh_tr_weighting = FhTrWeighting::kAsPrinted;
    } else {
      throw ConfigError("system.fh_tr_weighting", "expected \"capacity\" or \"as_printed\"");
    }
  }
  s.relax_max_iters = integer_or(sys, "relax_max_iters", sp, 200);
  s.ccg_max_iters = integer_or(sys, "ccg_max_iters", sp, 25);
  s.subproblem_node_limit = integer_or(sys, "subproblem_node_limit", sp, 2000);
  s.master_node_limit = integer_or(sys, "master_node_limit", sp, 200000);

  validate(s);
  return s;
}

SystemSpec parse_system_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
    const auto nl = text.rfind('\n', byte == 0 ? 0 : byte - 1);
    const std::size_t col = nl == std::string::npos ? byte + 1 : byte - nl;
    throw ConfigError(fmt::format("line {}, column {}", line, col), "JSON syntax error");
  }
  return parse_system(doc);
}

SystemSpec load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_system_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.locus().empty() ? path.string() : path.string() + ": " + e.locus(), e.message());
  }
}

json to_json(const SystemSpec& s) {
  json doc;
  json sys;
  sys["n_periods"] = s.n_periods;
  sys["b_base"] = s.b_base;
  sys["damping_d"] = s.damping_d;
  sys["f0"] = s.f0;
  sys["f_min"] = s.f_min;
  sys["delta_p_fraction"] = s.delta_p_fraction;
  sys["punish_price"] = s.punish_price;
  sys["delta_cr"] = s.delta_cr;
  sys["lpun_tol"] = s.lpun_tol;
  sys["max_outer_iters"] = s.max_outer_iters;
  sys["ccg_gap_tol"] = s.ccg_gap_tol;
  sys["uncertainty_budget"] = s.uncertainty_budget ? json(*s.uncertainty_budget) : json(nullptr);
  sys["fh_tr_weighting"] = s.fh_tr_weighting == FhTrWeighting::kCapacity ? "capacity" : "as_printed";
  sys["relax_max_iters"] = s.relax_max_iters;
  sys["ccg_max_iters"] = s.ccg_max_iters;
  sys["subproblem_node_limit"] = s.subproblem_node_limit;
  sys["master_node_limit"] = s.master_node_limit;
  doc["system"] = sys;

  json gens = json::array();
  for (const GeneratorSpec& g : s.generators) {
    gens.push_back({{"id", g.id}, {"t_on_min", g.t_on_min}, {"t_off_min", g.t_off_min}, {"p_min", g.p_min},
                    {"p_max", g.p_max}, {"ramp_down", g.ramp_down}, {"ramp_up", g.ramp_up},
                    {"inertia_h", g.inertia_h}, {"droop_inv", g.droop_inv}, {"f_h", g.f_h}, {"t_r", g.t_r},
                    {"cost_up", g.cost_up}, {"cost_down", g.cost_down}, {"cost_energy", g.cost_energy},
                    {"initial_on", g.initial_on}});
  }
  doc["generators"] = gens;
  json stor = json::array();
  for (const StorageSpec& e : s.storages) {
    stor.push_back({{"id", e.id}, {"p_max", e.p_max}, {"e_min", e.e_min}, {"e_max", e.e_max},
                    {"e_init", e.e_init}, {"eta_ch", e.eta_ch}, {"eta_dc", e.eta_dc},
                    {"cost_throughput", e.cost_throughput}});
  }
  doc["storages"] = stor;
  auto flex = [](const std::vector<FlexLoadSpec>& v) {
    json out = json::array();
    for (const FlexLoadSpec& f : v) {
      json o = {{"id", f.id}, {"cap_min", f.cap_min}, {"cap_max", f.cap_max}, {"cost", f.cost}};
      if (f.cap_max_load_fraction) o["cap_max_load_fraction"] = *f.cap_max_load_fraction;
      out.push_back(o);
    }
    return out;
  };
  doc["fqr_loads"] = flex(s.fqr_loads);
  doc["cl_loads"] = flex(s.cl_loads);
  json ren = json::array();
  for (const RenewableSeries& r : s.renewables) {
    ren.push_back({{"id", r.id}, {"expected", r.expected}, {"half_width", r.half_width}});
  }
  doc["renewables"] = ren;
  json dem = json::array();
  for (const DemandSeries& d : s.demands) dem.push_back({{"id", d.id}, {"demand", d.demand}});
  doc["demands"] = dem;
  return doc;
}

void validate(const SystemSpec& s) {
  require(!s.generators.empty(), "generators", "no synchronous generators");
  require(s.n_periods >= 1, "system.n_periods", "must be at least 1");
  require(finite(s.b_base) && s.b_base > 0, "system.b_base", "must be positive");
  require(finite(s.damping_d) && s.damping_d >= 0, "system.damping_d", "must be non-negative");
  require(finite(s.f0) && s.f0 > 0, "system.f0", "must be positive");
  require(finite(s.f_min) && s.f_min > 0 && s.f_min < s.f0, "system.f_min", "must lie in (0, f0)");
  require(s.delta_p_fraction > 0 && s.delta_p_fraction < 1, "system.delta_p_fraction", "must lie in (0, 1)");
  require(finite(s.punish_price) && s.punish_price > 0, "system.punish_price", "must be positive");
  require(finite(s.delta_cr) && s.delta_cr > 0, "system.delta_cr", "must be positive");
  require(finite(s.lpun_tol) && s.lpun_tol >= 0, "system.lpun_tol", "must be non-negative");
  require(s.max_outer_iters >= 1, "system.max_outer_iters", "must be at least 1");
  require(finite(s.ccg_gap_tol) && s.ccg_gap_tol >= 0, "system.ccg_gap_tol", "must be non-negative");
  require(s.relax_max_iters >= 1, "system.relax_max_iters", "must be at least 1");
  require(s.ccg_max_iters >= 1, "system.ccg_max_iters", "must be at least 1");
  require(s.subproblem_node_limit >= 1, "system.subproblem_node_limit", "must be at least 1");
  require(s.master_node_limit >= 1, "system.master_node_limit", "must be at least 1");
  if (s.uncertainty_budget) {
    const long cells = static_cast<long>(s.renewables.size()) * s.n_periods;
    require(*s.uncertainty_budget >= 0 && *s.uncertainty_budget <= cells, "system.uncertainty_budget",
            fmt::format("must lie in [0, {}]", cells));
  }

  std::set<std::string> ids;
  auto unique = [&](const std::string& id, const std::string& field) {
    require(!id.empty(), field, "id must be non-empty");
    require(ids.insert(id).second, field, fmt::format("duplicate id '{}'", id));
  };
  auto check_series = [&](const std::vector<double>& v, const std::string& field) {
    require(static_cast<int>(v.size()) == s.n_periods, field,
            fmt::format("has {} entries, expected n_periods = {}", v.size(), s.n_periods));
    for (std::size_t t = 0; t < v.size(); ++t) require(finite(v[t]), at(field, t), "must be finite");
  };

  for (std::size_t i = 0; i < s.generators.size(); ++i) {
    const GeneratorSpec& g = s.generators[i];
    const std::string p = at("generators", i);
    unique(g.id, p + ".id");
    require(finite(g.p_min) && g.p_min >= 0, p + ".p_min", "must be non-negative");
    require(finite(g.p_max) && g.p_max >= g.p_min, p + ".p_max", "must be at least p_min");
    require(g.p_max > 0, p + ".p_max", "must be positive");
    require(finite(g.ramp_down) && g.ramp_down > 0, p + ".ramp_down", "must be positive");
    require(finite(g.ramp_up) && g.ramp_up > 0, p + ".ramp_up", "must be positive");
    require(g.t_on_min >= 1, p + ".t_on_min", "must be at least 1");
    require(g.t_off_min >= 1, p + ".t_off_min", "must be at least 1");
    require(finite(g.inertia_h) && g.inertia_h > 0, p + ".inertia_h", "must be positive");
    require(finite(g.droop_inv) && g.droop_inv > 0, p + ".droop_inv", "must be positive");
    require(g.f_h >= 0 && g.f_h <= 1, p + ".f_h", "must lie in [0, 1]");
    require(finite(g.t_r) && g.t_r > 0, p + ".t_r", "must be positive");
    require(finite(g.cost_up) && g.cost_up >= 0, p + ".cost_up", "must be non-negative");
    require(finite(g.cost_down) && g.cost_down >= 0, p + ".cost_down", "must be non-negative");
    require(finite(g.cost_energy), p + ".cost_energy", "must be finite");
  }
  for (std::size_t i = 0; i < s.storages.size(); ++i) {
    const StorageSpec& e = s.storages[i];
    const std::string p = at("storages", i);
    unique(e.id, p + ".id");
    require(finite(e.p_max) && e.p_max > 0, p + ".p_max", "must be positive");
    require(e.eta_ch > 0 && e.eta_ch <= 1, p + ".eta_ch", "must lie in (0, 1]");
    require(e.eta_dc > 0 && e.eta_dc <= 1, p + ".eta_dc", "must lie in (0, 1]");
    require(finite(e.e_min) && e.e_min >= 0, p + ".e_min", "must be non-negative");
    require(finite(e.e_max) && e.e_max >= e.e_min, p + ".e_max", "must be at least e_min");
    require(e.e_init >= e.e_min && e.e_init <= e.e_max, p + ".e_init", "must lie in [e_min, e_max]");
    require(finite(e.cost_throughput) && e.cost_throughput >= 0, p + ".cost_throughput", "must be non-negative");
  }
  auto check_flex = [&](const std::vector<FlexLoadSpec>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const FlexLoadSpec& f = v[i];
      const std::string p = at(name, i);
      unique(f.id, p + ".id");
      require(finite(f.cap_min) && f.cap_min >= 0, p + ".cap_min", "must be non-negative");
      require(finite(f.cap_max) && f.cap_max >= f.cap_min, p + ".cap_max", "must be at least cap_min");
      require(finite(f.cost) && f.cost >= 0, p + ".cost", "must be non-negative");
      if (f.cap_max_load_fraction) {
        require(*f.cap_max_load_fraction >= 0 && *f.cap_max_load_fraction <= 1, p + ".cap_max_load_fraction",
                "must lie in [0, 1]");
      }
    }
  };
  check_flex(s.fqr_loads, "fqr_loads");
  check_flex(s.cl_loads, "cl_loads");
  for (std::size_t i = 0; i < s.renewables.size(); ++i) {
    const RenewableSeries& r = s.renewables[i];
    const std::string p = at("renewables", i);
    unique(r.id, p + ".id");
    check_series(r.expected, p + ".expected");
    check_series(r.half_width, p + ".half_width");
    for (std::size_t t = 0; t < r.expected.size(); ++t) {
      require(r.half_width[t] >= 0, at(p + ".half_width", t), "must be non-negative");
      require(r.expected[t] - r.half_width[t] >= 0, at(p + ".half_width", t), "exceeds expected output");
    }
  }
  require(!s.demands.empty(), "demands", "no demand series");
  for (std::size_t i = 0; i < s.demands.size(); ++i) {
    const DemandSeries& d = s.demands[i];
    const std::string p = at("demands", i);
    unique(d.id, p + ".id");
    check_series(d.demand, p + ".demand");
    for (std::size_t t = 0; t < d.demand.size(); ++t) {
      require(d.demand[t] >= 0, at(p + ".demand", t), "must be non-negative");
    }
  }
  // Flexible-load lower bounds must stay reachable in every period.
  for (int t = 1; t <= s.n_periods; ++t) {
    for (std::size_t i = 0; i < s.cl_loads.size(); ++i) {
      require(cap_upper(s, s.cl_loads[i], t) >= s.cl_loads[i].cap_min, at("cl_loads", i) + ".cap_min",
              fmt::format("exceeds the load-fraction cap in period {}", t));
    }
    for (std::size_t i = 0; i < s.fqr_loads.size(); ++i) {
      require(cap_upper(s, s.fqr_loads[i], t) >= s.fqr_loads[i].cap_min, at("fqr_loads", i) + ".cap_min",
              fmt::format("exceeds the load-fraction cap in period {}", t));
    }
  }
}

double total_demand(const SystemSpec& spec, int t) {
  if (t < 1 || t > spec.n_periods) {
    throw DomainError(fmt::format("period {} outside 1..{}", t, spec.n_periods));
  }
  double sum = 0.0;
  for (const DemandSeries& d : spec.demands) sum += d.demand[static_cast<std::size_t>(t - 1)];
  return sum;
}

double delta_p(const SystemSpec& spec, int t) { return spec.delta_p_fraction * total_demand(spec, t); }

double cap_upper(const SystemSpec& spec, const FlexLoadSpec& load, int t) {
  if (!load.cap_max_load_fraction) return load.cap_max;
  return std::min(load.cap_max, *load.cap_max_load_fraction * total_demand(spec, t));
}

}  // namespace ced::model
