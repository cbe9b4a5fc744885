#include "ced/mp/problem.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace ced::mp {

int ProblemDef::add_var(std::string id, double lower, double upper, VarKind kind,
                        double cost) {
  const int index = num_vars();
  if (!var_index_.emplace(id, index).second) {
    throw ModelError(fmt::format("duplicate variable id '{}'", id));
  }
  vars_.push_back(Variable{std::move(id), lower, upper, kind, cost});
  return index;
}

int ProblemDef::add_row(std::string id, std::vector<Term> terms, RowSense sense,
                        double rhs) {
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  merged.reserve(terms.size());
  for (const Term& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });

  const int index = num_rows();
  if (!row_index_.emplace(id, index).second) {
    throw ModelError(fmt::format("duplicate row id '{}'", id));
  }
  rows_.push_back(Row{std::move(id), std::move(merged), sense, rhs});
  return index;
}

void ProblemDef::set_bounds(int var, double lower, double upper) {
  Variable& v = vars_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

bool ProblemDef::has_binaries() const {
  return std::any_of(vars_.begin(), vars_.end(),
                     [](const Variable& v) { return v.kind == VarKind::kBinary; });
}

std::optional<int> ProblemDef::find_var(std::string_view id) const {
  auto it = var_index_.find(std::string(id));
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> ProblemDef::find_row(std::string_view id) const {
  auto it = row_index_.find(std::string(id));
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

double ProblemDef::objective_value(const std::vector<double>& x) const {
  double value = offset_;
  for (std::size_t j = 0; j < vars_.size(); ++j) value += vars_[j].cost * x[j];
  return value;
}

double ProblemDef::row_activity(int i, const std::vector<double>& x) const {
  double a = 0.0;
  for (const Term& t : rows_[static_cast<std::size_t>(i)].terms) {
    a += t.coef * x[static_cast<std::size_t>(t.var)];
  }
  return a;
}

void ProblemDef::validate() const {
  for (const Variable& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost)) {
      throw ModelError(fmt::format("variable '{}': NaN bound or non-finite cost", v.id));
    }
    if (v.lower > v.upper) {
      throw ModelError(fmt::format("variable '{}': lower {} > upper {}", v.id, v.lower, v.upper));
    }
    if (v.lower == kInfinity || v.upper == -kInfinity) {
      throw ModelError(fmt::format("variable '{}': empty bound interval", v.id));
    }
    if (v.kind == VarKind::kBinary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw ModelError(fmt::format("binary '{}': bounds must lie in [0, 1]", v.id));
    }
  }
  for (const Row& r : rows_) {
    if (!std::isfinite(r.rhs)) {
      throw ModelError(fmt::format("row '{}': non-finite right-hand side", r.id));
    }
    for (const Term& t : r.terms) {
      if (t.var < 0 || t.var >= num_vars()) {
        throw ModelError(fmt::format("row '{}': reference to undeclared variable {}", r.id, t.var));
      }
      if (!std::isfinite(t.coef)) {
        throw ModelError(fmt::format("row '{}': non-finite coefficient", r.id));
      }
    }
  }
  if (!std::isfinite(offset_)) throw ModelError("non-finite objective offset");
}

namespace {

std::string lp_name(std::string_view id, char prefix, int index) {
  std::string out;
  out.reserve(id.size() + 1);
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front())) || out.front() == '.') {
    out = fmt::format("{}{}_{}", prefix, index, out);
  }
  return out;
}

void write_terms(std::ostream& out, const std::vector<std::string>& names,
                 const std::vector<Term>& terms) {
  int on_line = 0;
  bool first = true;
  for (const Term& t : terms) {
    const char sign = t.coef < 0 ? '-' : '+';
    if (first) {
      out << (t.coef < 0 ? "- " : "");
    } else {
      out << ' ' << sign << ' ';
    }
    out << fmt::format("{:.17g} ", std::abs(t.coef)) << names[static_cast<std::size_t>(t.var)];
    first = false;
    if (++on_line == 6) {
      out << "\n   ";
      on_line = 0;
    }
  }
  if (first) out << "0 " << (names.empty() ? std::string("x") : names.front());
}

}  // namespace

void write_lp_format(const ProblemDef& p, std::ostream& out) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p.num_vars()));
  for (int j = 0; j < p.num_vars(); ++j) names.push_back(lp_name(p.var(j).id, 'x', j));

  out << (p.sense() == ObjectiveSense::kMinimize ? "Minimize\n" : "Maximize\n") << " obj: ";
  std::vector<Term> obj;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).cost != 0.0) obj.push_back({j, p.var(j).cost});
  }
  write_terms(out, names, obj);
  if (p.offset() != 0.0) out << fmt::format(" + {:.17g} constant", p.offset());
  out << "\nSubject To\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    const Row& r = p.row(i);
    out << ' ' << lp_name(r.id, 'c', i) << ": ";
    write_terms(out, names, r.terms);
    const char* op = r.sense == RowSense::kLessEqual ? "<=" : r.sense == RowSense::kEqual ? "=" : ">=";
    out << ' ' << op << ' ' << fmt::format("{:.17g}", r.rhs) << '\n';
  }
  if (p.offset() != 0.0) out << " constant_fix: constant = 1\n";
  out << "Bounds\n";
  for (int j = 0; j < p.num_vars(); ++j) {
    const Variable& v = p.var(j);
    if (v.lower == -kInfinity && v.upper == kInfinity) {
      out << ' ' << names[static_cast<std::size_t>(j)] << " free\n";
    } else if (v.lower == v.upper) {
      out << ' ' << names[static_cast<std::size_t>(j)] << fmt::format(" = {:.17g}\n", v.lower);
    } else {
      out << ' ' << (v.lower == -kInfinity ? std::string("-inf") : fmt::format("{:.17g}", v.lower))
          << " <= " << names[static_cast<std::size_t>(j)] << " <= "
          << (v.upper == kInfinity ? std::string("+inf") : fmt::format("{:.17g}", v.upper)) << '\n';
    }
  }
  bool any_binary = false;
  for (int j = 0; j < p.num_vars(); ++j) {
    if (p.var(j).kind != VarKind::kBinary) continue;
    if (!any_binary) out << "Binaries\n";
    any_binary = true;
    out << ' ' << names[static_cast<std::size_t>(j)] << '\n';
  }
  out << "End\n";
}

}  // namespace ced::mp
