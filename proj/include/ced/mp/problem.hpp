#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ced/error.hpp"

namespace ced::mp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary };
enum class RowSense { kLessEqual, kEqual, kGreaterEqual };
enum class ObjectiveSense { kMinimize, kMaximize };

struct Variable {
  std::string id;
  double lower = 0.0;
  double upper = kInfinity;
  VarKind kind = VarKind::kContinuous;
  double cost = 0.0;
};

struct Term {
  int var = -1;
  double coef = 0.0;
};

struct Row {
  std::string id;
  std::vector<Term> terms;  // sorted by var, no duplicates, no zeros
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

// A linear (mixed-binary) program. Variables and rows are addressed by the
// dense index returned when they are added; ids are for diagnostics and dumps.
class ProblemDef {
 public:
  int add_var(std::string id, double lower, double upper,
              VarKind kind = VarKind::kContinuous, double cost = 0.0);
  // Duplicate variables in `terms` are merged and zero coefficients dropped.
  int add_row(std::string id, std::vector<Term> terms, RowSense sense, double rhs);

  void set_sense(ObjectiveSense sense) { sense_ = sense; }
  ObjectiveSense sense() const { return sense_; }
  void set_cost(int var, double cost) { vars_.at(var).cost = cost; }
  void add_cost(int var, double cost) { vars_.at(var).cost += cost; }
  void set_offset(double offset) { offset_ = offset; }
  void add_offset(double offset) { offset_ += offset; }
  double offset() const { return offset_; }
  void set_bounds(int var, double lower, double upper);
  void set_rhs(int row, double rhs) { rows_.at(row).rhs = rhs; }

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const Variable& var(int j) const { return vars_[static_cast<std::size_t>(j)]; }
  const Row& row(int i) const { return rows_[static_cast<std::size_t>(i)]; }
  const std::vector<Variable>& vars() const { return vars_; }
  const std::vector<Row>& rows() const { return rows_; }
  bool has_binaries() const;

  std::optional<int> find_var(std::string_view id) const;
  std::optional<int> find_row(std::string_view id) const;

  // Objective value of `x` in the problem's own sense, offset included.
  double objective_value(const std::vector<double>& x) const;
  double row_activity(int i, const std::vector<double>& x) const;

  // Throws ModelError on dangling references, NaNs, inverted bounds or
  // binaries whose bounds leave [0, 1].
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
  ObjectiveSense sense_ = ObjectiveSense::kMinimize;
  double offset_ = 0.0;
};

// Writes `p` in CPLEX LP text format. Ids are sanitised to LP-legal names.
void write_lp_format(const ProblemDef& p, std::ostream& out);

}  // namespace ced::mp
