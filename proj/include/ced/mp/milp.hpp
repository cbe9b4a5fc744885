#pragma once

#include <optional>
#include <vector>

#include "ced/mp/lp.hpp"

namespace ced::mp {

enum class MilpStatus { kOptimal, kInfeasible, kUnbounded, kNodeLimit };

const char* to_string(MilpStatus s);

struct IncumbentRecord {
  long node = 0;
  double objective = 0.0;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::kInfeasible;
  double objective = 0.0;   // incumbent, problem sense
  double best_bound = 0.0;  // proven bound, problem sense
  std::vector<double> x;    // empty if no incumbent
  std::vector<IncumbentRecord> history;
  long nodes = 0;
  long lp_iterations = 0;
  bool has_incumbent() const { return !x.empty(); }
};

struct MilpOptions {
  long node_limit = 200000;
  double absolute_gap = Tolerances::kMilpAbsoluteGap;
  double relative_gap = 0.0;
  // Known achievable objective (problem sense): nodes whose bound cannot
  // beat it are pruned. The returned solution may then have no incumbent.
  std::optional<double> cutoff;
};

// Best-first branch-and-bound over the binary variables. Branches on the
// most fractional binary, ties broken by lowest variable index; node ties by
// creation order. Children are warm-started from the parent basis.
// On node-limit exhaustion, status is kNodeLimit with the incumbent (if any)
// and the best open bound reported.
MilpSolution solve_milp(const ProblemDef& p, const MilpOptions& options = {});

}  // namespace ced::mp
