#include "ced/mp/milp.hpp"

#include <cmath>
#include <memory>
#include <queue>

#include "simplex.hpp"

namespace ced::mp {

const char* to_string(MilpStatus s) {
  switch (s) {
    case MilpStatus::kOptimal: return "optimal";
    case MilpStatus::kInfeasible: return "infeasible";
    case MilpStatus::kUnbounded: return "unbounded";
    case MilpStatus::kNodeLimit: return "node-limit";
  }
  return "unknown";
}

namespace {

struct Node {
  double bound = -kInfinity;  // minimisation form
  long id = 0;
  std::vector<std::int8_t> fixed;  // per binary: -1 free, else value
  std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

MilpSolution solve_milp(const ProblemDef& p, const MilpOptions& options) {
  detail::SimplexEngine engine(p);
  const double sign = p.sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;
  const int n = p.num_vars();

  std::vector<int> binaries;
  std::vector<double> base_lo(static_cast<std::size_t>(n));
  std::vector<double> base_hi(base_lo.size());
  for (int j = 0; j < n; ++j) {
    base_lo[j] = p.var(j).lower;
    base_hi[j] = p.var(j).upper;
    if (p.var(j).kind == VarKind::kBinary) {
      binaries.push_back(j);
      base_lo[j] = std::ceil(base_lo[j] - Tolerances::kIntegrality);
      base_hi[j] = std::floor(base_hi[j] + Tolerances::kIntegrality);
    }
  }

  MilpSolution out;
  double incumbent = options.cutoff ? sign * *options.cutoff : kInfinity;
  auto gap_of = [&](double inc) {
    return std::max(options.absolute_gap, options.relative_gap * std::abs(inc));
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{-kInfinity, next_id++, std::vector<std::int8_t>(binaries.size(), -1), nullptr});

  std::vector<double> lo(base_lo.size());
  std::vector<double> hi(base_hi.size());
  bool limit_hit = false;
  double open_bound = kInfinity;

  while (!open.empty()) {
    Node node = open.top();
    if (std::isfinite(incumbent) && node.bound >= incumbent - gap_of(incumbent)) {
      break;  // best-first: everything left is dominated
    }
    if (out.nodes >= options.node_limit) {
      limit_hit = true;
      open_bound = node.bound;
      break;
    }
    open.pop();
    ++out.nodes;

    lo = base_lo;
    hi = base_hi;
    for (std::size_t b = 0; b < binaries.size(); ++b) {
      if (node.fixed[b] >= 0) lo[binaries[b]] = hi[binaries[b]] = node.fixed[b];
    }
    LpSolution lp = engine.solve(lo, hi, node.basis.get());
    detail::audit_if_enabled(p, lp, lo, hi);
    out.lp_iterations += lp.iterations;
    if (lp.status == LpStatus::kInfeasible) continue;
    if (lp.status == LpStatus::kUnbounded) {
      out.status = MilpStatus::kUnbounded;
      return out;
    }
    const double obj = sign * lp.objective;
    if (std::isfinite(incumbent) && obj >= incumbent - gap_of(incumbent)) continue;

    int branch = -1;
    double most = Tolerances::kIntegrality;
    for (std::size_t b = 0; b < binaries.size(); ++b) {
      const double v = lp.x[binaries[b]];
      const double frac = std::abs(v - std::round(v));
      if (frac > most) {
        most = frac;
        branch = static_cast<int>(b);
      }
    }

    if (branch < 0) {
      incumbent = obj;
      out.x = lp.x;
      for (int j : binaries) out.x[j] = std::round(out.x[j]);
      out.objective = lp.objective;
      out.history.push_back({out.nodes, lp.objective});
      continue;
    }

    auto basis = std::make_shared<const Basis>(std::move(lp.basis));
    for (std::int8_t value : {std::int8_t{0}, std::int8_t{1}}) {
      Node child{obj, next_id++, node.fixed, basis};
      child.fixed[branch] = value;
      open.push(std::move(child));
    }
  }

  if (limit_hit) {
    out.status = MilpStatus::kNodeLimit;
    out.best_bound = sign * std::min(open_bound, incumbent);
    return out;
  }
  if (!out.has_incumbent()) {
    out.status = MilpStatus::kInfeasible;
    return out;
  }
  out.status = MilpStatus::kOptimal;
  out.best_bound = out.objective;
  if (!open.empty()) out.best_bound = sign * std::min(open.top().bound, incumbent);
  return out;
}

}  // namespace ced::mp
