#include "simplex.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ced::mp::detail {
namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kHarrisTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr int kRefactorInterval = 64;
constexpr int kDegenerateLimit = 50;
constexpr int kMaxBasisResets = 4;

}  // namespace

bool BasisFactor::factorize(int m, const std::vector<Eigen::Triplet<double>>& triplets) {
  m_ = m;
  etas_.clear();
  if (m == 0) return true;
  Eigen::SparseMatrix<double> b(m, m);
  b.setFromTriplets(triplets.begin(), triplets.end());
  b.makeCompressed();
  lu_.analyzePattern(b);
  lu_.factorize(b);
  return lu_.info() == Eigen::Success;
}

void BasisFactor::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const Eta& e : etas_) {
    const double vr = v[e.r] / e.pivot;
    v[e.r] = vr;
    if (vr == 0.0) continue;
    for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * vr;
  }
}

void BasisFactor::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = v[it->r];
    for (std::size_t k = 0; k < it->idx.size(); ++k) s -= it->val[k] * v[it->idx[k]];
    v[it->r] = s / it->pivot;
  }
  v = lu_.transpose().solve(v);
}

void BasisFactor::push_eta(int r, const Eigen::VectorXd& alpha) {
  Eta e;
  e.r = r;
  e.pivot = alpha[r];
  for (int i = 0; i < alpha.size(); ++i) {
    if (i != r && std::abs(alpha[i]) > kDropTol) {
      e.idx.push_back(i);
      e.val.push_back(alpha[i]);
    }
  }
  etas_.push_back(std::move(e));
}

SimplexEngine::SimplexEngine(const ProblemDef& p) : problem_(&p) {
  p.validate();
  n_ = p.num_vars();
  m_ = p.num_rows();
  sign_ = p.sense() == ObjectiveSense::kMinimize ? 1.0 : -1.0;

  std::vector<int> counts(static_cast<std::size_t>(n_), 0);
  for (const Row& r : p.rows()) {
    for (const Term& t : r.terms) ++counts[static_cast<std::size_t>(t.var)];
  }
  col_start_.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + counts[j];
  row_idx_.resize(static_cast<std::size_t>(col_start_.back()));
  val_.resize(row_idx_.size());
  std::vector<int> fill(col_start_.begin(), col_start_.end() - 1);
  for (int i = 0; i < m_; ++i) {
    for (const Term& t : p.row(i).terms) {
      const int k = fill[static_cast<std::size_t>(t.var)]++;
      row_idx_[k] = i;
      val_[k] = t.coef;
    }
  }

  cost_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
  for (int j = 0; j < n_; ++j) cost_[j] = sign_ * p.var(j).cost;
  row_lo_.resize(static_cast<std::size_t>(m_));
  row_hi_.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    const Row& r = p.row(i);
    row_lo_[i] = r.sense == RowSense::kLessEqual ? -kInfinity : r.rhs;
    row_hi_[i] = r.sense == RowSense::kGreaterEqual ? kInfinity : r.rhs;
  }
}

double SimplexEngine::column_dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) s += val_[k] * y[row_idx_[k]];
  return s;
}

void SimplexEngine::load_column(int j, Eigen::VectorXd& out) const {
  out.setZero(m_);
  if (j >= n_) {
    out[j - n_] = -1.0;
    return;
  }
  for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) out[row_idx_[k]] = val_[k];
}

void SimplexEngine::slack_basis() {
  const int total = n_ + m_;
  status_.assign(static_cast<std::size_t>(total), Basis::kAtLower);
  head_.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    status_[n_ + i] = Basis::kBasic;
    head_[i] = n_ + i;
  }
}

bool SimplexEngine::refactor() {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(m_) * 3);
  for (int k = 0; k < m_; ++k) {
    const int j = head_[k];
    if (j >= n_) {
      triplets.emplace_back(j - n_, k, -1.0);
    } else {
      for (int e = col_start_[j]; e < col_start_[j + 1]; ++e) {
        triplets.emplace_back(row_idx_[e], k, val_[e]);
      }
    }
  }
  return factor_.factorize(m_, triplets);
}

void SimplexEngine::compute_basic_values() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (status_[j] == Basis::kBasic || x_[j] == 0.0) continue;
    if (j >= n_) {
      rhs[j - n_] += x_[j];
    } else {
      for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) rhs[row_idx_[k]] -= val_[k] * x_[j];
    }
  }
  factor_.ftran(rhs);
  for (int k = 0; k < m_; ++k) x_[head_[k]] = rhs[k];
}

LpSolution SimplexEngine::finish(LpStatus status, long iterations) {
  LpSolution s;
  s.status = status;
  s.iterations = iterations;
  s.basis.status = status_;
  if (status != LpStatus::kOptimal) return s;

  Eigen::VectorXd y(m_);
  for (int k = 0; k < m_; ++k) y[k] = cost_[head_[k]];
  factor_.btran(y);

  s.x.assign(x_.begin(), x_.begin() + n_);
  s.reduced_costs.resize(static_cast<std::size_t>(n_));
  for (int j = 0; j < n_; ++j) {
    s.reduced_costs[j] = status_[j] == Basis::kBasic ? 0.0 : cost_[j] - column_dot(j, y);
  }
  s.duals.resize(static_cast<std::size_t>(m_));
  for (int i = 0; i < m_; ++i) {
    // y_i = df/db_i for the internal row a_i x - s_i = 0.
    const double dfdb = y[i];
    s.duals[i] = problem_->row(i).sense == RowSense::kGreaterEqual ? dfdb : -dfdb;
  }
  s.objective = problem_->objective_value(s.x);
  return s;
}

LpSolution SimplexEngine::solve(std::span<const double> lower, std::span<const double> upper,
                                const Basis* warm) {
  const int total = n_ + m_;
  lb_.resize(static_cast<std::size_t>(total));
  ub_.resize(static_cast<std::size_t>(total));
  for (int j = 0; j < n_; ++j) {
    lb_[j] = lower.empty() ? problem_->var(j).lower : lower[j];
    ub_[j] = upper.empty() ? problem_->var(j).upper : upper[j];
    if (lb_[j] > ub_[j] + kPrimalTol) {
      status_.assign(static_cast<std::size_t>(total), Basis::kAtLower);
      return finish(LpStatus::kInfeasible, 0);
    }
  }
  for (int i = 0; i < m_; ++i) {
    lb_[n_ + i] = row_lo_[i];
    ub_[n_ + i] = row_hi_[i];
  }

  bool warm_ok = warm != nullptr && warm->status.size() == static_cast<std::size_t>(total) &&
                 std::count(warm->status.begin(), warm->status.end(), Basis::kBasic) == m_;
  if (warm_ok) {
    status_ = warm->status;
    head_.clear();
    for (int j = 0; j < total; ++j) {
      if (status_[j] == Basis::kBasic) head_.push_back(j);
    }
  } else {
    slack_basis();
  }

  x_.assign(static_cast<std::size_t>(total), 0.0);
  auto place_nonbasic = [&] {
    for (int j = 0; j < total; ++j) {
      std::uint8_t& st = status_[j];
      if (st == Basis::kBasic) continue;
      const bool has_lo = std::isfinite(lb_[j]);
      const bool has_up = std::isfinite(ub_[j]);
      if (st == Basis::kAtUpper && has_up) {
        x_[j] = ub_[j];
      } else if (has_lo) {
        st = Basis::kAtLower;
        x_[j] = lb_[j];
      } else if (has_up) {
        st = Basis::kAtUpper;
        x_[j] = ub_[j];
      } else {
        st = Basis::kFreeZero;
        x_[j] = 0.0;
      }
    }
  };
  place_nonbasic();

  int resets = 0;
  if (!refactor()) {
    slack_basis();
    place_nonbasic();
    refactor();
    ++resets;
  }
  compute_basic_values();

  const long cap = 50L * (m_ + n_) + 100;
  long iter = 0;
  int degenerate_run = 0;
  bool bland = false;
  Eigen::VectorXd y(m_);
  Eigen::VectorXd alpha(m_);

  std::vector<double> col_weight(static_cast<std::size_t>(total), 1.0);
  for (int j = 0; j < n_; ++j) {
    double w = 1.0;
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) w += val_[k] * val_[k];
    col_weight[j] = w;
  }
  for (int i = 0; i < m_; ++i) col_weight[n_ + i] = 2.0;

  while (true) {
    if (++iter > cap) {
      throw NumericalError(fmt::format(
          "simplex iteration cap {} exceeded ({} rows, {} cols)", cap, m_, n_));
    }
    if (factor_.eta_count() >= kRefactorInterval) {
      if (!refactor()) {
        if (++resets > kMaxBasisResets) throw NumericalError("repeatedly singular basis");
        slack_basis();
        place_nonbasic();
        refactor();
      }
      compute_basic_values();
    }

    // Phase selection from the current basic values.
    bool phase1 = false;
    for (int k = 0; k < m_; ++k) {
      const int j = head_[k];
      if (x_[j] < lb_[j] - kPrimalTol || x_[j] > ub_[j] + kPrimalTol) {
        phase1 = true;
        break;
      }
    }
    for (int k = 0; k < m_; ++k) {
      const int j = head_[k];
      if (phase1) {
        y[k] = x_[j] < lb_[j] - kPrimalTol ? -1.0 : (x_[j] > ub_[j] + kPrimalTol ? 1.0 : 0.0);
      } else {
        y[k] = cost_[j];
      }
    }
    factor_.btran(y);

    // Pricing.
    int q = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < total; ++j) {
      const std::uint8_t st = status_[j];
      if (st == Basis::kBasic || lb_[j] == ub_[j]) continue;
      const double c = phase1 ? 0.0 : cost_[j];
      const double d = c - column_dot(j, y);
      const double tol = kDualTol * (1.0 + std::abs(c));
      int this_dir = 0;
      if (st == Basis::kAtLower && d < -tol) {
        this_dir = 1;
      } else if (st == Basis::kAtUpper && d > tol) {
        this_dir = -1;
      } else if (st == Basis::kFreeZero && std::abs(d) > tol) {
        this_dir = d < 0 ? 1 : -1;
      }
      if (this_dir == 0) continue;
      if (bland) {
        q = j;
        dir = this_dir;
        break;
      }
      const double score = d * d / col_weight[j];
      if (score > best) {
        best = score;
        q = j;
        dir = this_dir;
      }
    }

    if (q < 0) {
      if (factor_.eta_count() > 0) {
        // Confirm on a fresh factorisation before concluding.
        if (!refactor()) {
          if (++resets > kMaxBasisResets) throw NumericalError("repeatedly singular basis");
          slack_basis();
          place_nonbasic();
          refactor();
        }
        compute_basic_values();
        continue;
      }
      return finish(phase1 ? LpStatus::kInfeasible : LpStatus::kOptimal, iter - 1);
    }

    load_column(q, alpha);
    factor_.ftran(alpha);

    // Ratio test. rate_k is the change of basic k per unit step.
    auto block = [&](int k, double tol_shift, double& distance, double& target) -> bool {
      const double a = alpha[k];
      if (std::abs(a) <= kPivotTol) return false;
      const double rate = -dir * a;
      const int j = head_[k];
      const double xv = x_[j];
      if (rate < 0) {
        if (phase1 && xv > ub_[j] + kPrimalTol) {
          target = ub_[j];
        } else if (xv < lb_[j] - kPrimalTol || !std::isfinite(lb_[j])) {
          return false;
        } else {
          target = lb_[j];
        }
        distance = (xv - target + tol_shift) / -rate;
      } else {
        if (phase1 && xv < lb_[j] - kPrimalTol) {
          target = lb_[j];
        } else if (xv > ub_[j] + kPrimalTol || !std::isfinite(ub_[j])) {
          return false;
        } else {
          target = ub_[j];
        }
        distance = (target - xv + tol_shift) / rate;
      }
      return true;
    };

    int leave = -1;
    double theta = kInfinity;
    double leave_target = 0.0;
    if (bland) {
      int leave_col = total;
      for (int k = 0; k < m_; ++k) {
        double dist = 0.0;
        double target = 0.0;
        if (!block(k, 0.0, dist, target)) continue;
        dist = std::max(dist, 0.0);
        if (dist < theta - 1e-12 || (dist <= theta + 1e-12 && head_[k] < leave_col)) {
          theta = dist;
          leave = k;
          leave_col = head_[k];
          leave_target = target;
        }
      }
    } else {
      double theta_max = kInfinity;
      for (int k = 0; k < m_; ++k) {
        double dist = 0.0;
        double target = 0.0;
        if (block(k, kHarrisTol, dist, target)) theta_max = std::min(theta_max, dist);
      }
      if (std::isfinite(theta_max)) {
        double best_pivot = 0.0;
        for (int k = 0; k < m_; ++k) {
          double dist = 0.0;
          double target = 0.0;
          if (!block(k, 0.0, dist, target) || dist > theta_max) continue;
          if (std::abs(alpha[k]) > best_pivot) {
            best_pivot = std::abs(alpha[k]);
            leave = k;
            theta = std::max(dist, 0.0);
            leave_target = target;
          }
        }
      }
    }

    const double range = ub_[q] - lb_[q];
    const bool flip = std::isfinite(range) && range <= theta;
    if (leave < 0 && !flip) {
      if (!phase1) return finish(LpStatus::kUnbounded, iter);
      // A phase-1 ray cannot exist in exact arithmetic; rebuild and retry.
      if (++resets > kMaxBasisResets) throw NumericalError("unbounded phase-1 direction");
      refactor();
      compute_basic_values();
      continue;
    }
    if (flip) theta = range;

    for (int k = 0; k < m_; ++k) {
      if (alpha[k] != 0.0) x_[head_[k]] -= dir * theta * alpha[k];
    }
    if (flip) {
      status_[q] = dir > 0 ? Basis::kAtUpper : Basis::kAtLower;
      x_[q] = dir > 0 ? ub_[q] : lb_[q];
    } else {
      x_[q] += dir * theta;
      const int out = head_[leave];
      x_[out] = leave_target;
      status_[out] = (leave_target == lb_[out]) ? Basis::kAtLower : Basis::kAtUpper;
      status_[q] = Basis::kBasic;
      head_[leave] = q;
      factor_.push_eta(leave, alpha);
    }

    if (theta <= 1e-12) {
      if (++degenerate_run > kDegenerateLimit) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
  }
}

}  // namespace ced::mp::detail
