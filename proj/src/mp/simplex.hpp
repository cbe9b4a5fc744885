#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cstdint>
#include <span>
#include <vector>

#include "ced/mp/lp.hpp"

namespace ced::mp::detail {

void audit_if_enabled(const ProblemDef& p, const LpSolution& s, std::span<const double> lower,
                      std::span<const double> upper);

// LU of the basis matrix plus a product-form eta file for updates between
// refactorisations.
class BasisFactor {
 public:
  // Returns false when the basis matrix is singular.
  bool factorize(int m, const std::vector<Eigen::Triplet<double>>& triplets);
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void push_eta(int r, const Eigen::VectorXd& alpha);
  int eta_count() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int r = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
  };
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  int m_ = 0;
};

// Compiled column-wise form of a ProblemDef: min c'x s.t. A x - s = 0,
// x in [l, u], s in [row_lo, row_hi]. Columns n..n+m-1 are the logicals s.
class SimplexEngine {
 public:
  explicit SimplexEngine(const ProblemDef& p);

  LpSolution solve(std::span<const double> lower, std::span<const double> upper,
                   const Basis* warm);

  int rows() const { return m_; }
  int cols() const { return n_; }

 private:
  double column_dot(int j, const Eigen::VectorXd& y) const;
  void load_column(int j, Eigen::VectorXd& out) const;
  bool refactor();
  void compute_basic_values();
  void slack_basis();
  LpSolution finish(LpStatus status, long iterations);

  const ProblemDef* problem_;
  int m_ = 0;
  int n_ = 0;
  double sign_ = 1.0;
  std::vector<int> col_start_;
  std::vector<int> row_idx_;
  std::vector<double> val_;
  std::vector<double> cost_;  // size n + m, min form
  std::vector<double> row_lo_;
  std::vector<double> row_hi_;

  // per-solve state
  std::vector<double> lb_;
  std::vector<double> ub_;
  std::vector<double> x_;
  std::vector<std::uint8_t> status_;
  std::vector<int> head_;
  BasisFactor factor_;
};

}  // namespace ced::mp::detail
