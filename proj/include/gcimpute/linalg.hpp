#pragma once

#include <vector>

#include <Eigen/Dense>

namespace gcimpute {

/// Diagonal ridge added when a Cholesky factorization fails.
inline constexpr double kFactorRidge = 1e-6;

/// Cholesky solver for a symmetric positive-definite matrix that retries once
/// with a small diagonal ridge before giving up with NumericalError.
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::MatrixXd& a);

  template <class Rhs>
  auto solve(const Rhs& b) const {
    return llt_.solve(b);
  }
  Eigen::MatrixXd inverse() const;
  bool ridged() const { return ridged_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool ridged_ = false;
};

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Eigen::MatrixXd& a);

/// Rows/columns `index` of a square matrix.
Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<int>& rows,
                          const std::vector<int>& cols);
Eigen::VectorXd subvector(const Eigen::VectorXd& v, const std::vector<int>& index);

}  // namespace gcimpute
