#include "gcimpute/linalg.hpp"

#include <limits>

#include "gcimpute/errors.hpp"

namespace gcimpute {

namespace {

double condition_estimate(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

SpdSolver::SpdSolver(const Eigen::MatrixXd& a) : llt_(a) {
  if (llt_.info() == Eigen::Success) return;
  const Eigen::MatrixXd ridged =
      a + kFactorRidge * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  llt_.compute(ridged);
  ridged_ = true;
  if (llt_.info() != Eigen::Success) {
    const double cond = condition_estimate(a);
    throw NumericalError("matrix is not positive definite (condition estimate " +
                             std::to_string(cond) + ")",
                         cond);
  }
}

Eigen::MatrixXd SpdSolver::inverse() const {
  const auto n = llt_.matrixLLT().rows();
  return llt_.solve(Eigen::MatrixXd::Identity(n, n));
}

double min_eigenvalue(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& a, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = a(rows[i], cols[j]);
  return out;
}

Eigen::VectorXd subvector(const Eigen::VectorXd& v, const std::vector<int>& index) {
  Eigen::VectorXd out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out(i) = v(index[i]);
  return out;
}

}  // namespace gcimpute
