#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"

namespace gcimpute {

/// One row mapped to the latent scale: a region per column plus the
/// observed / missing index split.
struct RowObservation {
  std::vector<LatentRegion> regions;
  std::vector<int> observed;
  std::vector<int> missing;

  static RowObservation from_regions(std::vector<LatentRegion> regions);
  std::size_t dim() const { return regions.size(); }
};

/// Conditional latent moments E[z | x_O] and E[z z^T | x_O] for one row.
struct EStepResult {
  Eigen::VectorXd ez;
  Eigen::MatrixXd ezz;
};

struct TruncatedMoments {
  double mean;
  double variance;
};

/// Below this truncation mass the univariate moments collapse to the nearest
/// boundary with zero variance.
inline constexpr double kTruncationMassFloor = 1e-12;

/// Mean and variance of N(mu, sigma2) restricted to [lower, upper].
TruncatedMoments truncnorm_moments(double mu, double sigma2, double lower, double upper);

struct EStepOptions {
  /// Sweep stops once no interval coordinate mean moves by more than this.
  double tolerance = 1e-4;
  int max_sweeps = 50;
};

/// Mean and covariance of a Gaussian restricted to an axis-aligned box.
struct BoxMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int sweeps = 0;
};

/// Site parameters of the expectation-propagation sweep, in natural form.
/// Passing the sites back in resumes the sweep from where it stopped.
struct EpSites {
  Eigen::VectorXd precision;
  Eigen::VectorXd shift;
};

/// Expectation propagation over the box: every coordinate is updated as a
/// univariate truncated normal under its cavity distribution, swept until
/// the posterior mean moves less than options.tolerance.
BoxMoments ep_box_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const EStepOptions& options = {}, EpSites* sites = nullptr);

/// Closed-form moments of a bivariate normal truncated to a rectangle.
BoxMoments bivariate_box_moments(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                 const Eigen::Vector2d& lower, const Eigen::Vector2d& upper);

/// Approximate conditional latent moments of one row under correlation sigma.
///
/// Point coordinates stay fixed. Interval coordinates are treated jointly as
/// a box-truncated Gaussian conditional on the points: exact for one or two
/// intervals, expectation propagation for three or more. Missing coordinates
/// follow the Gaussian regression on the observed block, including the
/// propagated interval covariance.
EStepResult row_estep(const RowObservation& row, const Eigen::MatrixXd& sigma,
                      const EStepOptions& options = {});

/// Rejection-sampling estimate of the same moments. Point regions are
/// conditioned on exactly; the remaining coordinates are drawn until `draws`
/// samples land inside every interval.
EStepResult truncmvn_oracle(std::span<const LatentRegion> regions, const Eigen::MatrixXd& sigma,
                            std::size_t draws, std::uint64_t seed);

}  // namespace gcimpute
