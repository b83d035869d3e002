#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"
#include "gcimpute/parallel.hpp"
#include "gcimpute/truncnorm.hpp"

namespace gcimpute {

/// Raw data block: one row per record, NaN marks a missing cell.
using DataMatrix = Eigen::MatrixXd;

/// Gaussian copula state: latent correlation plus one marginal per column.
struct CopulaModel {
  Eigen::MatrixXd sigma;
  std::vector<MarginalModel> marginals;

  /// Identity correlation with empty windows of the given capacity.
  static CopulaModel cold_start(std::span<const ColumnKind> kinds,
                                std::size_t window = kDefaultWindow);

  std::size_t dim() const { return marginals.size(); }
  std::vector<ColumnKind> kinds() const;
  /// Latent regions of one raw row under the current marginals.
  RowObservation observe(const Eigen::Ref<const Eigen::VectorXd>& raw) const;
  /// Throws DomainError when sigma is not a valid correlation matrix.
  void validate() const;
};

/// Step sizes for the online update: constant gamma, or c / (t + c).
class StepSchedule {
 public:
  static StepSchedule constant(double gamma);
  static StepSchedule decaying(double c);

  /// Step for the t-th update, t >= 1.
  double gamma(std::size_t t) const;
  /// Use gamma = 1 for the first update (the first batch replaces sigma^0).
  StepSchedule& with_full_first_step(bool on = true) {
    full_first_step_ = on;
    return *this;
  }

  bool is_constant() const { return constant_; }
  double parameter() const { return value_; }
  bool full_first_step() const { return full_first_step_; }

 private:
  StepSchedule(bool constant, double value) : constant_(constant), value_(value) {}
  bool constant_;
  double value_;
  bool full_first_step_ = false;
};

/// Online EM state. `t` counts completed updates.
struct OnlineEmState {
  CopulaModel model;
  std::size_t t = 0;
  StepSchedule schedule = StepSchedule::constant(0.5);
  /// Fully online mode pushes each batch into the marginal windows before the
  /// E-step; minibatch mode keeps marginals fixed.
  bool update_marginals = true;
  EStepOptions estep{};
};

/// What one online update did, for diagnostics and bookkeeping tests.
struct UpdateReport {
  double gamma = 0.0;
  /// Batch mean of the conditional second moments.
  Eigen::MatrixXd batch_moment;
  /// (1 - gamma) sigma^t + gamma * batch_moment, before rescaling.
  Eigen::MatrixXd pre_projection;
  /// Shrinkage applied to restore positive definiteness (0 if none).
  double shrinkage = 0.0;
};

/// D^{-1/2} A D^{-1/2} with D = diag(A).
Eigen::MatrixXd scale_to_correlation(const Eigen::MatrixXd& a);

/// Minimum eigenvalue below which a correlation estimate counts as not PD.
inline constexpr double kMinEigenvalue = 1e-8;

/// Shrinks toward the identity with the smallest of 1e-4, 1e-3, 1e-2, 1e-1
/// that restores positive definiteness. Returns the weight used.
double repair_positive_definite(Eigen::MatrixXd& sigma);

/// Rescaled mean of the per-row second moments.
Eigen::MatrixXd mstep_offline(std::span<const EStepResult> moments);

/// Mean of E[z z^T | x_O] over the rows of `batch`, in fixed summation order.
Eigen::MatrixXd batch_second_moment(const CopulaModel& model,
                                    const Eigen::Ref<const DataMatrix>& batch,
                                    const EStepOptions& options = {},
                                    const Executor& exec = Executor{});

/// One online EM step on a batch of more than p rows.
UpdateReport online_update(OnlineEmState& state, const Eigen::Ref<const DataMatrix>& batch,
                           const Executor& exec = Executor{});

/// Marginals whose windows hold every observed value of each column.
std::vector<MarginalModel> fit_marginals(const Eigen::Ref<const DataMatrix>& data,
                                         std::span<const ColumnKind> kinds);

struct OfflineOptions {
  int max_iter = 50;
  double tolerance = 1e-3;
  EStepOptions estep{};
};

/// Batch EM over all rows until the relative Frobenius change drops below
/// the tolerance. Reports the iteration count through `iterations`.
CopulaModel fit_offline(const Eigen::Ref<const DataMatrix>& data,
                        std::span<const ColumnKind> kinds, const OfflineOptions& options = {},
                        const Executor& exec = Executor{}, int* iterations = nullptr);

/// Sequential online updates over consecutive minibatches with fixed
/// full-data marginals. A trailing remainder of at most p rows joins the
/// previous batch.
CopulaModel fit_minibatch(const Eigen::Ref<const DataMatrix>& data,
                          std::span<const ColumnKind> kinds, std::size_t batch_size,
                          StepSchedule schedule = StepSchedule::decaying(5.0),
                          std::size_t passes = 1, const Executor& exec = Executor{});

/// Row ranges [begin, end) of consecutive batches; see fit_minibatch.
std::vector<std::pair<std::size_t, std::size_t>> partition_batches(std::size_t rows,
                                                                   std::size_t batch_size,
                                                                   std::size_t dim);

struct ImputedRow {
  Eigen::VectorXd values;
  /// Every entry was missing, so each column fell back to its median.
  bool fully_missing = false;
};

/// Fills missing cells with the marginal image of the conditional latent mean.
/// Columns whose marginal has not seen any value stay missing.
ImputedRow impute_row(const CopulaModel& model, const Eigen::Ref<const Eigen::VectorXd>& raw,
                      const EStepOptions& options = {});

DataMatrix impute(const CopulaModel& model, const Eigen::Ref<const DataMatrix>& data,
                  const Executor& exec = Executor{});

}  // namespace gcimpute
