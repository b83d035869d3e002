#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/copula_em.hpp"
#include "gcimpute/fdr.hpp"
#include "gcimpute/parallel.hpp"

namespace gcimpute {

/// Eigenvalue floor for the inverse square root in correlation_deviation.
inline constexpr double kEigenFloor = 1e-10;

/// || old^{-1/2} new old^{-1/2} - I ||_F.
double correlation_deviation(const Eigen::MatrixXd& sigma_old, const Eigen::MatrixXd& sigma_new);

/// Draws rows from GC(sigma, f) of a fixed model.
class GcSampler {
 public:
  explicit GcSampler(const CopulaModel& model);

  /// One row; entries flagged in `missing` come back as NaN.
  Eigen::VectorXd draw(const std::vector<bool>& missing, std::mt19937_64& rng) const;

 private:
  const CopulaModel* model_;
  Eigen::MatrixXd chol_;
  std::vector<std::vector<double>> cutpoints_;
};

Eigen::VectorXd sample_gc_row(const CopulaModel& model, const std::vector<bool>& missing,
                              std::mt19937_64& rng);

struct CpdConfig {
  /// Monte Carlo replicates B.
  std::size_t replicates = 99;
  /// Rows per online update when replaying new data; 0 means one batch.
  std::size_t batch_size = 0;
  /// #{s <= s_j} / (B + 1), which can reach 0. Off by default.
  bool biased_p_value = false;
  std::uint64_t seed = 0;
};

struct CpdResult {
  double statistic = 0.0;
  std::vector<double> mc_statistics;
  double p_value = 1.0;
  bool decision = false;
};

struct CpdOutcome {
  CpdResult result;
  /// The input state after replaying the new data.
  OnlineEmState updated;
};

/// (#{j : s <= s_j} + 1) / (B + 1), or the biased variant without the +1.
double empirical_p_value(double statistic, std::span<const double> mc_statistics, bool biased);

/// Monte Carlo test for a change in the copula correlation at the end of
/// `before`. Each replicate samples data from the pre-change model with the
/// missing pattern of `new_data` and replays the same online updates.
/// With `alpha_t`, `decision` is p_value < alpha_t.
CpdOutcome mc_cpd_test(const OnlineEmState& before, const Eigen::Ref<const DataMatrix>& new_data,
                       const CpdConfig& config, std::optional<double> alpha_t = std::nullopt,
                       const Executor& exec = Executor{});

struct DetectorConfig {
  CpdConfig test;
  double alpha = 0.05;
  /// Batches after a detection during which no test runs.
  std::size_t burn_in = 0;
  /// Leading batches used only to train the model.
  std::size_t warmup = 0;
};

struct BatchDecision {
  std::size_t t = 0;
  /// Deviation between the models before and after this batch.
  double statistic = 0.0;
  bool tested = false;
  std::optional<double> p_value;
  std::optional<double> alpha_t;
  bool decision = false;
  /// alpha_t < 1/(B+1): the unbiased p-value cannot reach this level.
  bool alpha_below_resolution = false;
};

/// Sequential Monte Carlo tests with LORD++ levels, one per batch.
class OnlineChangeDetector {
 public:
  OnlineChangeDetector(OnlineEmState initial, DetectorConfig config,
                       Executor exec = Executor{});

  BatchDecision process(const Eigen::Ref<const DataMatrix>& batch);

  const OnlineEmState& state() const { return state_; }
  const FdrState& fdr() const { return fdr_; }

 private:
  OnlineEmState state_;
  DetectorConfig config_;
  Executor exec_;
  FdrState fdr_;
  std::size_t t_ = 0;
  std::size_t quiet_until_ = 0;
};

/// Runs the detector over consecutive batches of `data` (see partition_batches).
std::vector<BatchDecision> online_cpd_loop(OnlineEmState initial,
                                           const Eigen::Ref<const DataMatrix>& data,
                                           std::size_t batch_size, const DetectorConfig& config,
                                           const Executor& exec = Executor{});

}  // namespace gcimpute
