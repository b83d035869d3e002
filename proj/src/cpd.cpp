#include "gcimpute/cpd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcimpute/errors.hpp"
#include "gcimpute/linalg.hpp"

namespace gcimpute {

double correlation_deviation(const Eigen::MatrixXd& sigma_old, const Eigen::MatrixXd& sigma_new) {
  if (sigma_old.rows() != sigma_new.rows() || sigma_old.cols() != sigma_new.cols() ||
      sigma_old.rows() != sigma_old.cols())
    throw DomainError("correlation_deviation: matrices must be square and of equal size");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_old);
  const Eigen::VectorXd& lambda = es.eigenvalues();
  if (lambda.minCoeff() < kEigenFloor)
    throw NumericalError("correlation_deviation: eigenvalue below floor", lambda.minCoeff());
  const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                   lambda.cwiseSqrt().cwiseInverse().asDiagonal() *
                                   es.eigenvectors().transpose();
  const Eigen::MatrixXd whitened = inv_sqrt * sigma_new * inv_sqrt;
  return (whitened - Eigen::MatrixXd::Identity(sigma_old.rows(), sigma_old.cols())).norm();
}

GcSampler::GcSampler(const CopulaModel& model) : model_(&model) {
  Eigen::LLT<Eigen::MatrixXd> llt(model.sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("GcSampler: correlation matrix is not positive definite",
                         min_eigenvalue(model.sigma));
  chol_ = llt.matrixL();
  cutpoints_.resize(model.dim());
  for (std::size_t j = 0; j < model.dim(); ++j)
    if (model.marginals[j].kind().is_ordinal()) cutpoints_[j] = model.marginals[j].ordinal_cutpoints();
}

Eigen::VectorXd GcSampler::draw(const std::vector<bool>& missing, std::mt19937_64& rng) const {
  const auto p = static_cast<Eigen::Index>(model_->dim());
  std::normal_distribution<double> gauss;
  Eigen::VectorXd w(p);
  for (Eigen::Index j = 0; j < p; ++j) w(j) = gauss(rng);
  const Eigen::VectorXd z = chol_ * w;
  Eigen::VectorXd row(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    if (uj < missing.size() && missing[uj]) {
      row(j) = kMissing;
      continue;
    }
    const auto& m = model_->marginals[uj];
    if (m.kind().is_continuous()) {
      row(j) = m.from_latent(z(j));
    } else {
      const auto& cuts = cutpoints_[uj];
      const auto below = std::lower_bound(cuts.begin(), cuts.end(), z(j)) - cuts.begin();
      row(j) = static_cast<double>(m.kind().first_level() + below);
    }
  }
  return row;
}

Eigen::VectorXd sample_gc_row(const CopulaModel& model, const std::vector<bool>& missing,
                              std::mt19937_64& rng) {
  return GcSampler(model).draw(missing, rng);
}

double empirical_p_value(double statistic, std::span<const double> mc_statistics, bool biased) {
  const auto at_least =
      std::count_if(mc_statistics.begin(), mc_statistics.end(),
                    [statistic](double s) { return statistic <= s; });
  const double numerator = static_cast<double>(at_least) + (biased ? 0.0 : 1.0);
  return numerator / (static_cast<double>(mc_statistics.size()) + 1.0);
}

namespace {

OnlineEmState replay(OnlineEmState state, const Eigen::Ref<const DataMatrix>& data,
                     const std::vector<std::pair<std::size_t, std::size_t>>& batches,
                     const Executor& exec) {
  for (const auto& [begin, end] : batches)
    online_update(state,
                  data.middleRows(static_cast<Eigen::Index>(begin),
                                  static_cast<Eigen::Index>(end - begin)),
                  exec);
  return state;
}

std::mt19937_64 replicate_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

CpdOutcome mc_cpd_test(const OnlineEmState& before, const Eigen::Ref<const DataMatrix>& new_data,
                       const CpdConfig& config, std::optional<double> alpha_t,
                       const Executor& exec) {
  const auto p = before.model.dim();
  const auto rows = static_cast<std::size_t>(new_data.rows());
  if (rows <= p)
    throw PreconditionError("change-point test needs more new rows than columns");
  if (config.replicates == 0) throw PreconditionError("need at least one Monte Carlo replicate");
  const auto batches =
      partition_batches(rows, config.batch_size == 0 ? rows : config.batch_size, p);

  CpdOutcome out{CpdResult{}, replay(before, new_data, batches, exec)};
  out.result.statistic = correlation_deviation(before.model.sigma, out.updated.model.sigma);

  std::vector<std::vector<bool>> patterns(rows, std::vector<bool>(p));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < p; ++j)
      patterns[i][j] = is_missing(new_data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));

  const GcSampler sampler(before.model);
  auto& mc = out.result.mc_statistics;
  mc.assign(config.replicates, 0.0);
  exec.parallel_for(config.replicates, [&](std::size_t j) {
    try {
      auto rng = replicate_rng(config.seed, j);
      DataMatrix synthetic(new_data.rows(), new_data.cols());
      for (std::size_t i = 0; i < rows; ++i)
        synthetic.row(static_cast<Eigen::Index>(i)) = sampler.draw(patterns[i], rng).transpose();
      const auto replicate = replay(before, synthetic, batches, Executor{1});
      mc[j] = correlation_deviation(before.model.sigma, replicate.model.sigma);
    } catch (const NumericalError& e) {
      throw NumericalError("replicate " + std::to_string(j) + ": " + e.what(), e.diagnostic());
    } catch (const DomainError& e) {
      throw DomainError("replicate " + std::to_string(j) + ": " + e.what());
    }
  });

  out.result.p_value = empirical_p_value(out.result.statistic, mc, config.biased_p_value);
  out.result.decision = alpha_t.has_value() && out.result.p_value < *alpha_t;
  return out;
}

OnlineChangeDetector::OnlineChangeDetector(OnlineEmState initial, DetectorConfig config,
                                           Executor exec)
    : state_(std::move(initial)),
      config_(config),
      exec_(exec),
      fdr_(FdrState::lord(config.alpha)) {}

BatchDecision OnlineChangeDetector::process(const Eigen::Ref<const DataMatrix>& batch) {
  BatchDecision d;
  d.t = ++t_;
  const Eigen::MatrixXd sigma_before = state_.model.sigma;
  if (t_ <= config_.warmup || t_ <= quiet_until_) {
    online_update(state_, batch, exec_);
    d.statistic = correlation_deviation(sigma_before, state_.model.sigma);
    return d;
  }
  const double level = fdr_alpha(fdr_);
  CpdConfig test = config_.test;
  test.seed = config_.test.seed ^ (0x9E3779B97F4A7C15ULL * t_);
  auto outcome = mc_cpd_test(state_, batch, test, level, exec_);
  state_ = std::move(outcome.updated);

  d.statistic = outcome.result.statistic;
  d.tested = true;
  d.p_value = outcome.result.p_value;
  d.alpha_t = level;
  d.decision = outcome.result.decision;
  d.alpha_below_resolution =
      level < 1.0 / (static_cast<double>(config_.test.replicates) + 1.0);
  fdr_.record(d.decision);
  if (d.decision) quiet_until_ = t_ + config_.burn_in;
  return d;
}

std::vector<BatchDecision> online_cpd_loop(OnlineEmState initial,
                                           const Eigen::Ref<const DataMatrix>& data,
                                           std::size_t batch_size, const DetectorConfig& config,
                                           const Executor& exec) {
  OnlineChangeDetector detector(std::move(initial), config, exec);
  std::vector<BatchDecision> out;
  for (const auto& [begin, end] :
       partition_batches(static_cast<std::size_t>(data.rows()), batch_size,
                         detector.state().model.dim()))
    out.push_back(detector.process(data.middleRows(static_cast<Eigen::Index>(begin),
                                                   static_cast<Eigen::Index>(end - begin))));
  return out;
}

}  // namespace gcimpute
