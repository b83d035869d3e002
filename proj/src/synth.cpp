#include "gcimpute/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gcimpute/copula_em.hpp"
#include "gcimpute/errors.hpp"
#include "gcimpute/normal.hpp"

namespace gcimpute {

namespace {

constexpr double kExpRate = 1.0 / 3.0;
constexpr double kCutpointRange = 1.5;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Sub-stream ids keep every random component independent of the others.
enum Stream : std::uint64_t { kCuts = 1, kLatent = 2, kMask = 3, kSigmaBase = 100 };

double sample_quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

void SynthConfig::validate() const {
  if (p_cont == 0 || p_ord == 0 || p_bin == 0)
    throw PreconditionError("synthetic data needs at least one column of each kind");
  if (ordinal_levels < 2) throw PreconditionError("ordinal columns need at least 2 levels");
  if (!(missing_ratio >= 0.0 && missing_ratio < 1.0))
    throw PreconditionError("missing ratio must lie in [0, 1)");
  if (n_per_segment == 0 || segments == 0)
    throw PreconditionError("synthetic data needs at least one segment of one row");
}

std::vector<std::size_t> SynthConfig::change_points() const {
  std::vector<std::size_t> cps;
  for (std::size_t s = 1; s < segments; ++s) cps.push_back(s * n_per_segment);
  return cps;
}

Eigen::MatrixXd random_correlation(std::size_t p, std::uint64_t seed) {
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> gauss;
  const auto n = static_cast<Eigen::Index>(p);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = gauss(rng);
  const Eigen::MatrixXd a = g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  return scale_to_correlation(a);
}

std::vector<ColumnKind> synth_kinds(const SynthConfig& cfg) {
  std::vector<ColumnKind> kinds;
  kinds.insert(kinds.end(), cfg.p_cont, ColumnKind::continuous());
  kinds.insert(kinds.end(), cfg.p_ord, ColumnKind::ordinal(cfg.ordinal_levels));
  kinds.insert(kinds.end(), cfg.p_bin, ColumnKind::binary());
  return kinds;
}

SynthStream generate_stream(const SynthConfig& cfg) {
  cfg.validate();
  SynthStream out;
  out.kinds = synth_kinds(cfg);
  const auto p = static_cast<Eigen::Index>(cfg.dim());
  const auto n = static_cast<Eigen::Index>(cfg.rows());

  // Time-invariant marginals: ordinal cutpoints are drawn once.
  auto cut_rng = stream_rng(cfg.seed, kCuts);
  std::uniform_real_distribution<double> cut_dist(-kCutpointRange, kCutpointRange);
  out.cutpoints.resize(cfg.dim());
  for (std::size_t j = 0; j < cfg.dim(); ++j) {
    if (!out.kinds[j].is_ordinal()) continue;
    auto& cuts = out.cutpoints[j];
    for (int c = 0; c + 1 < out.kinds[j].level_count(); ++c) cuts.push_back(cut_dist(cut_rng));
    std::sort(cuts.begin(), cuts.end());
  }

  out.segment.resize(cfg.rows());
  for (std::size_t s = 0; s < cfg.segments; ++s) {
    out.sigmas.push_back(random_correlation(cfg.dim(), cfg.seed * 1000003ULL + kSigmaBase + s));
    for (std::size_t i = 0; i < cfg.n_per_segment; ++i)
      out.segment[s * cfg.n_per_segment + i] = static_cast<int>(s);
  }

  auto latent_rng = stream_rng(cfg.seed, kLatent);
  std::normal_distribution<double> gauss;
  std::vector<Eigen::MatrixXd> chols;
  for (const auto& s : out.sigmas) chols.emplace_back(Eigen::LLT<Eigen::MatrixXd>(s).matrixL());

  out.truth.resize(n, p);
  Eigen::VectorXd w(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) w(j) = gauss(latent_rng);
    const Eigen::VectorXd z = chols[static_cast<std::size_t>(out.segment[i])] * w;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& kind = out.kinds[static_cast<std::size_t>(j)];
      if (kind.is_continuous()) {
        // Exponential quantile of Phi(z), via the upper tail for precision.
        out.truth(i, j) = -std::log(normal::sf(z(j))) / kExpRate;
      } else {
        const auto& cuts = out.cutpoints[static_cast<std::size_t>(j)];
        const auto below = std::lower_bound(cuts.begin(), cuts.end(), z(j)) - cuts.begin();
        out.truth(i, j) = static_cast<double>(kind.first_level() + below);
      }
    }
  }

  out.mask = cfg.mechanism == Mechanism::mcar
                 ? mask_mcar(cfg.rows(), cfg.dim(), cfg.missing_ratio,
                             cfg.seed * 1000003ULL + kMask)
                 : mask_mnar(out.truth, out.kinds, cfg.seed * 1000003ULL + kMask);
  out.observed = out.truth;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      if (out.mask(i, j)) out.observed(i, j) = kMissing;
  return out;
}

Mask mask_mcar(std::size_t rows, std::size_t cols, double ratio, std::uint64_t seed) {
  auto rng = stream_rng(seed, kMask);
  std::bernoulli_distribution coin(ratio);
  Mask mask(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j) mask(i, j) = coin(rng);
  return mask;
}

Mask mask_mnar(const Eigen::MatrixXd& data, std::span<const ColumnKind> kinds,
               std::uint64_t seed) {
  if (static_cast<std::size_t>(data.cols()) != kinds.size())
    throw SchemaError("mask_mnar: column count does not match the kinds");
  constexpr double kUpper = 0.2, kMiddle = 0.4, kLower = 0.6;
  auto rng = stream_rng(seed, kMask);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Mask mask(data.rows(), data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto& kind = kinds[static_cast<std::size_t>(j)];
    double q25 = 0.0, q75 = 0.0;
    if (kind.is_continuous() && data.rows() > 0) {
      std::vector<double> col(data.col(j).data(), data.col(j).data() + data.rows());
      q25 = sample_quantile(col, 0.25);
      q75 = sample_quantile(col, 0.75);
    }
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double v = data(i, j);
      double prob = kMiddle;
      if (kind.is_continuous()) {
        if (q25 < q75) prob = v > q75 ? kUpper : (v < q25 ? kLower : kMiddle);
      } else {
        // Position of the level on [0, 1]; the middle level sits at 0.5.
        const double pos = (v - kind.first_level()) / (kind.level_count() - 1.0);
        prob = pos > 0.5 ? kUpper : (pos < 0.5 ? kLower : kMiddle);
      }
      mask(i, j) = unif(rng) < prob;
    }
  }
  return mask;
}

}  // namespace gcimpute
