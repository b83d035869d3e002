#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"

namespace gcimpute {

/// true marks a masked (missing) cell.
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class Mechanism { mcar, mnar };

struct SynthConfig {
  std::size_t p_cont = 5;
  std::size_t p_ord = 5;
  std::size_t p_bin = 5;
  int ordinal_levels = 5;
  std::size_t n_per_segment = 2000;
  /// Each segment draws a fresh correlation matrix.
  std::size_t segments = 3;
  double missing_ratio = 0.4;
  Mechanism mechanism = Mechanism::mcar;
  std::uint64_t seed = 0;

  std::size_t dim() const { return p_cont + p_ord + p_bin; }
  std::size_t rows() const { return n_per_segment * segments; }
  /// First row of every segment after the first.
  std::vector<std::size_t> change_points() const;
  void validate() const;
};

struct SynthStream {
  std::vector<ColumnKind> kinds;
  Eigen::MatrixXd truth;
  Mask mask;
  /// truth with masked cells set to NaN.
  Eigen::MatrixXd observed;
  /// Segment index of each row.
  std::vector<int> segment;
  std::vector<Eigen::MatrixXd> sigmas;
  /// Latent cutpoints of each ordinal column (empty for continuous).
  std::vector<std::vector<double>> cutpoints;
};

/// P_E(G G^T + 0.1 I) for G with i.i.d. standard normal entries.
Eigen::MatrixXd random_correlation(std::size_t p, std::uint64_t seed);

/// Column kinds of a config: continuous, then ordinal, then binary.
std::vector<ColumnKind> synth_kinds(const SynthConfig& cfg);

SynthStream generate_stream(const SynthConfig& cfg);

/// Independent Bernoulli(ratio) masking.
Mask mask_mcar(std::size_t rows, std::size_t cols, double ratio, std::uint64_t seed);

/// Value-dependent masking: the upper band of each column is masked with
/// probability 0.2, the middle band 0.4 and the lower band 0.6. Continuous
/// bands are split at the column's 25% and 75% quantiles; ordinal levels above
/// the middle level are upper, below it lower.
Mask mask_mnar(const Eigen::MatrixXd& data, std::span<const ColumnKind> kinds, std::uint64_t seed);

}  // namespace gcimpute
