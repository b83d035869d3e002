#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"
#include "gcimpute/synth.hpp"

namespace gcimpute {

struct KindScore {
  /// Absent when no column of the kind has a masked entry with nonzero
  /// baseline error.
  std::optional<double> smae;
  std::size_t columns = 0;
  /// Columns dropped because median imputation was already exact.
  std::size_t excluded = 0;
  std::size_t entries = 0;
};

struct SmaeScores {
  KindScore continuous, ordinal, binary;
  const KindScore& operator[](KindGroup g) const;
};

/// Per-kind mean over columns of MAE(method) / MAE(median imputation).
/// Medians come from the unmasked entries of `reference`.
SmaeScores smae(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Mask& mask,
                std::span<const ColumnKind> kinds, const Eigen::MatrixXd& reference,
                const Mask& reference_mask);

struct ErrorPair {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t entries = 0;
};

/// MAE and RMSE over masked entries. Throws DomainError when nothing is masked.
ErrorPair mae_rmse(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Mask& mask);

struct ScoreReport {
  SmaeScores smae;
  ErrorPair error;

  /// Single delimited line; absent kinds print as NA.
  static std::string delimited_header(char sep = ',');
  std::string delimited(char sep = ',') const;
  /// One key=value pair per line.
  std::string key_values() const;
};

ScoreReport score(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Mask& mask,
                  std::span<const ColumnKind> kinds, const Eigen::MatrixXd& reference,
                  const Mask& reference_mask);

}  // namespace gcimpute
