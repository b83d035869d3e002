#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace gcimpute {

/// Default running-window length for online marginals.
inline constexpr std::size_t kDefaultWindow = 200;

/// Missing cells are carried as quiet NaN throughout the library.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

enum class KindGroup { continuous, ordinal, binary };

/// Column type. Ordinal columns take the integer levels
/// first_level, first_level + 1, ..., first_level + level_count - 1.
/// Binary is Ordinal with two levels {0, 1}.
class ColumnKind {
 public:
  static ColumnKind continuous() { return ColumnKind(0, 0); }
  static ColumnKind ordinal(int level_count, int first_level = 1);
  static ColumnKind binary() { return ordinal(2, 0); }

  /// Parses the schema tokens "cont", "bin" and "ord<L>".
  static ColumnKind parse(std::string_view token);
  std::string to_string() const;

  bool is_continuous() const { return level_count_ == 0; }
  bool is_ordinal() const { return level_count_ > 0; }
  int level_count() const { return level_count_; }
  int first_level() const { return first_level_; }
  int last_level() const { return first_level_ + level_count_ - 1; }
  KindGroup group() const;
  bool is_valid_level(double v) const;

  friend bool operator==(const ColumnKind&, const ColumnKind&) = default;

 private:
  ColumnKind(int level_count, int first_level)
      : level_count_(level_count), first_level_(first_level) {}
  int level_count_;
  int first_level_;
};

/// Preimage of one observation on the latent normal scale.
struct LatentRegion {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  static LatentRegion missing() { return {}; }
  static LatentRegion point(double z) { return {z, z}; }

  bool is_missing() const { return std::isinf(lower) && std::isinf(upper); }
  bool is_point() const { return lower == upper; }
  bool is_interval() const { return lower < upper && !is_missing(); }
};

/// Empirical marginal over the k most recent observations of one column.
///
/// The latent transform uses the scaled ECDF #{x <= v} / (n + 1), so every
/// finite latent value lies within [quantile(0.5/(n+1)), quantile((n+0.5)/(n+1))].
/// Safe for concurrent readers; update_window needs exclusive access.
class MarginalModel {
 public:
  explicit MarginalModel(ColumnKind kind, std::size_t capacity = kDefaultWindow,
                         std::string name = "column");

  /// Appends an observed value, evicting the oldest one when full.
  void update_window(double value);

  /// Missing (NaN) maps to the whole line. Continuous values map to a point,
  /// ordinal levels to the interval between consecutive scaled-ECDF limits.
  LatentRegion to_latent_region(double value) const;

  /// Empirical quantile at probability Phi(z), lower order statistic.
  double from_latent(double z) const;

  /// level_count - 1 non-decreasing latent thresholds between levels.
  std::vector<double> ordinal_cutpoints() const;

  const ColumnKind& kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return window_.size(); }
  bool empty() const { return window_.empty(); }
  std::uint64_t observed_count() const { return observed_count_; }

  /// Window contents, oldest first.
  const std::deque<double>& window() const { return window_; }
  /// Window contents in ascending order.
  const std::vector<double>& sorted() const { return sorted_; }

  /// Rebuilds a model from a stored window (used by snapshots).
  static MarginalModel restore(ColumnKind kind, std::size_t capacity, std::string name,
                               std::uint64_t observed_count,
                               const std::vector<double>& window_oldest_first);

 private:
  void require_fitted() const;
  double clamped_quantile(double count) const;
  double lowest_probability() const;
  double highest_probability() const;

  ColumnKind kind_;
  std::size_t capacity_;
  std::string name_;
  std::deque<double> window_;
  std::vector<double> sorted_;
  std::uint64_t observed_count_ = 0;
};

}  // namespace gcimpute
