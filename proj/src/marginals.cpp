#include "gcimpute/marginals.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "gcimpute/errors.hpp"
#include "gcimpute/normal.hpp"

namespace gcimpute {

ColumnKind ColumnKind::ordinal(int level_count, int first_level) {
  if (level_count < 2)
    throw DomainError("ordinal column needs at least 2 levels, got " +
                      std::to_string(level_count));
  return ColumnKind(level_count, first_level);
}

ColumnKind ColumnKind::parse(std::string_view token) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  if (token == "cont") return continuous();
  if (token == "bin") return binary();
  if (token.starts_with("ord")) {
    int levels = 0;
    const auto digits = token.substr(3);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), levels);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      if (levels < 2)
        throw SchemaError("column kind '" + std::string(token) + "' needs at least 2 levels");
      return ordinal(levels);
    }
  }
  throw SchemaError("unknown column kind '" + std::string(token) +
                    "' (expected cont, bin or ord<L>)");
}

std::string ColumnKind::to_string() const {
  if (is_continuous()) return "cont";
  if (level_count_ == 2 && first_level_ == 0) return "bin";
  if (first_level_ == 1) return "ord" + std::to_string(level_count_);
  return "ord" + std::to_string(level_count_) + "@" + std::to_string(first_level_);
}

KindGroup ColumnKind::group() const {
  if (is_continuous()) return KindGroup::continuous;
  return level_count_ == 2 ? KindGroup::binary : KindGroup::ordinal;
}

bool ColumnKind::is_valid_level(double v) const {
  if (is_continuous()) return std::isfinite(v);
  return v == std::floor(v) && v >= first_level_ && v <= last_level();
}

MarginalModel::MarginalModel(ColumnKind kind, std::size_t capacity, std::string name)
    : kind_(kind), capacity_(capacity), name_(std::move(name)) {
  if (capacity_ == 0) throw DomainError("marginal window capacity must be positive");
  sorted_.reserve(capacity_);
}

void MarginalModel::update_window(double value) {
  if (is_missing(value) || !kind_.is_valid_level(value)) {
    std::ostringstream msg;
    msg << "column '" << name_ << "' (" << kind_.to_string() << "): invalid value " << value;
    throw DomainError(msg.str());
  }
  if (window_.size() == capacity_) {
    const double oldest = window_.front();
    window_.pop_front();
    sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
  }
  window_.push_back(value);
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), value), value);
  ++observed_count_;
}

void MarginalModel::require_fitted() const {
  if (window_.empty())
    throw NotFittedError("column '" + name_ + "': marginal window is empty");
}

double MarginalModel::lowest_probability() const {
  return 0.5 / (static_cast<double>(sorted_.size()) + 1.0);
}

double MarginalModel::highest_probability() const {
  const double n = static_cast<double>(sorted_.size());
  return (n + 0.5) / (n + 1.0);
}

double MarginalModel::clamped_quantile(double count) const {
  const double prob = count / (static_cast<double>(sorted_.size()) + 1.0);
  return normal::quantile(std::clamp(prob, lowest_probability(), highest_probability()));
}

LatentRegion MarginalModel::to_latent_region(double value) const {
  if (is_missing(value)) return LatentRegion::missing();
  require_fitted();
  const auto at_or_below = static_cast<double>(
      std::upper_bound(sorted_.begin(), sorted_.end(), value) - sorted_.begin());
  if (kind_.is_continuous()) return LatentRegion::point(clamped_quantile(at_or_below));

  if (!kind_.is_valid_level(value)) {
    std::ostringstream msg;
    msg << "column '" << name_ << "' (" << kind_.to_string() << "): invalid level " << value;
    throw DomainError(msg.str());
  }
  const auto below = static_cast<double>(
      std::lower_bound(sorted_.begin(), sorted_.end(), value) - sorted_.begin());
  const double lower = value == kind_.first_level()
                           ? normal::quantile(lowest_probability())
                           : clamped_quantile(below);
  const double upper = value == kind_.last_level()
                           ? normal::quantile(highest_probability())
                           : clamped_quantile(at_or_below);
  return {lower, upper};
}

double MarginalModel::from_latent(double z) const {
  require_fitted();
  const auto n = sorted_.size();
  const double q = normal::cdf(z);
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted_[rank - 1];
}

std::vector<double> MarginalModel::ordinal_cutpoints() const {
  if (!kind_.is_ordinal())
    throw DomainError("column '" + name_ + "': cutpoints requested for a continuous column");
  require_fitted();
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(kind_.level_count() - 1));
  for (int level = kind_.first_level(); level < kind_.last_level(); ++level) {
    const auto at_or_below = static_cast<double>(
        std::upper_bound(sorted_.begin(), sorted_.end(), static_cast<double>(level)) -
        sorted_.begin());
    cuts.push_back(clamped_quantile(at_or_below));
  }
  return cuts;
}

MarginalModel MarginalModel::restore(ColumnKind kind, std::size_t capacity, std::string name,
                                     std::uint64_t observed_count,
                                     const std::vector<double>& window_oldest_first) {
  if (window_oldest_first.size() > capacity)
    throw DomainError("stored window exceeds its capacity");
  MarginalModel m(kind, capacity, std::move(name));
  for (double v : window_oldest_first) m.update_window(v);
  m.observed_count_ = observed_count;
  return m;
}

}  // namespace gcimpute
