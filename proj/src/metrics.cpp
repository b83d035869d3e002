#include "gcimpute/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <vector>

#include "gcimpute/errors.hpp"

namespace gcimpute {

namespace {

void check_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Mask& m) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != m.rows() ||
      a.cols() != m.cols())
    throw SchemaError("score inputs have mismatched shapes");
}

// Lower median, so ordinal medians stay on a level.
double column_median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

}  // namespace

const KindScore& SmaeScores::operator[](KindGroup g) const {
  switch (g) {
    case KindGroup::continuous: return continuous;
    case KindGroup::ordinal: return ordinal;
    default: return binary;
  }
}

SmaeScores smae(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Mask& mask,
                std::span<const ColumnKind> kinds, const Eigen::MatrixXd& reference,
                const Mask& reference_mask) {
  check_shape(imputed, truth, mask);
  if (static_cast<std::size_t>(truth.cols()) != kinds.size() || reference.cols() != truth.cols() ||
      reference_mask.rows() != reference.rows() || reference_mask.cols() != reference.cols())
    throw SchemaError("smae: reference or kinds do not match the data");

  SmaeScores out;
  double sums[3] = {0.0, 0.0, 0.0};
  KindScore* slots[3] = {&out.continuous, &out.ordinal, &out.binary};
  for (Eigen::Index j = 0; j < truth.cols(); ++j) {
    const auto g = static_cast<int>(kinds[static_cast<std::size_t>(j)].group());
    std::vector<double> ref;
    for (Eigen::Index i = 0; i < reference.rows(); ++i)
      if (!reference_mask(i, j) && !is_missing(reference(i, j))) ref.push_back(reference(i, j));
    double method = 0.0, baseline = 0.0;
    std::size_t count = 0;
    const double med = ref.empty() ? 0.0 : column_median(std::move(ref));
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      if (!mask(i, j)) continue;
      method += std::abs(imputed(i, j) - truth(i, j));
      baseline += std::abs(med - truth(i, j));
      ++count;
    }
    if (count == 0) continue;
    auto& slot = *slots[g];
    slot.entries += count;
    if (baseline == 0.0) {
      ++slot.excluded;
      continue;
    }
    sums[g] += method / baseline;
    ++slot.columns;
  }
  for (int g = 0; g < 3; ++g)
    if (slots[g]->columns > 0) slots[g]->smae = sums[g] / static_cast<double>(slots[g]->columns);
  return out;
}

ErrorPair mae_rmse(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth,
                   const Mask& mask) {
  check_shape(imputed, truth, mask);
  ErrorPair out;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      if (!mask(i, j)) continue;
      const double e = imputed(i, j) - truth(i, j);
      abs_sum += std::abs(e);
      sq_sum += e * e;
      ++out.entries;
    }
  if (out.entries == 0) throw DomainError("mae_rmse: no masked entries to score");
  const auto n = static_cast<double>(out.entries);
  out.mae = abs_sum / n;
  out.rmse = std::sqrt(sq_sum / n);
  return out;
}

std::string ScoreReport::delimited_header(char sep) {
  std::string s = "smae_cont";
  for (const char* k : {"smae_ord", "smae_bin", "mae", "rmse", "entries"}) {
    s += sep;
    s += k;
  }
  return s;
}

std::string ScoreReport::delimited(char sep) const {
  std::string s = fmt(smae.continuous.smae);
  for (const auto& v : {fmt(smae.ordinal.smae), fmt(smae.binary.smae), fmt(error.mae),
                        fmt(error.rmse), std::to_string(error.entries)}) {
    s += sep;
    s += v;
  }
  return s;
}

std::string ScoreReport::key_values() const {
  std::string s;
  auto put = [&](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += '\n';
  };
  const std::pair<const char*, const KindScore*> kinds[] = {
      {"cont", &smae.continuous}, {"ord", &smae.ordinal}, {"bin", &smae.binary}};
  for (const auto& [name, k] : kinds) {
    put((std::string("smae_") + name).c_str(), fmt(k->smae));
    put((std::string("columns_") + name).c_str(), std::to_string(k->columns));
    put((std::string("excluded_") + name).c_str(), std::to_string(k->excluded));
  }
  put("mae", fmt(error.mae));
  put("rmse", fmt(error.rmse));
  put("entries", std::to_string(error.entries));
  return s;
}

ScoreReport score(const Eigen::MatrixXd& imputed, const Eigen::MatrixXd& truth, const Mask& mask,
                  std::span<const ColumnKind> kinds, const Eigen::MatrixXd& reference,
                  const Mask& reference_mask) {
  return {smae(imputed, truth, mask, kinds, reference, reference_mask),
          mae_rmse(imputed, truth, mask)};
}

}  // namespace gcimpute
