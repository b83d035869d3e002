#include "gcimpute/truncnorm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gcimpute/errors.hpp"
#include "gcimpute/linalg.hpp"
#include "gcimpute/normal.hpp"

namespace gcimpute {

RowObservation RowObservation::from_regions(std::vector<LatentRegion> regions) {
  RowObservation row;
  row.regions = std::move(regions);
  for (std::size_t j = 0; j < row.regions.size(); ++j) {
    const auto& r = row.regions[j];
    if (std::isnan(r.lower) || std::isnan(r.upper))
      throw DomainError("latent region " + std::to_string(j) + " has a NaN bound");
    if (r.lower > r.upper)
      throw DomainError("latent region " + std::to_string(j) + " has lower > upper");
    (r.is_missing() ? row.missing : row.observed).push_back(static_cast<int>(j));
  }
  return row;
}

namespace {

// Phi(beta) - Phi(alpha) evaluated on whichever tail keeps precision.
double normal_mass(double alpha, double beta) {
  if (alpha >= 0.0) return normal::sf(alpha) - normal::sf(beta);
  if (beta <= 0.0) return normal::cdf(beta) - normal::cdf(alpha);
  return 1.0 - normal::cdf(alpha) - normal::sf(beta);
}

double times_pdf(double x) { return std::isfinite(x) ? x * normal::pdf(x) : 0.0; }

}  // namespace

TruncatedMoments truncnorm_moments(double mu, double sigma2, double lower, double upper) {
  if (!(sigma2 > 0.0)) throw DomainError("truncated normal needs a positive variance");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper)
    throw DomainError("truncated normal needs lower <= upper");
  if (lower == upper) return {lower, 0.0};
  if (std::isinf(lower) && std::isinf(upper)) return {mu, sigma2};

  const double sd = std::sqrt(sigma2);
  const double alpha = (lower - mu) / sd;
  const double beta = (upper - mu) / sd;
  const double mass = normal_mass(alpha, beta);
  if (mass < kTruncationMassFloor) {
    // All of the box lies in one tail; the side facing mu is nearest.
    return {alpha >= 0.0 ? lower : upper, 0.0};
  }
  const double ratio = (normal::pdf(alpha) - normal::pdf(beta)) / mass;
  const double mean = std::clamp(mu + sd * ratio, lower, upper);
  const double spread = 1.0 + (times_pdf(alpha) - times_pdf(beta)) / mass - ratio * ratio;
  return {mean, std::max(0.0, sigma2 * spread)};
}

BoxMoments ep_box_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                          const EStepOptions& options, EpSites* sites) {
  const auto k = mean.size();
  const Eigen::MatrixXd prior_precision = SpdSolver(cov).inverse();
  const Eigen::VectorXd prior_shift = prior_precision * mean;

  Eigen::VectorXd tau = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(k);
  if (sites != nullptr && sites->precision.size() == k && sites->shift.size() == k) {
    tau = sites->precision;
    nu = sites->shift;
  }

  auto posterior_cov = [&] {
    Eigen::MatrixXd p = prior_precision;
    p.diagonal() += tau;
    return SpdSolver(p).inverse();
  };
  Eigen::MatrixXd s = posterior_cov();
  Eigen::VectorXd m = s * (prior_shift + nu);

  BoxMoments out;
  for (out.sweeps = 0; out.sweeps < options.max_sweeps;) {
    const Eigen::VectorXd previous = m;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double cavity_precision = 1.0 / s(i, i) - tau(i);
      if (!(cavity_precision > 0.0)) continue;
      const double cavity_shift = m(i) / s(i, i) - nu(i);
      const auto tilted = truncnorm_moments(cavity_shift / cavity_precision,
                                            1.0 / cavity_precision, lower(i), upper(i));
      const double variance = std::max(tilted.variance, 1e-12 / cavity_precision);
      const double new_tau = 1.0 / variance - cavity_precision;
      const double new_nu = tilted.mean / variance - cavity_shift;

      const double delta = new_tau - tau(i);
      const Eigen::VectorXd col = s.col(i);
      s -= (delta / (1.0 + delta * s(i, i))) * col * col.transpose();
      tau(i) = new_tau;
      nu(i) = new_nu;
      m = s * (prior_shift + nu);
    }
    ++out.sweeps;
    s = posterior_cov();
    m = s * (prior_shift + nu);
    if ((m - previous).cwiseAbs().maxCoeff() < options.tolerance) break;
  }
  if (sites != nullptr) *sites = {tau, nu};
  out.mean = m;
  out.cov = 0.5 * (s + s.transpose());
  return out;
}

BoxMoments bivariate_box_moments(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                                 const Eigen::Vector2d& lower, const Eigen::Vector2d& upper) {
  const Eigen::Vector2d a = lower - mean;
  const Eigen::Vector2d b = upper - mean;
  const Eigen::Vector2d sd(std::sqrt(cov(0, 0)), std::sqrt(cov(1, 1)));
  const double rho = cov(0, 1) / (sd(0) * sd(1));

  auto fallback = [&] {
    return ep_box_moments(mean, cov, lower, upper, {1e-10, 200});
  };
  if (std::abs(rho) > 1.0 - 1e-9) return fallback();
  const double mass =
      normal::bivariate_box(a(0) / sd(0), b(0) / sd(0), a(1) / sd(1), b(1) / sd(1), rho);
  if (mass < kTruncationMassFloor) return fallback();

  const double det = cov.determinant();
  // Marginal density of coordinate k at x times the probability that the
  // other coordinate stays inside its bounds, normalized by the box mass.
  auto edge = [&](int k, double x) {
    if (!std::isfinite(x)) return 0.0;
    const int q = 1 - k;
    const double cm = cov(q, k) / cov(k, k) * x;
    const double cs = std::sqrt(cov(q, q) - cov(q, k) * cov(q, k) / cov(k, k));
    const double inside = normal::cdf((b(q) - cm) / cs) - normal::cdf((a(q) - cm) / cs);
    return normal::pdf(x / sd(k)) / sd(k) * inside / mass;
  };
  auto x_edge = [&](int k, double x) { return std::isfinite(x) ? x * edge(k, x) : 0.0; };
  // Joint density at (x_k, x_q) = (x, y), normalized by the box mass.
  auto corner = [&](int k, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return 0.0;
    Eigen::Vector2d v;
    v(k) = x;
    v(1 - k) = y;
    const double quad = (cov(1, 1) * v(0) * v(0) - 2.0 * cov(0, 1) * v(0) * v(1) +
                         cov(0, 0) * v(1) * v(1)) /
                        det;
    return std::exp(-0.5 * quad) / (2.0 * std::numbers::pi * std::sqrt(det)) / mass;
  };

  Eigen::Vector2d e;
  for (int i = 0; i < 2; ++i) {
    e(i) = 0.0;
    for (int k = 0; k < 2; ++k) e(i) += cov(i, k) * (edge(k, a(k)) - edge(k, b(k)));
  }
  Eigen::Matrix2d second;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double v = cov(i, j);
      for (int k = 0; k < 2; ++k) {
        const int q = 1 - k;
        v += cov(i, k) * cov(j, k) * (x_edge(k, a(k)) - x_edge(k, b(k))) / cov(k, k);
        const double c = cov(j, q) - cov(k, q) * cov(j, k) / cov(k, k);
        v += cov(i, k) * c *
             (corner(k, a(k), a(q)) - corner(k, a(k), b(q)) - corner(k, b(k), a(q)) +
              corner(k, b(k), b(q)));
      }
      second(i, j) = v;
    }
  }
  BoxMoments out;
  out.mean = mean + e;
  Eigen::Matrix2d c = second - e * e.transpose();
  c = (0.5 * (c + c.transpose())).eval();
  out.cov = c;
  for (int i = 0; i < 2; ++i) {
    out.mean(i) = std::clamp(out.mean(i), lower(i), upper(i));
    out.cov(i, i) = std::max(out.cov(i, i), 0.0);
  }
  return out;
}

EStepResult row_estep(const RowObservation& row, const Eigen::MatrixXd& sigma,
                      const EStepOptions& options) {
  const auto p = static_cast<Eigen::Index>(row.dim());
  if (sigma.rows() != p || sigma.cols() != p)
    throw DomainError("row_estep: correlation matrix does not match the row length");

  std::vector<int> points, intervals;
  Eigen::VectorXd ez = Eigen::VectorXd::Zero(p);
  for (int j : row.observed) {
    const auto& r = row.regions[j];
    if (!std::isfinite(r.lower) && !std::isfinite(r.upper))
      throw DomainError("row_estep: observed coordinate " + std::to_string(j) +
                        " has an unbounded region");
    if (r.is_point()) {
      if (!std::isfinite(r.lower))
        throw DomainError("row_estep: non-finite point at coordinate " + std::to_string(j));
      points.push_back(j);
      ez(j) = r.lower;
    } else {
      intervals.push_back(j);
    }
  }

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  const auto& observed = row.observed;
  const auto& missing = row.missing;

  if (observed.empty()) {
    return {ez, sigma};
  }

  // Interval block conditional on the fixed points.
  if (!intervals.empty()) {
    const auto ni = static_cast<Eigen::Index>(intervals.size());
    Eigen::VectorXd cmean = Eigen::VectorXd::Zero(ni);
    Eigen::MatrixXd ccov = submatrix(sigma, intervals, intervals);
    if (!points.empty()) {
      const SpdSolver pp(submatrix(sigma, points, points));
      const Eigen::MatrixXd cross = submatrix(sigma, intervals, points);
      const Eigen::MatrixXd gain = pp.solve(cross.transpose()).transpose();
      cmean = gain * subvector(ez, points);
      ccov -= gain * cross.transpose();
      ccov = (0.5 * (ccov + ccov.transpose())).eval();
    }
    Eigen::VectorXd lo(ni), hi(ni);
    for (Eigen::Index i = 0; i < ni; ++i) {
      lo(i) = row.regions[intervals[i]].lower;
      hi(i) = row.regions[intervals[i]].upper;
    }
    BoxMoments block;
    if (ni == 1) {
      const auto t = truncnorm_moments(cmean(0), std::max(ccov(0, 0), 1e-12), lo(0), hi(0));
      block.mean = Eigen::VectorXd::Constant(1, t.mean);
      block.cov = Eigen::MatrixXd::Constant(1, 1, t.variance);
    } else if (ni == 2) {
      block = bivariate_box_moments(cmean, ccov, lo, hi);
    } else {
      block = ep_box_moments(cmean, ccov, lo, hi, options);
    }
    for (Eigen::Index i = 0; i < ni; ++i) {
      ez(intervals[i]) = block.mean(i);
      for (Eigen::Index k = 0; k < ni; ++k) cov(intervals[i], intervals[k]) = block.cov(i, k);
    }
  }

  if (!missing.empty()) {
    const SpdSolver oo(submatrix(sigma, observed, observed));
    const Eigen::MatrixXd sigma_mo = submatrix(sigma, missing, observed);
    const Eigen::MatrixXd gain = oo.solve(sigma_mo.transpose()).transpose();
    const Eigen::MatrixXd cov_oo = submatrix(cov, observed, observed);
    const Eigen::VectorXd ez_m = gain * subvector(ez, observed);
    const Eigen::MatrixXd cov_mo = gain * cov_oo;
    Eigen::MatrixXd cov_mm = submatrix(sigma, missing, missing) - gain * sigma_mo.transpose() +
                             cov_mo * gain.transpose();
    cov_mm = (0.5 * (cov_mm + cov_mm.transpose())).eval();
    for (std::size_t a = 0; a < missing.size(); ++a) {
      ez(missing[a]) = ez_m(a);
      for (std::size_t b = 0; b < missing.size(); ++b) cov(missing[a], missing[b]) = cov_mm(a, b);
      for (std::size_t o = 0; o < observed.size(); ++o) {
        cov(missing[a], observed[o]) = cov_mo(a, o);
        cov(observed[o], missing[a]) = cov_mo(a, o);
      }
    }
  }

  Eigen::MatrixXd ezz = cov + ez * ez.transpose();
  ezz = (0.5 * (ezz + ezz.transpose())).eval();
  return {ez, ezz};
}

EStepResult truncmvn_oracle(std::span<const LatentRegion> regions, const Eigen::MatrixXd& sigma,
                            std::size_t draws, std::uint64_t seed) {
  const auto p = static_cast<Eigen::Index>(regions.size());
  if (draws == 0) throw DomainError("truncmvn_oracle needs at least one draw");
  std::vector<int> fixed, free;
  Eigen::VectorXd base = Eigen::VectorXd::Zero(p);
  for (int j = 0; j < p; ++j) {
    if (regions[j].is_point()) {
      fixed.push_back(j);
      base(j) = regions[j].lower;
    } else {
      free.push_back(j);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(nf);
  Eigen::MatrixXd c = submatrix(sigma, free, free);
  if (!fixed.empty() && nf > 0) {
    const Eigen::MatrixXd sff = submatrix(sigma, fixed, fixed);
    const Eigen::MatrixXd sxf = submatrix(sigma, free, fixed);
    const Eigen::MatrixXd w = sff.ldlt().solve(sxf.transpose()).transpose();
    mu = w * subvector(base, fixed);
    c -= w * sxf.transpose();
  }
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(nf, nf);
  if (nf > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (c + c.transpose()));
    if (llt.info() != Eigen::Success)
      throw NumericalError("truncmvn_oracle: conditional covariance not positive definite", 0.0);
    chol = llt.matrixL();
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd w(nf), z = base;
  std::size_t accepted = 0;
  std::uint64_t proposed = 0;
  while (accepted < draws) {
    for (Eigen::Index i = 0; i < nf; ++i) w(i) = gauss(rng);
    const Eigen::VectorXd x = mu + chol * w;
    ++proposed;
    bool inside = true;
    for (Eigen::Index i = 0; i < nf && inside; ++i) {
      const auto& r = regions[free[i]];
      inside = x(i) >= r.lower && x(i) <= r.upper;
    }
    if (inside) {
      for (Eigen::Index i = 0; i < nf; ++i) z(free[i]) = x(i);
      sum += z;
      outer.selfadjointView<Eigen::Lower>().rankUpdate(z);
      ++accepted;
    }
    if (proposed % 1'000'000 == 0 &&
        static_cast<double>(accepted) < 1e-6 * static_cast<double>(proposed))
      throw OracleInfeasibleError("truncmvn_oracle: acceptance rate below 1e-6");
  }
  EStepResult out;
  out.ez = sum / static_cast<double>(draws);
  out.ezz = outer.selfadjointView<Eigen::Lower>();
  out.ezz /= static_cast<double>(draws);
  return out;
}

}  // namespace gcimpute
