#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gcimpute/errors.hpp"
#include "gcimpute/truncnorm.hpp"

using namespace gcimpute;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd equicorrelated(int p, double rho) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(p, p, rho);
  s.diagonal().setOnes();
  return s;
}

double max_gap(const EStepResult& a, const EStepResult& b) {
  return std::max((a.ez - b.ez).cwiseAbs().maxCoeff(), (a.ezz - b.ezz).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("univariate truncated moments") {
  const auto half = truncnorm_moments(0, 1, 0, inf);
  CHECK(half.mean == doctest::Approx(std::sqrt(2 / std::numbers::pi)).epsilon(1e-12));
  CHECK(half.variance == doctest::Approx(1 - 2 / std::numbers::pi).epsilon(1e-12));
  CHECK(half.mean == doctest::Approx(0.79788).epsilon(1e-5));
  CHECK(half.variance == doctest::Approx(0.36338).epsilon(1e-4));

  const auto none = truncnorm_moments(0, 1, -inf, inf);
  CHECK(none.mean == 0);
  CHECK(none.variance == 1);

  const auto point = truncnorm_moments(0.3, 2, 1.25, 1.25);
  CHECK(point.mean == 1.25);
  CHECK(point.variance == 0);

  CHECK_THROWS_AS(truncnorm_moments(0, 1, 2, 1), DomainError);
  CHECK_THROWS_AS(truncnorm_moments(0, 0, 0, 1), DomainError);
}

TEST_CASE("univariate moments agree with rejection sampling") {
  const double mu = 1.5, s2 = 4, lo = -1, hi = 2;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(mu, std::sqrt(s2));
  double sum = 0, sq = 0;
  std::size_t n = 0;
  while (n < 2'000'000) {
    const double x = g(rng);
    if (x < lo || x > hi) continue;
    sum += x;
    sq += x * x;
    ++n;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  const auto t = truncnorm_moments(mu, s2, lo, hi);
  const double se = std::sqrt(var / n);
  CHECK(std::abs(t.mean - mean) < 3 * se);
  CHECK(t.variance == doctest::Approx(var).epsilon(0.005));
}

TEST_CASE("far-tail truncation collapses to the nearest boundary") {
  const auto right = truncnorm_moments(0, 1, 40, 41);
  CHECK(right.mean == 40);
  CHECK(right.variance == 0);
  const auto left = truncnorm_moments(0, 1, -41, -40);
  CHECK(left.mean == -40);
  // moderate tails stay accurate rather than collapsing
  const auto tail = truncnorm_moments(0, 1, 6, inf);
  CHECK(tail.mean > 6);
  CHECK(tail.mean < 6.2);
}

TEST_CASE("row with only points is exact") {
  const auto row = RowObservation::from_regions(
      {LatentRegion::point(0.4), LatentRegion::point(-1.1), LatentRegion::point(2.0)});
  const auto r = row_estep(row, equicorrelated(3, 0.3));
  const Eigen::Vector3d z(0.4, -1.1, 2.0);
  CHECK((r.ez - z).norm() == 0);
  CHECK((r.ezz - z * z.transpose()).norm() == 0);
}

TEST_CASE("missing coordinate under independence") {
  const auto row =
      RowObservation::from_regions({LatentRegion::point(0.7), LatentRegion::missing()});
  const auto r = row_estep(row, Eigen::MatrixXd::Identity(2, 2));
  CHECK(r.ez(1) == doctest::Approx(0.0));
  CHECK(r.ezz(1, 1) == doctest::Approx(1.0));
  CHECK(r.ez(0) == 0.7);
  CHECK(r.ezz(0, 0) == doctest::Approx(0.49));
}

TEST_CASE("fully missing row returns the prior moments") {
  const auto row = RowObservation::from_regions({LatentRegion::missing(), LatentRegion::missing()});
  const auto s = equicorrelated(2, -0.4);
  const auto r = row_estep(row, s);
  CHECK(r.ez.norm() == 0);
  CHECK((r.ezz - s).norm() == 0);
}

TEST_CASE("point-only rows reduce to the Gaussian conditional mean") {
  Eigen::MatrixXd s(4, 4);
  s << 1, 0.5, 0.2, -0.3, 0.5, 1, 0.1, 0.4, 0.2, 0.1, 1, 0.25, -0.3, 0.4, 0.25, 1;
  const auto row = RowObservation::from_regions({LatentRegion::point(0.3), LatentRegion::missing(),
                                                 LatentRegion::point(-0.8),
                                                 LatentRegion::missing()});
  const auto r = row_estep(row, s);
  const std::vector<int> o{0, 2}, m{1, 3};
  Eigen::Matrix2d soo;
  soo << 1, 0.2, 0.2, 1;
  Eigen::Matrix2d smo;
  smo << 0.5, 0.1, -0.3, 0.25;
  const Eigen::Vector2d zo(0.3, -0.8);
  const Eigen::Vector2d expect = smo * soo.inverse() * zo;
  CHECK(r.ez(1) == doctest::Approx(expect(0)).epsilon(1e-12));
  CHECK(r.ez(3) == doctest::Approx(expect(1)).epsilon(1e-12));
  Eigen::Matrix2d smm;
  smm << 1, 0.4, 0.4, 1;
  const Eigen::Matrix2d cond = smm - smo * soo.inverse() * smo.transpose();
  CHECK(r.ezz(1, 3) - r.ez(1) * r.ez(3) == doctest::Approx(cond(0, 1)).epsilon(1e-12));
}

TEST_CASE("moment invariants hold on mixed rows") {
  const auto s = equicorrelated(5, 0.45);
  const auto row = RowObservation::from_regions({{-0.2, 0.6}, LatentRegion::point(1.1),
                                                 {0.3, 1.7}, LatentRegion::missing(), {-inf, -0.1}});
  const auto r = row_estep(row, s);
  CHECK((r.ezz - r.ezz.transpose()).cwiseAbs().maxCoeff() == 0);
  for (int j = 0; j < 5; ++j) CHECK(r.ezz(j, j) >= r.ez(j) * r.ez(j) - 1e-12);
  const Eigen::MatrixXd cov = r.ezz - r.ez * r.ez.transpose();
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov).eigenvalues().minCoeff() > -1e-10);
  CHECK(r.ez(1) == 1.1);
  CHECK(r.ezz(1, 1) == doctest::Approx(1.21).epsilon(1e-14));
  CHECK(r.ez(0) >= -0.2);
  CHECK(r.ez(0) <= 0.6);
}

TEST_CASE("three-coordinate example agrees with the rejection oracle") {
  const auto s = equicorrelated(3, 0.5);
  const std::vector<LatentRegion> regions{{0.0, 1.0}, LatentRegion::point(0.3),
                                          LatentRegion::missing()};
  const auto approx = row_estep(RowObservation::from_regions(regions), s);
  const auto oracle = truncmvn_oracle(regions, s, 1'000'000, 5);
  CHECK(max_gap(approx, oracle) <= 0.02);
}

TEST_CASE("bivariate boxes are exact against the oracle") {
  Eigen::Matrix2d c;
  c << 1, 0.9, 0.9, 1;
  const std::vector<LatentRegion> regions{{0.0, inf}, {0.0, inf}};
  const auto approx = row_estep(RowObservation::from_regions(regions), c);
  const auto oracle = truncmvn_oracle(regions, c, 400'000, 9);
  CHECK(max_gap(approx, oracle) <= 0.01);
}

TEST_CASE("expectation propagation resumes at its fixed point") {
  const auto s = equicorrelated(4, 0.35);
  const Eigen::Vector4d lo(-0.5, 0.1, -inf, 0.4), hi(0.7, 1.3, 0.2, inf);
  EpSites sites;
  const auto first = ep_box_moments(Eigen::VectorXd::Zero(4), s, lo, hi, {}, &sites);
  CHECK(first.sweeps > 1);
  const auto again = ep_box_moments(Eigen::VectorXd::Zero(4), s, lo, hi, {}, &sites);
  CHECK(again.sweeps == 1);
  CHECK((again.mean - first.mean).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("oracle basics") {
  const std::vector<LatentRegion> half{{0.0, inf}};
  const auto r = truncmvn_oracle(half, Eigen::MatrixXd::Identity(1, 1), 200'000, 1);
  CHECK(r.ez(0) == doctest::Approx(0.79788).epsilon(0.01));

  const std::vector<LatentRegion> free{LatentRegion::missing(), LatentRegion::missing()};
  const auto f = truncmvn_oracle(free, Eigen::MatrixXd::Identity(2, 2), 200'000, 2);
  CHECK(f.ez.cwiseAbs().maxCoeff() < 0.01);
  CHECK((f.ezz - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.01);

  // determinism per seed
  const auto a = truncmvn_oracle(half, Eigen::MatrixXd::Identity(1, 1), 1000, 4);
  const auto b = truncmvn_oracle(half, Eigen::MatrixXd::Identity(1, 1), 1000, 4);
  CHECK(a.ez(0) == b.ez(0));

  const std::vector<LatentRegion> far{{8.0, 9.0}};
  CHECK_THROWS_AS(truncmvn_oracle(far, Eigen::MatrixXd::Identity(1, 1), 10, 1),
                  OracleInfeasibleError);
}

TEST_CASE("bad regions are domain errors") {
  CHECK_THROWS_AS(RowObservation::from_regions({{1.0, 0.0}}), DomainError);
  CHECK_THROWS_AS(RowObservation::from_regions({{NAN, 0.0}}), DomainError);
}
