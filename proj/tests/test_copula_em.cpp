#include <doctest.h>

#include <atomic>
#include <random>

#include "gcimpute/copula_em.hpp"
#include "gcimpute/errors.hpp"
#include "gcimpute/linalg.hpp"
#include "gcimpute/synth.hpp"

using namespace gcimpute;

namespace {

SynthStream small_stream(std::uint64_t seed, std::size_t n = 600, double ratio = 0.3) {
  SynthConfig cfg;
  cfg.p_cont = 2;
  cfg.p_ord = 2;
  cfg.p_bin = 1;
  cfg.n_per_segment = n;
  cfg.segments = 1;
  cfg.missing_ratio = ratio;
  cfg.seed = seed;
  return generate_stream(cfg);
}

}  // namespace

TEST_CASE("parallel_for reports the lowest failing index") {
  for (unsigned w : {1u, 3u, 8u}) {
    Executor exec(w);
    std::atomic<int> ran{0};
    try {
      exec.parallel_for(20, [&](std::size_t i) {
        ++ran;
        if (i == 7 || i == 13) throw std::runtime_error(std::to_string(i));
      });
      FAIL("no exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
  }
}

TEST_CASE("tree_sum has a fixed pairing") {
  std::vector<double> v{1e16, 1.0, -1e16, 1.0};
  // ((1e16 + 1) + (-1e16 + 1)) in this exact order
  CHECK(tree_sum(v, 0, v.size()) == (1e16 + 1.0) + (-1e16 + 1.0));
}

TEST_CASE("scaling to a correlation matrix") {
  Eigen::Matrix3d a;
  a << 4, 1, 0.5, 1, 9, -2, 0.5, -2, 1;
  const Eigen::MatrixXd c = scale_to_correlation(a);
  CHECK(c.diagonal().isOnes(0));
  CHECK(c(0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(c(1, 2) == doctest::Approx(-2.0 / 3.0));
  CHECK((scale_to_correlation(c) - c).cwiseAbs().maxCoeff() <= 1e-15);
  Eigen::Matrix2d bad;
  bad << 1, 0, 0, 0;
  CHECK_THROWS_AS(scale_to_correlation(bad), DomainError);
}

TEST_CASE("positive definiteness repair shrinks toward the identity") {
  Eigen::MatrixXd s(3, 3);
  s << 1, 0.8, 0.8, 0.8, 1, 0.27, 0.8, 0.27, 1;
  REQUIRE(min_eigenvalue(s) < 0);
  Eigen::MatrixXd fixed = s;
  const double lambda = repair_positive_definite(fixed);
  CHECK(lambda > 0);
  CHECK(min_eigenvalue(fixed) >= kMinEigenvalue);
  CHECK(fixed.diagonal().isOnes(1e-15));
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK(repair_positive_definite(id) == 0.0);
}

TEST_CASE("step schedules") {
  CHECK(StepSchedule::constant(0.5).gamma(7) == 0.5);
  CHECK(StepSchedule::decaying(5).gamma(1) == doctest::Approx(5.0 / 6.0));
  CHECK(StepSchedule::decaying(5).gamma(15) == doctest::Approx(0.25));
  CHECK(StepSchedule::constant(0.3).with_full_first_step().gamma(1) == 1.0);
  CHECK_THROWS_AS(StepSchedule::constant(1.0), PreconditionError);
  CHECK_THROWS_AS(StepSchedule::constant(0.0), PreconditionError);
  CHECK_THROWS_AS(StepSchedule::decaying(0.0), PreconditionError);
  CHECK_THROWS_AS(StepSchedule::decaying(1.0).gamma(0), PreconditionError);
}

TEST_CASE("batch partition merges a short tail") {
  using P = std::vector<std::pair<std::size_t, std::size_t>>;
  CHECK(partition_batches(100, 40, 20) == P{{0, 40}, {40, 100}});
  CHECK(partition_batches(100, 40, 15) == P{{0, 40}, {40, 80}, {80, 100}});
  CHECK(partition_batches(120, 40, 15) == P{{0, 40}, {40, 80}, {80, 120}});
  CHECK(partition_batches(97, 40, 10) == P{{0, 40}, {40, 80}, {80, 97}});
  CHECK_THROWS_AS(partition_batches(10, 0, 2), PreconditionError);
}

TEST_CASE("online update guards") {
  auto state = OnlineEmState{CopulaModel::cold_start(std::vector<ColumnKind>(3, ColumnKind::continuous()))};
  Eigen::MatrixXd tiny = Eigen::MatrixXd::Random(3, 3);
  CHECK_THROWS_AS(online_update(state, tiny), PreconditionError);
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Random(10, 4);
  CHECK_THROWS_AS(online_update(state, wrong), DomainError);

  auto ord = OnlineEmState{CopulaModel::cold_start(std::vector<ColumnKind>(2, ColumnKind::ordinal(3)))};
  Eigen::MatrixXd data = Eigen::MatrixXd::Ones(6, 2);
  data(4, 1) = 7;
  try {
    online_update(ord, data);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("row 4") != std::string::npos);
  }
}

TEST_CASE("online iterate equals the weighted sum of batch moments") {
  const auto s = small_stream(21, 300);
  OnlineEmState state;
  state.model.marginals = fit_marginals(s.observed, s.kinds);
  state.model.sigma = Eigen::MatrixXd::Identity(5, 5);
  state.schedule = StepSchedule::decaying(2.0);
  state.update_marginals = false;

  // terms[l] = (alpha_l, A_l): A_0 = sigma^0, A_l = batch moment l, each
  // carried through every later diagonal rescaling.
  std::vector<std::pair<double, Eigen::MatrixXd>> terms{{1.0, state.model.sigma}};
  for (int b = 0; b < 3; ++b) {
    const auto batch = s.observed.middleRows(b * 100, 100);
    const Eigen::MatrixXd e = batch_second_moment(state.model, batch);
    const auto report = online_update(state, batch);
    const double g = StepSchedule::decaying(2.0).gamma(static_cast<std::size_t>(b + 1));
    for (auto& t : terms) t.first *= 1.0 - g;
    terms.emplace_back(g, e);
    Eigen::MatrixXd pre = Eigen::MatrixXd::Zero(5, 5);
    for (const auto& t : terms) pre += t.first * t.second;
    CHECK((pre - report.pre_projection).norm() <= 1e-10);
    double total = 0;
    for (const auto& t : terms) total += t.first;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    const Eigen::VectorXd d = pre.diagonal().cwiseSqrt().cwiseInverse();
    for (auto& t : terms) t.second = d.asDiagonal() * t.second * d.asDiagonal();
  }
}

TEST_CASE("offline EM recovers a Gaussian correlation") {
  Eigen::Matrix3d s;
  s << 1, 0.6, -0.3, 0.6, 1, 0.2, -0.3, 0.2, 1;
  const Eigen::Matrix3d l = s.llt().matrixL();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(4000, 3);
  for (int i = 0; i < 4000; ++i) {
    const Eigen::Vector3d z = l * Eigen::Vector3d(g(rng), g(rng), g(rng));
    x.row(i) = z.transpose();
    x(i, 1) = std::exp(x(i, 1));  // monotone marginal change
  }
  const std::vector<ColumnKind> kinds(3, ColumnKind::continuous());
  int iters = 0;
  const auto m = fit_offline(x, kinds, {}, Executor{}, &iters);
  CHECK(iters >= 1);
  CHECK((m.sigma - s).cwiseAbs().maxCoeff() < 0.05);
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("imputation leaves complete rows alone and is worker-invariant") {
  const auto s = small_stream(5);
  const auto m = fit_minibatch(s.observed, s.kinds, 50);
  const auto complete = impute(m, s.truth);
  CHECK((complete.array() == s.truth.array()).all());

  const auto a = impute(m, s.observed, Executor{1});
  const auto b = impute(m, s.observed, Executor{4});
  CHECK((a.array() == b.array()).all());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      CHECK_FALSE(is_missing(a(i, j)));
      if (!s.mask(i, j)) CHECK(a(i, j) == s.observed(i, j));
      CHECK(s.kinds[static_cast<std::size_t>(j)].is_valid_level(a(i, j)));
    }
}

TEST_CASE("fully missing rows fall back to the median") {
  const auto s = small_stream(6);
  const auto m = fit_minibatch(s.observed, s.kinds, 50);
  const Eigen::VectorXd empty = Eigen::VectorXd::Constant(5, kMissing);
  const auto r = impute_row(m, empty);
  CHECK(r.fully_missing);
  for (int j = 0; j < 5; ++j) CHECK(r.values(j) == m.marginals[j].from_latent(0.0));
}

TEST_CASE("online updates are bit-identical across worker counts") {
  const auto s = small_stream(8, 400);
  OnlineEmState a{CopulaModel::cold_start(s.kinds, 100)};
  OnlineEmState b = a;
  for (int t = 0; t < 10; ++t) {
    online_update(a, s.observed.middleRows(t * 40, 40), Executor{1});
    online_update(b, s.observed.middleRows(t * 40, 40), Executor{3});
  }
  CHECK((a.model.sigma.array() == b.model.sigma.array()).all());
  CHECK(a.t == 10);
}

TEST_CASE("minibatch fit keeps marginals fixed and validates") {
  const auto s = small_stream(9);
  const auto m = fit_minibatch(s.observed, s.kinds, 60, StepSchedule::decaying(5), 2);
  CHECK_NOTHROW(m.validate());
  const auto fitted = fit_marginals(s.observed, s.kinds);
  for (std::size_t j = 0; j < 5; ++j) CHECK(m.marginals[j].sorted() == fitted[j].sorted());
  CHECK_THROWS_AS(fit_minibatch(s.observed, s.kinds, 5), PreconditionError);
}

TEST_CASE("marginal fitting requires an observed value per column") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 2);
  x.col(1).setConstant(kMissing);
  const std::vector<ColumnKind> kinds(2, ColumnKind::continuous());
  CHECK_THROWS_AS(fit_marginals(x, kinds), SchemaError);
}
