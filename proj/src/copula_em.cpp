#include "gcimpute/copula_em.hpp"

#include <cmath>
#include <string>

#include "gcimpute/errors.hpp"
#include "gcimpute/linalg.hpp"

namespace gcimpute {

namespace {

// Re-throws a library error with the offending row prepended.
[[noreturn]] void rethrow_with_row(std::size_t row) {
  const std::string prefix = "row " + std::to_string(row) + ": ";
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what(), e.diagnostic());
  } catch (const NotFittedError& e) {
    throw NotFittedError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  }
}

}  // namespace

CopulaModel CopulaModel::cold_start(std::span<const ColumnKind> kinds, std::size_t window) {
  CopulaModel m;
  const auto p = static_cast<Eigen::Index>(kinds.size());
  m.sigma = Eigen::MatrixXd::Identity(p, p);
  m.marginals.reserve(kinds.size());
  for (std::size_t j = 0; j < kinds.size(); ++j)
    m.marginals.emplace_back(kinds[j], window, "col" + std::to_string(j));
  return m;
}

std::vector<ColumnKind> CopulaModel::kinds() const {
  std::vector<ColumnKind> out;
  out.reserve(marginals.size());
  for (const auto& m : marginals) out.push_back(m.kind());
  return out;
}

RowObservation CopulaModel::observe(const Eigen::Ref<const Eigen::VectorXd>& raw) const {
  if (static_cast<std::size_t>(raw.size()) != dim())
    throw DomainError("row has " + std::to_string(raw.size()) + " entries, model has " +
                      std::to_string(dim()));
  std::vector<LatentRegion> regions;
  regions.reserve(dim());
  for (std::size_t j = 0; j < dim(); ++j)
    regions.push_back(marginals[j].to_latent_region(raw(static_cast<Eigen::Index>(j))));
  return RowObservation::from_regions(std::move(regions));
}

void CopulaModel::validate() const {
  const auto p = static_cast<Eigen::Index>(dim());
  if (sigma.rows() != p || sigma.cols() != p)
    throw DomainError("correlation matrix size does not match the number of marginals");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw DomainError("correlation matrix is not symmetric");
  if ((sigma.diagonal().array() - 1.0).abs().maxCoeff() > 1e-10)
    throw DomainError("correlation matrix diagonal is not 1");
  if (min_eigenvalue(sigma) <= 0.0)
    throw DomainError("correlation matrix is not positive definite");
}

StepSchedule StepSchedule::constant(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw PreconditionError("constant step size must lie in (0, 1)");
  return {true, gamma};
}

StepSchedule StepSchedule::decaying(double c) {
  if (!(c > 0.0)) throw PreconditionError("decaying step constant c must be positive");
  return {false, c};
}

double StepSchedule::gamma(std::size_t t) const {
  if (t == 0) throw PreconditionError("step index starts at 1");
  if (full_first_step_ && t == 1) return 1.0;
  if (constant_) return value_;
  return value_ / (static_cast<double>(t) + value_);
}

Eigen::MatrixXd scale_to_correlation(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw DomainError("scale_to_correlation needs a square matrix");
  const Eigen::VectorXd d = a.diagonal();
  if ((d.array() <= 0.0).any() || !d.allFinite())
    throw DomainError("scale_to_correlation needs a strictly positive diagonal");
  const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd out = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
  out = (0.5 * (out + out.transpose())).eval();
  out.diagonal().setOnes();
  return out;
}

double repair_positive_definite(Eigen::MatrixXd& sigma) {
  if (min_eigenvalue(sigma) >= kMinEigenvalue) return 0.0;
  const auto id = Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  for (double lambda : {1e-4, 1e-3, 1e-2, 1e-1}) {
    Eigen::MatrixXd shrunk = (1.0 - lambda) * sigma + lambda * id;
    if (min_eigenvalue(shrunk) >= kMinEigenvalue) {
      sigma = std::move(shrunk);
      return lambda;
    }
  }
  const double lo = min_eigenvalue(sigma);
  throw NumericalError("correlation estimate cannot be repaired (min eigenvalue " +
                           std::to_string(lo) + ")",
                       lo);
}

Eigen::MatrixXd mstep_offline(std::span<const EStepResult> moments) {
  if (moments.empty()) throw PreconditionError("mstep_offline needs at least one row");
  std::vector<Eigen::MatrixXd> terms;
  terms.reserve(moments.size());
  for (const auto& m : moments) terms.push_back(m.ezz);
  const Eigen::MatrixXd mean =
      tree_sum(terms, 0, terms.size()) / static_cast<double>(terms.size());
  Eigen::MatrixXd sigma = scale_to_correlation(mean);
  const double lo = min_eigenvalue(sigma);
  if (lo < kMinEigenvalue)
    throw NumericalError("M-step estimate is not positive definite (min eigenvalue " +
                             std::to_string(lo) + ")",
                         lo);
  return sigma;
}

namespace {

std::vector<EStepResult> batch_estep(const CopulaModel& model,
                                     const Eigen::Ref<const DataMatrix>& batch,
                                     const EStepOptions& options, const Executor& exec) {
  std::vector<EStepResult> out(static_cast<std::size_t>(batch.rows()));
  exec.parallel_for(out.size(), [&](std::size_t i) {
    try {
      const Eigen::VectorXd raw = batch.row(static_cast<Eigen::Index>(i)).transpose();
      out[i] = row_estep(model.observe(raw), model.sigma, options);
    } catch (const Error&) {
      rethrow_with_row(i);
    }
  });
  return out;
}

}  // namespace

Eigen::MatrixXd batch_second_moment(const CopulaModel& model,
                                    const Eigen::Ref<const DataMatrix>& batch,
                                    const EStepOptions& options, const Executor& exec) {
  if (batch.rows() == 0) throw PreconditionError("empty batch");
  const auto results = batch_estep(model, batch, options, exec);
  std::vector<Eigen::MatrixXd> terms;
  terms.reserve(results.size());
  for (const auto& r : results) terms.push_back(r.ezz);
  return tree_sum(terms, 0, terms.size()) / static_cast<double>(terms.size());
}

UpdateReport online_update(OnlineEmState& state, const Eigen::Ref<const DataMatrix>& batch,
                           const Executor& exec) {
  auto& model = state.model;
  const auto p = static_cast<Eigen::Index>(model.dim());
  if (batch.cols() != p)
    throw DomainError("batch has " + std::to_string(batch.cols()) + " columns, model has " +
                      std::to_string(p));
  if (batch.rows() <= p)
    throw PreconditionError("batch of " + std::to_string(batch.rows()) +
                            " rows must exceed the dimension " + std::to_string(p));

  if (state.update_marginals) {
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
      try {
        for (Eigen::Index j = 0; j < p; ++j)
          if (!is_missing(batch(i, j))) model.marginals[j].update_window(batch(i, j));
      } catch (const Error&) {
        rethrow_with_row(static_cast<std::size_t>(i));
      }
    }
  }

  UpdateReport report;
  report.gamma = state.schedule.gamma(state.t + 1);
  report.batch_moment = batch_second_moment(model, batch, state.estep, exec);
  report.pre_projection = (1.0 - report.gamma) * model.sigma + report.gamma * report.batch_moment;
  Eigen::MatrixXd next = scale_to_correlation(report.pre_projection);
  report.shrinkage = repair_positive_definite(next);
  model.sigma = std::move(next);
  ++state.t;
  return report;
}

std::vector<MarginalModel> fit_marginals(const Eigen::Ref<const DataMatrix>& data,
                                         std::span<const ColumnKind> kinds) {
  if (static_cast<std::size_t>(data.cols()) != kinds.size())
    throw SchemaError("data has " + std::to_string(data.cols()) + " columns, schema has " +
                      std::to_string(kinds.size()));
  std::vector<MarginalModel> out;
  out.reserve(kinds.size());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const auto observed = static_cast<std::size_t>((data.col(j).array() == data.col(j).array()).count());
    const std::string name = "col" + std::to_string(j);
    if (observed == 0) throw SchemaError("column '" + name + "' has no observed values");
    MarginalModel m(kinds[static_cast<std::size_t>(j)], observed, name);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      if (!is_missing(data(i, j))) m.update_window(data(i, j));
    out.push_back(std::move(m));
  }
  return out;
}

CopulaModel fit_offline(const Eigen::Ref<const DataMatrix>& data,
                        std::span<const ColumnKind> kinds, const OfflineOptions& options,
                        const Executor& exec, int* iterations) {
  const auto p = static_cast<Eigen::Index>(kinds.size());
  if (data.rows() <= p)
    throw PreconditionError("offline fit needs more rows than columns");
  CopulaModel model;
  model.marginals = fit_marginals(data, kinds);
  model.sigma = Eigen::MatrixXd::Identity(p, p);
  int it = 0;
  for (; it < options.max_iter; ++it) {
    const auto moments = batch_estep(model, data, options.estep, exec);
    Eigen::MatrixXd next = mstep_offline(moments);
    const double change = (next - model.sigma).norm() / model.sigma.norm();
    model.sigma = std::move(next);
    if (change < options.tolerance) {
      ++it;
      break;
    }
  }
  if (iterations != nullptr) *iterations = it;
  return model;
}

std::vector<std::pair<std::size_t, std::size_t>> partition_batches(std::size_t rows,
                                                                   std::size_t batch_size,
                                                                   std::size_t dim) {
  if (batch_size == 0) throw PreconditionError("batch size must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < rows; begin += batch_size)
    out.emplace_back(begin, std::min(rows, begin + batch_size));
  if (out.size() > 1 && out.back().second - out.back().first <= dim) {
    const auto tail = out.back();
    out.pop_back();
    out.back().second = tail.second;
  }
  return out;
}

CopulaModel fit_minibatch(const Eigen::Ref<const DataMatrix>& data,
                          std::span<const ColumnKind> kinds, std::size_t batch_size,
                          StepSchedule schedule, std::size_t passes, const Executor& exec) {
  const auto p = kinds.size();
  if (batch_size <= p)
    throw PreconditionError("batch size " + std::to_string(batch_size) +
                            " must exceed the dimension " + std::to_string(p));
  if (static_cast<std::size_t>(data.rows()) < batch_size)
    throw PreconditionError("batch size exceeds the number of rows");
  OnlineEmState state;
  state.model.marginals = fit_marginals(data, kinds);
  state.model.sigma = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                static_cast<Eigen::Index>(p));
  state.schedule = schedule;
  state.update_marginals = false;
  const auto batches = partition_batches(static_cast<std::size_t>(data.rows()), batch_size, p);
  for (std::size_t pass = 0; pass < passes; ++pass)
    for (const auto& [begin, end] : batches)
      online_update(state,
                    data.middleRows(static_cast<Eigen::Index>(begin),
                                    static_cast<Eigen::Index>(end - begin)),
                    exec);
  return std::move(state.model);
}

ImputedRow impute_row(const CopulaModel& model, const Eigen::Ref<const Eigen::VectorXd>& raw,
                      const EStepOptions& options) {
  ImputedRow out{raw, false};
  const auto obs = model.observe(raw);
  if (obs.missing.empty()) return out;

  auto fill = [&](int j, double z) {
    const auto& m = model.marginals[static_cast<std::size_t>(j)];
    out.values(j) = m.empty() ? kMissing : m.from_latent(z);
  };
  if (obs.observed.empty()) {
    out.fully_missing = true;
    for (int j : obs.missing) fill(j, 0.0);
    return out;
  }
  const auto moments = row_estep(obs, model.sigma, options);
  for (int j : obs.missing) fill(j, moments.ez(j));
  return out;
}

DataMatrix impute(const CopulaModel& model, const Eigen::Ref<const DataMatrix>& data,
                  const Executor& exec) {
  DataMatrix out(data.rows(), data.cols());
  exec.parallel_for(static_cast<std::size_t>(data.rows()), [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    try {
      const Eigen::VectorXd raw = data.row(r).transpose();
      out.row(r) = impute_row(model, raw).values.transpose();
    } catch (const Error&) {
      rethrow_with_row(i);
    }
  });
  return out;
}

}  // namespace gcimpute
