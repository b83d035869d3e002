#pragma once

#include <cstddef>
#include <vector>

namespace gcimpute {

/// Spend sequence gamma_k = 6 / (pi^2 k^2), k >= 1; sums to one.
double lord_spend(std::size_t k);

/// History and parameters of the LORD++ online FDR rule.
///
/// The level for test t is
///   gamma_t W0 + (alpha - W0) gamma_{t - tau_1} + alpha * sum_{j >= 2} gamma_{t - tau_j}
/// where tau_j are the indices of earlier rejections. It depends on the
/// decision history only.
struct FdrState {
  double alpha = 0.05;
  /// Initial wealth W0, at most alpha.
  double initial_wealth = 0.025;
  /// Decisions R_1..R_{t-1} of the tests run so far.
  std::vector<bool> decisions;

  static FdrState lord(double alpha);
  static FdrState lord(double alpha, double initial_wealth);

  std::size_t tests() const { return decisions.size(); }
  void record(bool rejected) { decisions.push_back(rejected); }
};

/// Significance level for the next test, in (0, 1).
double fdr_alpha(const FdrState& state);

}  // namespace gcimpute
