#include "gcimpute/fdr.hpp"

#include <numbers>

#include "gcimpute/errors.hpp"

namespace gcimpute {

double lord_spend(std::size_t k) {
  if (k == 0) return 0.0;
  const double kk = static_cast<double>(k);
  return 6.0 / (std::numbers::pi * std::numbers::pi * kk * kk);
}

FdrState FdrState::lord(double alpha) { return lord(alpha, alpha / 2.0); }

FdrState FdrState::lord(double alpha, double initial_wealth) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("FDR level must lie in (0, 1)");
  if (!(initial_wealth > 0.0 && initial_wealth <= alpha))
    throw PreconditionError("initial wealth must lie in (0, alpha]");
  FdrState s;
  s.alpha = alpha;
  s.initial_wealth = initial_wealth;
  return s;
}

double fdr_alpha(const FdrState& state) {
  const std::size_t t = state.tests() + 1;
  double level = lord_spend(t) * state.initial_wealth;
  bool first = true;
  for (std::size_t tau = 1; tau < t; ++tau) {
    if (!state.decisions[tau - 1]) continue;
    const double reward = first ? state.alpha - state.initial_wealth : state.alpha;
    level += reward * lord_spend(t - tau);
    first = false;
  }
  return level;
}

}  // namespace gcimpute
