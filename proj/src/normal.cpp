#include "gcimpute/normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace gcimpute::normal {

double quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) return std::numeric_limits<double>::quiet_NaN();
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

// Gauss-Legendre nodes on (-1, 0) and weights for 6, 12 and 20 point rules.
constexpr std::array<double, 3> kW6{0.1713244923791705, 0.3607615730481384,
                                    0.4679139345726904};
constexpr std::array<double, 3> kX6{-0.9324695142031522, -0.6612093864662647,
                                    -0.2386191860831970};
constexpr std::array<double, 6> kW12{0.04717533638651177, 0.1069393259953183,
                                     0.1600783285433464, 0.2031674267230659,
                                     0.2334925365383547, 0.2491470458134029};
constexpr std::array<double, 6> kX12{-0.9815606342467191, -0.9041172563704750,
                                     -0.7699026741943050, -0.5873179542866171,
                                     -0.3678314989981802, -0.1252334085114692};
constexpr std::array<double, 10> kW20{
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
    0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
    0.1527533871307259};
constexpr std::array<double, 10> kX20{
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
    -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
    -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
    -0.07652652113349733};

template <std::size_t N>
double gauss_sum(const std::array<double, N>& w, const std::array<double, N>& x,
                 auto&& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) sum += w[i] * (f(x[i]) + f(-x[i]));
  return sum;
}

template <class F>
double with_rule(double abs_r, F&& f) {
  if (abs_r < 0.3) return gauss_sum(kW6, kX6, f);
  if (abs_r < 0.75) return gauss_sum(kW12, kX12, f);
  return gauss_sum(kW20, kX20, f);
}

}  // namespace

// Drezner-Wesolowsky / Genz algorithm for the bivariate normal upper orthant.
double bivariate_upper(double h, double k, double r) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == inf || k == inf) return 0.0;
  if (h == -inf) return k == -inf ? 1.0 : sf(k);
  if (k == -inf) return sf(h);
  if (r == 0.0) return sf(h) * sf(k);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double abs_r = std::abs(r);
  double hk = h * k;
  double bvn = 0.0;

  if (abs_r < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r);
    bvn = with_rule(abs_r, [&](double x) {
      const double sn = std::sin(asr * (x + 1.0) / 2.0);
      return std::exp((sn * hk - hs) / (1.0 - sn * sn));
    });
    bvn = bvn * asr / (2.0 * two_pi) + sf(h) * sf(k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (abs_r < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      bvn = a * std::exp(-(bs / as + hk) / 2.0) *
            (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (hk > -160.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      bvn += with_rule(abs_r, [&](double x) {
        const double xs = (a * (x + 1.0)) * (a * (x + 1.0));
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr <= -100.0) return 0.0;
        return a * std::exp(asr) *
               (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                (1.0 + c * xs * (1.0 + d * xs)));
      });
      bvn = -bvn / two_pi;
    }
    if (r > 0.0) {
      bvn += sf(std::max(h, k));
    } else {
      bvn = -bvn + std::max(0.0, sf(h) - sf(k));
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

double bivariate_box(double a1, double b1, double a2, double b2, double r) {
  const double p = bivariate_upper(a1, a2, r) - bivariate_upper(b1, a2, r) -
                   bivariate_upper(a1, b2, r) + bivariate_upper(b1, b2, r);
  return std::max(p, 0.0);
}

}  // namespace gcimpute::normal
