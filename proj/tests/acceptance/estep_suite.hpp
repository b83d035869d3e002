#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gcimpute/marginals.hpp"

namespace acceptance {

struct EstepCase {
  std::string label;
  std::vector<gcimpute::LatentRegion> regions;
  Eigen::MatrixXd sigma;
};

inline Eigen::MatrixXd corr3(double r01, double r02, double r12) {
  Eigen::MatrixXd s(3, 3);
  s << 1, r01, r02, r01, 1, r12, r02, r12, 1;
  return s;
}

inline Eigen::MatrixXd corr2(double r) {
  Eigen::MatrixXd s(2, 2);
  s << 1, r, r, 1;
  return s;
}

// Fixed region/correlation suite: intervals mimic ordinal regions (bounded
// by the outer scaled-ECDF limits, about +-2.9 for a window of 200).
inline std::vector<EstepCase> estep_suite() {
  using gcimpute::LatentRegion;
  const double top = 2.88, bot = -2.88;
  const LatentRegion miss = LatentRegion::missing();
  auto pt = [](double z) { return LatentRegion::point(z); };
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  return {
      {"1d central interval", {{-0.5, 0.7}}, one},
      {"1d upper level", {{1.2, top}}, one},
      {"1d lower tail level", {{bot, -1.6}}, one},
      {"2d interval + point", {{0.0, 1.0}, pt(1.4)}, corr2(0.7)},
      {"2d interval + missing", {{-1.0, -0.2}, miss}, corr2(-0.6)},
      {"2d two intervals rho .9", {{0.0, top}, {0.0, top}}, corr2(0.9)},
      {"2d two intervals rho -.8", {{-0.3, 0.4}, {0.2, 1.5}}, corr2(-0.8)},
      {"2d opposite levels rho -.3", {{1.0, top}, {bot, -0.5}}, corr2(-0.3)},
      {"3d mixed example", {{0.0, 1.0}, pt(0.3), miss}, corr3(0.5, 0.5, 0.5)},
      {"3d two intervals + missing", {{-0.4, 0.6}, {0.5, 1.8}, miss}, corr3(0.6, -0.3, 0.2)},
      {"3d two intervals + point", {{bot, -0.7}, pt(-1.2), {-0.2, 0.9}}, corr3(0.4, 0.3, -0.5)},
      {"3d interval + 2 missing", {miss, {1.0, top}, miss}, corr3(0.3, 0.7, 0.45)},
      {"3d three narrow intervals", {{-0.3, 0.3}, {0.1, 0.8}, {-1.0, -0.2}}, corr3(0.5, 0.4, 0.3)},
      {"3d three wide intervals", {{0.0, top}, {0.0, top}, {0.0, top}}, corr3(0.6, 0.6, 0.6)},
      {"3d three intervals mixed sign", {{-1.2, 0.0}, {0.3, 1.4}, {-0.5, 0.9}},
       corr3(-0.5, 0.35, -0.4)},
      {"3d three intervals strong", {{0.2, 1.0}, {-0.2, 0.6}, {0.5, 2.0}}, corr3(0.85, 0.7, 0.75)},
      {"3d binary-like halves", {{bot, 0.1}, {-0.4, top}, {bot, 0.6}}, corr3(0.45, -0.35, 0.25)},
      {"3d tail interval + points", {{1.8, top}, pt(0.5), pt(-0.4)}, corr3(0.6, 0.2, -0.1)},
      {"3d all missing", {miss, miss, miss}, corr3(0.2, -0.3, 0.4)},
      {"3d points and missing", {pt(0.9), miss, pt(-0.6)}, corr3(0.55, 0.25, 0.35)},
  };
}

}  // namespace acceptance
