#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hitchinlab {

// Log-linear model y ~ C * exp(-eps * x) fitted by least squares on log y.
struct DecayFit {
  double C = 0.0;
  double eps = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> samples;
};

inline DecayFit fit_exponential_decay(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw std::invalid_argument("fit_exponential_decay: need at least 3 samples");
  const int n = static_cast<int>(samples.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : samples) {
    if (!(y > 0)) throw std::invalid_argument("fit_exponential_decay: samples must be positive");
    const double ly = std::log(y);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
  }
  const double det = n * sxx - sx * sx;
  if (det == 0) throw std::invalid_argument("fit_exponential_decay: degenerate abscissae");
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;

  DecayFit fit;
  fit.C = std::exp(intercept);
  fit.eps = -slope;
  fit.samples = samples;

  const double mean = sy / n;
  double ss_tot = 0, ss_res = 0;
  for (const auto& [x, y] : samples) {
    const double ly = std::log(y);
    ss_tot += (ly - mean) * (ly - mean);
    const double pred = intercept + slope * x;
    ss_res += (ly - pred) * (ly - pred);
  }
  fit.r_squared = ss_tot > 1e-30 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace hitchinlab
