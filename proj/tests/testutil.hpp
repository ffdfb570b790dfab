#pragma once

#include "hitchinlab/hermitian.hpp"

#include <random>

namespace testutil {

using hitchinlab::cplx;
using hitchinlab::Mat;
using hitchinlab::Vec;

inline std::mt19937_64 make_rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline cplx random_cplx(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  const double re = u(rng);
  const double im = u(rng);
  return cplx(re, im);
}

inline Mat random_matrix(std::mt19937_64& rng, int r, double scale = 1.0) {
  Mat m(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) m(i, j) = random_cplx(rng, scale);
  return m;
}

inline Mat random_pd(std::mt19937_64& rng, int r) {
  const Mat g = random_matrix(rng, r);
  return Mat(g.adjoint() * g + 0.25 * Mat::Identity(r, r));
}

inline Mat random_invertible(std::mt19937_64& rng, int r) {
  while (true) {
    Mat m = random_matrix(rng, r);
    if (std::abs(m.determinant()) > 0.05) return m;
  }
}

inline Mat random_unitary(std::mt19937_64& rng, int r) {
  const Mat m = random_matrix(rng, r);
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ() * Mat::Identity(r, r);
  return q;
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
