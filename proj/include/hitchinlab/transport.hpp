#pragma once

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hitchinlab/gaugesolve.hpp"
#include "hitchinlab/pathconn.hpp"

namespace hitchinlab {

namespace detail {

// Local cubic interpolation of the sampled full connection A(s) + B(s).
class ConnectionInterpolant {
 public:
  explicit ConnectionInterpolant(const PathConnectionData& conn) : h_(conn.step()) {
    const int r = conn.rank;
    values_.reserve(conn.nodes);
    for (int k = 0; k < conn.nodes; ++k)
      values_.push_back(Mat(conn.alpha(k).asDiagonal()) + conn.B[k]);
    (void)r;
  }

  Mat operator()(double s) const {
    const int n = static_cast<int>(values_.size());
    const double x = std::clamp(s, 0.0, 1.0) / h_;
    int base = static_cast<int>(std::floor(x)) - 1;
    base = std::clamp(base, 0, n - 4);
    const double u = x - base;
    Mat acc = Mat::Zero(values_[0].rows(), values_[0].cols());
    for (int q = 0; q < 4; ++q) {
      double w = 1;
      for (int p = 0; p < 4; ++p)
        if (p != q) w *= (u - p) / (q - p);
      acc += w * values_[base + q];
    }
    return acc;
  }

 private:
  double h_;
  std::vector<Mat> values_;
};

}  // namespace detail

// Transport matrix of the system Y' = -(A(s) + B(s)) Y from s0 to s1,
// integrated with an adaptive embedded Dormand-Prince 5(4) step on the
// cubic interpolant of the samples.  Stiff regimes (large t) underflow the
// step size; use the gauged form there.
inline Mat parallel_transport_direct(const PathConnectionData& conn, double s0 = 0.0,
                                     double s1 = 1.0, double rtol = 1e-11) {
  conn.validate();
  if (!(s0 >= 0 && s1 <= 1 && s0 < s1))
    throw std::invalid_argument("parallel_transport_direct: need 0 <= s0 < s1 <= 1");
  const detail::ConnectionInterpolant f(conn);
  const int r = conn.rank;
  auto rhs = [&](double s, const Mat& y) -> Mat { return -(f(s) * y); };

  // Dormand-Prince coefficients.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                      b6 = 11.0 / 84;
  static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                      e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                      e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Mat y = Mat::Identity(r, r);
  double s = s0;
  double step = (s1 - s0) / 64.0;
  const double atol = 1e-13;
  long iter = 0;
  Mat k1 = rhs(s, y);
  while (s < s1) {
    if (++iter > 20000000)
      throw std::runtime_error("parallel_transport_direct: step budget exhausted (stiff system; use gauged transport)");
    if (step < 1e-14)
      throw std::runtime_error("parallel_transport_direct: step size underflow (stiff system; use gauged transport)");
    step = std::min(step, s1 - s);
    const Mat k2 = rhs(s + c2 * step, y + step * (a21 * k1));
    const Mat k3 = rhs(s + c3 * step, y + step * (a31 * k1 + a32 * k2));
    const Mat k4 = rhs(s + c4 * step, y + step * (a41 * k1 + a42 * k2 + a43 * k3));
    const Mat k5 = rhs(s + c5 * step, y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Mat k6 = rhs(s + step, y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Mat y5 = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Mat k7 = rhs(s + step, y5);
    const Mat err_mat = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = atol + rtol * std::max(y.cwiseAbs().maxCoeff(), y5.cwiseAbs().maxCoeff());
    const double err = err_mat.cwiseAbs().maxCoeff() / scale;
    if (err <= 1.0) {
      s += step;
      y = y5;
      k1 = k7;  // first-same-as-last
    } else {
      k1 = rhs(s, y);
    }
    const double factor = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    step *= std::clamp(factor, 0.2, 5.0);
  }
  return y;
}

// Transport over the full interval assembled from gauge data:
//   Pi = (I + G(1))^{-1} diag(exp(-int_0^1 (alpha_i + H_ii))) (I + G(0)).
inline Mat parallel_transport_gauged(const PathConnectionData& conn, const GaugePair& gauge) {
  conn.validate();
  if (static_cast<int>(gauge.G.size()) != conn.nodes)
    throw std::invalid_argument("parallel_transport_gauged: sample count mismatch");
  const int r = conn.rank;
  const double h = conn.step();
  Vec expo(r);
  std::vector<cplx> samples(conn.nodes);
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < conn.nodes; ++k) samples[k] = conn.alpha(k)(i) + gauge.H[k](i);
    expo(i) = std::exp(-simpson_integral(samples, h));
  }
  const Mat left = (Mat::Identity(r, r) + gauge.G[conn.nodes - 1]).partialPivLu().solve(
      Mat(expo.asDiagonal()));
  return left * (Mat::Identity(r, r) + gauge.G[0]);
}

// Liouville invariant: det of the transport equals exp(-int tr(A+B)); B is
// trace free, so only the diagonal contributes.
inline cplx transport_determinant_target(const PathConnectionData& conn) {
  const double h = conn.step();
  std::vector<cplx> tr(conn.nodes);
  for (int k = 0; k < conn.nodes; ++k) tr[k] = conn.alpha(k).sum();
  return std::exp(-simpson_integral(tr, h));
}

inline cplx log_transport_determinant_target(const PathConnectionData& conn) {
  const double h = conn.step();
  std::vector<cplx> tr(conn.nodes);
  for (int k = 0; k < conn.nodes; ++k) tr[k] = conn.alpha(k).sum();
  return -simpson_integral(tr, h);
}

// log det of the gauged transport, evaluated without assembling the matrix:
//   log det Pi = log det(I+G(0)) - log det(I+G(1)) - sum_i int (alpha_i + H_ii).
// Stays finite at t values where the transport entries themselves overflow.
inline cplx log_transport_determinant_gauged(const PathConnectionData& conn,
                                             const GaugePair& gauge) {
  conn.validate();
  if (static_cast<int>(gauge.G.size()) != conn.nodes)
    throw std::invalid_argument("log_transport_determinant_gauged: sample count mismatch");
  const int r = conn.rank;
  const double h = conn.step();
  std::vector<cplx> samples(conn.nodes);
  cplx mu_sum = 0;
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < conn.nodes; ++k) samples[k] = conn.alpha(k)(i) + gauge.H[k](i);
    mu_sum += simpson_integral(samples, h);
  }
  const Mat eye = Mat::Identity(r, r);
  const cplx det0 = Mat(eye + gauge.G[0]).partialPivLu().determinant();
  const cplx det1 = Mat(eye + gauge.G[conn.nodes - 1]).partialPivLu().determinant();
  return std::log(det0) - std::log(det1) - mu_sum;
}

}  // namespace hitchinlab
