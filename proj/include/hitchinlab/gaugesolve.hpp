#pragma once

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hitchinlab/pathconn.hpp"

namespace hitchinlab {

// Gauge data (I + G, H) conjugating the full connection A + B into the
// diagonal A + H.  G is off-diagonal with G_ij(1) = 0 for i < j and
// G_ij(0) = 0 for i > j; H is diagonal.  g_bar stores D0(G), kept alongside
// so that residual evaluation and norm reporting need no re-differentiation.
struct GaugePair {
  OffDiagFun G;
  OffDiagFun g_bar;
  DiagFun H;
  int iterations = 0;
  double defect = 0.0;       // last fixed-point update size
  double contraction = 0.0;  // last observed update ratio
};

struct GaugeSolveOptions {
  double smallness = 0.05;  // admissible sup norm of B
  int max_iterations = 200;
  double tolerance = 1e-13;
};

class GaugeSolveError : public std::runtime_error {
 public:
  GaugeSolveError(const std::string& what, double defect, double contraction)
      : std::runtime_error(what), last_defect(defect), last_contraction(contraction) {}
  double last_defect;
  double last_contraction;
};

namespace detail {

// Right-hand side of the fixed-point map: given G and B, returns
// H = diag(G B) and g_bar = B + offdiag(G B) - H G.
inline void gauge_fixed_point(const PathConnectionData& conn, const OffDiagFun& G, DiagFun& H,
                              OffDiagFun& g_bar) {
  const int r = conn.rank;
  for (int k = 0; k < conn.nodes; ++k) {
    const Mat gb = G[k] * conn.B[k];
    for (int i = 0; i < r; ++i) H[k](i) = gb(i, i);
    Mat rhs = conn.B[k] + gb - H[k].asDiagonal() * G[k];
    rhs.diagonal().setZero();
    g_bar[k] = rhs;
  }
}

}  // namespace detail

// Solves the conjugation equation
//   (I+G)^{-1} (A + H) (I+G) + (I+G)^{-1} G' = A + B
// by Picard iteration on (H, g_bar) with G = I0(g_bar).  Requires the
// perturbation B to be below the smallness threshold; throws a
// GaugeSolveError carrying the last defect if the iteration fails to
// contract.
inline GaugePair solve_gauge(const PathConnectionData& conn,
                             const GaugeSolveOptions& opt = GaugeSolveOptions{},
                             const I0Operator* prebuilt = nullptr) {
  conn.validate();
  const double bnorm = sup_norm(conn.B);
  if (bnorm > opt.smallness)
    throw std::invalid_argument("solve_gauge: perturbation exceeds smallness threshold");

  const I0Operator* inv = prebuilt;
  std::unique_ptr<I0Operator> owned;
  if (!inv) {
    owned = std::make_unique<I0Operator>(conn);
    inv = owned.get();
  }

  const int r = conn.rank;
  GaugePair out;
  out.G.assign(conn.nodes, Mat::Zero(r, r));
  out.g_bar = conn.B;
  out.H.assign(conn.nodes, Vec::Zero(r));

  DiagFun h_new(conn.nodes, Vec::Zero(r));
  OffDiagFun gbar_new(conn.nodes, Mat::Zero(r, r));
  double prev_defect = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.G = inv->apply(out.g_bar);
    detail::gauge_fixed_point(conn, out.G, h_new, gbar_new);
    double defect = 0;
    for (int k = 0; k < conn.nodes; ++k) {
      defect = std::max(defect, (gbar_new[k] - out.g_bar[k]).cwiseAbs().maxCoeff());
      defect = std::max(defect, (h_new[k] - out.H[k]).cwiseAbs().maxCoeff());
    }
    out.iterations = it;
    out.defect = defect;
    out.contraction = std::isfinite(prev_defect) && prev_defect > 0 ? defect / prev_defect : 0.0;
    std::swap(out.g_bar, gbar_new);
    std::swap(out.H, h_new);
    if (defect <= opt.tolerance) {
      out.G = inv->apply(out.g_bar);
      return out;
    }
    if (it > 4 && defect > prev_defect && defect > 10 * opt.tolerance)
      throw GaugeSolveError("solve_gauge: iteration stopped contracting", defect, out.contraction);
    prev_defect = defect;
  }
  throw GaugeSolveError("solve_gauge: no convergence within iteration budget", out.defect,
                        out.contraction);
}

// Node-wise residual of the conjugation equation with the derivative of G
// realized by the declared stencil:
//   R = (I+G)^{-1} [ (A+H)(I+G) + G' ] - (A+B).
// Returns the sup over nodes of the max-abs entry of R.
inline double equation_residual(const PathConnectionData& conn, const GaugePair& gauge) {
  if (static_cast<int>(gauge.G.size()) != conn.nodes)
    throw std::invalid_argument("equation_residual: sample count mismatch");
  const int r = conn.rank;
  const OffDiagFun dG = stencil_derivative(gauge.G, conn.step());
  double worst = 0;
  for (int k = 0; k < conn.nodes; ++k) {
    const Mat diag_full = (conn.alpha(k) + gauge.H[k]).asDiagonal();
    const Mat lhs = (Mat::Identity(r, r) + gauge.G[k]).partialPivLu().solve(
        diag_full * (Mat::Identity(r, r) + gauge.G[k]) + dG[k]);
    const Mat target = Mat(conn.alpha(k).asDiagonal()) + conn.B[k];
    worst = std::max(worst, (lhs - target).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Norm ratio (|G| + |D0 G| + |H|) / |B| used in the contraction estimates.
inline double gauge_norm_ratio(const PathConnectionData& conn, const GaugePair& gauge) {
  const double bnorm = sup_norm(conn.B);
  if (bnorm == 0) return 0;
  return (sup_norm(gauge.G) + sup_norm(gauge.g_bar) + sup_norm(gauge.H)) / bnorm;
}

}  // namespace hitchinlab
