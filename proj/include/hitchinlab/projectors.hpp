#pragma once

#include "hitchinlab/hermitian.hpp"

#include <limits>

namespace hitchinlab {

// Commuting family of spectral projectors indexed by eigenvalue clusters.
struct ProjectorFamily {
  std::vector<Mat> projectors;
  std::vector<cplx> centers;
  double gap = std::numeric_limits<double>::infinity();
};

namespace detail {

// Swap the adjacent diagonal entries (k, k+1) of the upper-triangular t by a
// unitary similarity, accumulating the rotation into q.
inline void schur_swap(Mat& t, Mat& q, int k) {
  const cplx a = t(k, k), b = t(k, k + 1), d = t(k + 1, k + 1);
  const cplx x = b, y = d - a;
  const double n = std::sqrt(std::norm(x) + std::norm(y));
  if (n == 0.0) return;  // coincident eigenvalues, block already diagonal
  Mat g(2, 2);
  g << x / n, -std::conj(y) / n, y / n, std::conj(x) / n;
  t.middleRows(k, 2) = Mat(g.adjoint() * t.middleRows(k, 2));
  t.middleCols(k, 2) = Mat(t.middleCols(k, 2) * g);
  q.middleCols(k, 2) = Mat(q.middleCols(k, 2) * g);
  t(k + 1, k) = 0;
}

// X solving t11 * X - X * t22 = t12 for upper-triangular t11, t22 with
// disjoint spectra; forward substitution over columns.
inline Mat sylvester_triangular(const Mat& t11, const Mat& t22, const Mat& t12) {
  const int p = static_cast<int>(t11.rows());
  const int m = static_cast<int>(t22.rows());
  Mat x(p, m);
  for (int j = 0; j < m; ++j) {
    Vec rhs = t12.col(j);
    for (int k = 0; k < j; ++k) rhs += x.col(k) * t22(k, j);
    Mat shifted = t11;
    shifted.diagonal().array() -= t22(j, j);
    x.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return x;
}

}  // namespace detail

// Projectors onto the sums of generalized eigenspaces of f grouped by nearest
// cluster center. Requires every cluster nonempty with diameter < gap / 10.
// Realized by Schur-form block extraction: the selected eigenvalues are moved
// to the leading block by adjacent swaps and the invariant complement is read
// off a triangular Sylvester solve.
inline ProjectorFamily spectral_projectors(const Mat& f, const std::vector<cplx>& centers) {
  const int r = static_cast<int>(f.rows());
  if (r == 0 || f.cols() != r) throw std::invalid_argument("spectral_projectors: matrix must be square");
  if (centers.empty()) throw std::invalid_argument("spectral_projectors: no clusters given");

  ProjectorFamily fam;
  fam.centers = centers;
  for (size_t i = 0; i < centers.size(); ++i)
    for (size_t j = i + 1; j < centers.size(); ++j)
      fam.gap = std::min(fam.gap, std::abs(centers[i] - centers[j]));

  Eigen::ComplexSchur<Mat> schur(f, true);
  if (schur.info() != Eigen::Success) throw std::runtime_error("spectral_projectors: Schur failed");
  const Mat t0 = schur.matrixT();
  const Mat q0 = schur.matrixU();

  std::vector<int> label(r);
  for (int i = 0; i < r; ++i) {
    const cplx lam = t0(i, i);
    int best = 0;
    for (size_t c = 1; c < centers.size(); ++c)
      if (std::abs(lam - centers[c]) < std::abs(lam - centers[best])) best = static_cast<int>(c);
    label[i] = best;
  }

  for (size_t c = 0; c < centers.size(); ++c) {
    double diam = 0.0;
    int count = 0;
    for (int i = 0; i < r; ++i) {
      if (label[i] != static_cast<int>(c)) continue;
      ++count;
      for (int j = i + 1; j < r; ++j)
        if (label[j] == static_cast<int>(c)) diam = std::max(diam, std::abs(t0(i, i) - t0(j, j)));
    }
    if (count == 0) throw std::invalid_argument("spectral_projectors: empty cluster");
    if (std::isfinite(fam.gap) && !(diam < fam.gap / 10.0))
      throw std::invalid_argument("spectral_projectors: clusters not separated");
  }

  for (size_t c = 0; c < centers.size(); ++c) {
    Mat t = t0, q = q0;
    std::vector<int> lab = label;
    int dst = 0;
    for (int i = 0; i < r; ++i) {
      if (lab[i] != static_cast<int>(c)) continue;
      for (int k = i; k > dst; --k) {
        detail::schur_swap(t, q, k - 1);
        std::swap(lab[k - 1], lab[k]);
      }
      ++dst;
    }
    const int p = dst;
    Mat p_schur = Mat::Zero(r, r);
    p_schur.topLeftCorner(p, p) = Mat::Identity(p, p);
    if (p < r) {
      const Mat x = detail::sylvester_triangular(t.topLeftCorner(p, p), t.bottomRightCorner(r - p, r - p),
                                                 t.topRightCorner(p, r - p));
      p_schur.topRightCorner(p, r - p) = x;
    }
    fam.projectors.push_back(Mat(q * p_schur * q.adjoint()));
  }

  Mat sum = Mat::Zero(r, r);
  for (const Mat& pi : fam.projectors) {
    const double big = std::max(1.0, pi.cwiseAbs().maxCoeff());
    if ((pi * pi - pi).cwiseAbs().maxCoeff() > kAlgebraicTol * big * big)
      throw std::runtime_error("spectral_projectors: idempotency violated");
    sum += pi;
  }
  if ((sum - Mat::Identity(r, r)).cwiseAbs().maxCoeff() > 1e-8)
    throw std::runtime_error("spectral_projectors: projectors do not sum to identity");
  return fam;
}

// |pi - pi'|_h where pi' is the h-orthogonal projector onto the image of pi;
// vanishes exactly when pi is h-self-adjoint.
inline double orthogonality_defect(const Mat& pi, const HermitianForm& h) {
  const int r = h.dim();
  if (pi.rows() != r || pi.cols() != r) throw std::invalid_argument("orthogonality_defect: shape mismatch");
  const double big = std::max(1.0, pi.cwiseAbs().maxCoeff());
  if ((pi * pi - pi).cwiseAbs().maxCoeff() > 1e-8 * big * big)
    throw std::invalid_argument("orthogonality_defect: input not idempotent");
  Eigen::ColPivHouseholderQR<Mat> qr(pi);
  const int rk = static_cast<int>(qr.rank());
  if (rk == 0) return op_norm(pi, h);
  const Mat basis = qr.householderQ() * Mat::Identity(r, rk);
  const Mat gram = basis.adjoint() * h.matrix() * basis;
  const Mat pi_orth = basis * Eigen::LLT<Mat>(gram).solve(Mat(basis.adjoint() * h.matrix()));
  return op_norm(Mat(pi - pi_orth), h);
}

}  // namespace hitchinlab
