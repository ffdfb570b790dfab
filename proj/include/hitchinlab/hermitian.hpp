#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hitchinlab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double kAlgebraicTol = 1e-10;

// Exact small integer power; unlike std::pow it is well defined at z = 0 with
// n = 0 and never routes through exp/log.
inline cplx ipow(cplx z, int n) {
  if (n < 0) return cplx(1.0, 0.0) / ipow(z, -n);
  cplx out(1.0, 0.0);
  while (n > 0) {
    if (n & 1) out *= z;
    z *= z;
    n >>= 1;
  }
  return out;
}

// Positive-definite Hermitian pairing in a declared frame (v_1, ..., v_r):
// matrix(i, j) = h(v_i, v_j), conjugate-linear in the first slot, so for
// coordinate columns x, y the pairing is h(x, y) = x^H * matrix * y and
// |x|^2 = x^H * matrix * x.
class HermitianForm {
 public:
  explicit HermitianForm(Mat m) : entries_(std::move(m)) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
      throw std::invalid_argument("HermitianForm: matrix must be square and nonempty");
    if (!entries_.allFinite())
      throw std::invalid_argument("HermitianForm: entries not finite");
    const double scale = entries_.cwiseAbs().maxCoeff();
    if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0))
      throw std::invalid_argument("HermitianForm: matrix not Hermitian");
    entries_ = Mat(0.5 * (entries_ + entries_.adjoint()));
    Eigen::LLT<Mat> llt(entries_);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("HermitianForm: matrix not positive definite");
    chol_ = llt.matrixL();
    for (int i = 0; i < chol_.rows(); ++i)
      if (!(chol_(i, i).real() > 0))
        throw std::invalid_argument("HermitianForm: matrix not positive definite");
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Mat& matrix() const { return entries_; }
  // Lower Cholesky factor, matrix = L * L^H.
  const Mat& cholL() const { return chol_; }

  cplx pair(const Vec& x, const Vec& y) const { return (x.adjoint() * entries_ * y)(0); }
  double squared_norm(const Vec& x) const { return pair(x, x).real(); }
  double norm(const Vec& x) const { return std::sqrt(std::max(0.0, squared_norm(x))); }

  double log_det() const {
    double s = 0.0;
    for (int i = 0; i < chol_.rows(); ++i) s += std::log(chol_(i, i).real());
    return 2.0 * s;
  }

  // Metric of the same form expressed in the new frame w = v * g.
  HermitianForm pullback(const Mat& g) const {
    if (g.rows() != entries_.rows() || g.cols() != g.rows())
      throw std::invalid_argument("HermitianForm::pullback: bad frame-change shape");
    return HermitianForm(g.adjoint() * entries_ * g);
  }

  static HermitianForm identity(int r) { return HermitianForm(Mat::Identity(r, r)); }
  static HermitianForm diagonal(const RealVec& d) {
    Mat m = Mat::Zero(d.size(), d.size());
    for (int i = 0; i < d.size(); ++i) m(i, i) = d(i);
    return HermitianForm(m);
  }

 private:
  Mat entries_;
  Mat chol_;
};

// Invertible frame change w = v * g. Coordinates transform by x_v = g * x_w,
// endomorphism matrices by P_w = g^{-1} * P_v * g.
struct FrameChange {
  Mat g;

  explicit FrameChange(Mat m) : g(std::move(m)) {
    if (g.rows() == 0 || g.rows() != g.cols())
      throw std::invalid_argument("FrameChange: matrix must be square and nonempty");
    if (!g.allFinite() || g.fullPivLu().isInvertible() == false)
      throw std::invalid_argument("FrameChange: matrix not invertible");
  }

  HermitianForm apply(const HermitianForm& h) const { return h.pullback(g); }
  Mat apply_endo(const Mat& p) const { return g.partialPivLu().solve(p * g); }
  FrameChange inverse() const { return FrameChange(g.inverse()); }
};

// Logarithmic stretch factors of h2 against h1: kappa_j = (1/2) log lambda_j
// with lambda_j the eigenvalues of h2 measured in h1 (whitened symmetric
// eigenproblem), sorted descending.
inline RealVec dvector(const HermitianForm& h1, const HermitianForm& h2) {
  if (h1.dim() != h2.dim()) throw std::invalid_argument("dvector: dimension mismatch");
  const auto lower = h1.cholL().triangularView<Eigen::Lower>();
  Mat b = lower.solve(h2.matrix());
  b = Mat(lower.solve(b.adjoint())).adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (b + b.adjoint())));
  if (es.info() != Eigen::Success) throw std::runtime_error("dvector: eigensolver failed");
  const int r = h1.dim();
  RealVec kappa(r);
  for (int j = 0; j < r; ++j) {
    const double lam = es.eigenvalues()(r - 1 - j);
    if (!(lam > 0)) throw std::runtime_error("dvector: nonpositive relative eigenvalue");
    kappa(j) = 0.5 * std::log(lam);
  }
  return kappa;
}

// Stretch factors of the pullback of h_dst through an invertible map f,
// relative to h_src: the log singular values of L_dst^adj f L_src^{-adj},
// descending.  Agrees with dvector(h_src, h_dst.pullback(f)) but stays
// accurate when f is strongly graded (pullback condition numbers far beyond
// eigensolver resolution).
inline RealVec dvector_map(const HermitianForm& h_src, const HermitianForm& h_dst, const Mat& f) {
  const int r = h_src.dim();
  if (f.rows() != r || f.cols() != r || h_dst.dim() != r)
    throw std::invalid_argument("dvector_map: dimension mismatch");
  Mat tmp = h_src.cholL().triangularView<Eigen::Lower>().solve(Mat(f.adjoint()));
  Mat c = h_dst.cholL().adjoint() * tmp.adjoint();
  Eigen::JacobiSVD<Mat> svd(c);
  RealVec out(r);
  for (int j = 0; j < r; ++j) {
    const double s = svd.singularValues()(j);
    if (!(s > 0)) throw std::runtime_error("dvector_map: map is singular");
    out(j) = std::log(s);
  }
  return out;
}

// Operator norm of f : (V, h_src) -> (V, h_dst), i.e. the largest h-singular
// value; `area_weight` scales the result for form-valued samples carrying a
// declared area element.
inline double op_norm(const Mat& f, const HermitianForm& h_src, const HermitianForm& h_dst,
                      double area_weight = 1.0) {
  if (f.rows() != h_dst.dim() || f.cols() != h_src.dim())
    throw std::invalid_argument("op_norm: shape mismatch");
  Mat tmp = h_src.cholL().triangularView<Eigen::Lower>().solve(Mat(f.adjoint()));
  Mat c = h_dst.cholL().adjoint() * tmp.adjoint();
  Eigen::JacobiSVD<Mat> svd(c);
  return area_weight * svd.singularValues()(0);
}

inline double op_norm(const Mat& f, const HermitianForm& h, double area_weight = 1.0) {
  return op_norm(f, h, h, area_weight);
}

// All k-element subsets of {0, ..., r-1} in lexicographic order.
inline std::vector<std::vector<int>> k_subsets(int r, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  for (int i = 0; i < k; ++i) cur[i] = i;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  if (k > r) return out;
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == r - k + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

// k-th compound matrix: entry (S, T) = det a[S, T] over the lexicographic
// k-subsets. Applied to a pairing matrix it yields the induced pairing on the
// k-th exterior power; applied to a map it yields the induced map.
inline Mat compound_matrix(const Mat& a, const std::vector<std::vector<int>>& subsets) {
  const int n = static_cast<int>(subsets.size());
  const int k = n == 0 ? 0 : static_cast<int>(subsets[0].size());
  Mat out(n, n);
  Mat minor(k, k);
  for (int si = 0; si < n; ++si)
    for (int ti = 0; ti < n; ++ti) {
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) minor(i, j) = a(subsets[si][i], subsets[ti][j]);
      out(si, ti) = k == 0 ? cplx(1, 0) : minor.determinant();
    }
  return out;
}

// Logarithmic singular exponents of f : (V, h1) -> (V, h2):
// beta_k = log ||wedge^k f||_op - log ||wedge^{k-1} f||_op, descending.
inline RealVec singular_exponents(const Mat& f, const HermitianForm& h1,
                                  const HermitianForm& h2) {
  const int r = h1.dim();
  if (f.rows() != r || f.cols() != r || h2.dim() != r)
    throw std::invalid_argument("singular_exponents: shape mismatch");
  if (!f.fullPivLu().isInvertible())
    throw std::invalid_argument("singular_exponents: singular map");
  RealVec beta(r);
  double prev = 0.0;
  for (int k = 1; k <= r; ++k) {
    const auto subsets = k_subsets(r, k);
    const Mat fk = compound_matrix(f, subsets);
    const HermitianForm g1(compound_matrix(h1.matrix(), subsets));
    const HermitianForm g2(compound_matrix(h2.matrix(), subsets));
    const double nu = std::log(op_norm(fk, g1, g2));
    beta(k - 1) = nu - prev;
    prev = nu;
  }
  return beta;
}

}  // namespace hitchinlab
