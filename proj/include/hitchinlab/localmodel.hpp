#pragma once

#include "hitchinlab/hermitian.hpp"
#include "hitchinlab/rational.hpp"

namespace hitchinlab {

// Rank-2 model on the disc/plane with eigenvalue one-form alpha * zeta^m dzeta
// and lattice twist ell; weight parameters are c1 = c and c2 = -c - ell.
struct LocalModelSpec {
  int m = 0;
  int ell = 0;
  Rational c = Rational(0);
  cplx alpha{0.0, 0.0};  // zero means "use the default m + 1"

  cplx leading() const { return alpha == cplx(0.0, 0.0) ? cplx(m + 1, 0.0) : alpha; }
  Rational c1() const { return c; }
  Rational c2() const { return -c - make_rational(ell); }
  void validate() const {
    if (m < 0 || ell < 0 || ell > m)
      throw std::invalid_argument("LocalModelSpec: need 0 <= ell <= m");
    if (leading() == cplx(0.0, 0.0)) throw std::invalid_argument("LocalModelSpec: zero leading coefficient");
  }
};

enum class FrameTag { v_frame, e_frame };

// e = v * this matrix: e1 = v1 + v2, e2 = zeta^ell * v2.
inline Mat frame_e_from_v(int ell, cplx zeta) {
  Mat p(2, 2);
  p << 1, 0, 1, ipow(zeta, ell);
  return p;
}

// Inverse conversion; singular at zeta = 0 when ell > 0.
inline Mat frame_v_from_e(int ell, cplx zeta) {
  const cplx zl = ipow(zeta, ell);
  if (zl == cplx(0.0, 0.0)) throw std::invalid_argument("frame_v_from_e: singular at zeta = 0");
  Mat p(2, 2);
  p << 1, 0, -1.0 / zl, 1.0 / zl;
  return p;
}

// Higgs endomorphism (coefficient of dzeta): diagonal in the eigenframe,
// lower triangular with a -2 alpha zeta^{m-ell} corner in the lattice frame.
inline Mat higgs_matrix(const LocalModelSpec& spec, FrameTag frame, cplx zeta) {
  spec.validate();
  const cplx a = spec.leading();
  const cplx zm = ipow(zeta, spec.m);
  Mat th = Mat::Zero(2, 2);
  th(0, 0) = a * zm;
  th(1, 1) = -a * zm;
  if (frame == FrameTag::e_frame) th(1, 0) = -2.0 * a * ipow(zeta, spec.m - spec.ell);
  return th;
}

// Decoupled flat diagonal metric in the v-frame.
inline HermitianForm hlim_metric(const LocalModelSpec& spec, cplx zeta) {
  spec.validate();
  const double r = std::abs(zeta);
  if (r == 0.0) throw std::invalid_argument("hlim_metric: undefined at zeta = 0");
  const double c = to_double(spec.c);
  RealVec d(2);
  d << std::pow(r, 2.0 * c), std::pow(r, -2.0 * c - 2.0 * spec.ell);
  return HermitianForm::diagonal(d);
}

// C^infty step built from exp(-1/x): 0 for x <= 0, 1 for x >= 1.
inline double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double qa = std::exp(-1.0 / x);
  const double qb = std::exp(-1.0 / (1.0 - x));
  return qa / (qa + qb);
}

// Cutoff of the interpolating family: 1 on |zeta| <= 1/2, 0 on |zeta| >= 1.
inline double hkappa_cutoff(double absz) { return 1.0 - smooth_step(2.0 * absz - 1.0); }

// Off-diagonal coefficient of the u-frame: u1 = e1 - w * e2, u2 = e2.
inline cplx hkappa_w(double kappa, int ell, cplx zeta) {
  const double r = std::abs(zeta);
  const double denom = kappa * hkappa_cutoff(r) + std::pow(r, 2 * ell);
  return std::conj(ipow(zeta, ell)) / denom;
}

// Interpolating metric in the e-frame: (u1, u2) declared orthogonal with
// |u1| = kappa^{-L}, |u2| = kappa^{L}. Unit determinant everywhere; purely
// decoupled diagonal (u1 = v1, u2 = zeta^ell v2) outside the unit disc.
inline HermitianForm hkappa_metric(double kappa, int L, const LocalModelSpec& spec, cplx zeta) {
  spec.validate();
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("hkappa_metric: need kappa in (0,1)");
  if (L <= 0) throw std::invalid_argument("hkappa_metric: need L >= 1");
  const cplx w = hkappa_w(kappa, spec.ell, zeta);
  const double klo = std::pow(kappa, 2.0 * L);
  const double khi = 1.0 / klo;
  Mat m(2, 2);
  m(0, 0) = khi + std::norm(w) * klo;
  m(0, 1) = std::conj(w) * klo;
  m(1, 0) = w * klo;
  m(1, 1) = klo;
  return HermitianForm(m);
}

// Pullback through the determinant-one diagonal automorphism diag(g, 1/g) of
// the v-frame splitting.
inline HermitianForm psi_gamma(const HermitianForm& v_metric, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("psi_gamma: need gamma > 0");
  if (v_metric.dim() != 2) throw std::invalid_argument("psi_gamma: rank-2 metrics only");
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = gamma;
  d(1, 1) = 1.0 / gamma;
  return v_metric.pullback(d);
}

// gamma(t) = b_c^{-1} t^{-(ell + 2c) / (2(m+1))}, the normalization bringing
// the rescaled family back onto the decoupled diagonal limit.
inline double limiting_rescale_factor(const LocalModelSpec& spec, double t, double b_c) {
  spec.validate();
  if (!(t > 0.0) || !(b_c > 0.0)) throw std::invalid_argument("limiting_rescale_factor: need t, b_c > 0");
  const Rational expo = -(make_rational(spec.ell) + make_rational(2) * spec.c) /
                        make_rational(2 * (spec.m + 1));
  return std::pow(t, to_double(expo)) / b_c;
}

// Scale data of the coordinate rescale zeta -> tau^2 zeta with
// t = |tau|^{2(m+1)}: the metric of the t-family in the lattice frame is
// W^H M(tau^2 zeta) W with the constant W below (the unique constant diagonal
// frame matching that preserves the lattice and the unit determinant).
struct PhiTauAction {
  cplx tau;
  double w1, w2;  // e-frame factors diag(|tau|^ell, |tau|^{-ell})

  PhiTauAction(const LocalModelSpec& spec, cplx tau_in) : tau(tau_in) {
    spec.validate();
    if (tau == cplx(0.0, 0.0)) throw std::invalid_argument("PhiTauAction: tau must be nonzero");
    w1 = std::pow(std::abs(tau), spec.ell);
    w2 = 1.0 / w1;
  }
  double t(const LocalModelSpec& spec) const { return std::pow(std::abs(tau), 2.0 * (spec.m + 1)); }
  cplx source_point(cplx zeta) const { return tau * tau * zeta; }

  HermitianForm apply_e_frame(const HermitianForm& source_metric_at_image) const {
    Mat w = Mat::Zero(2, 2);
    w(0, 0) = w1;
    w(1, 1) = w2;
    return source_metric_at_image.pullback(w);
  }
};

inline double tau_for_t(const LocalModelSpec& spec, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("tau_for_t: need t > 0");
  return std::pow(t, 1.0 / (2.0 * (spec.m + 1)));
}

}  // namespace hitchinlab
