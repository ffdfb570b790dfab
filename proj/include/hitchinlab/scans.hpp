#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hitchinlab/decayfit.hpp"
#include "hitchinlab/localmodel.hpp"
#include "hitchinlab/radialsolve.hpp"
#include "hitchinlab/residual.hpp"

namespace hitchinlab {

// Cubic interpolation of a solved radial profile in the chart
// (log f1, log f2, g): local four-point Lagrange on the uniform radii, exact
// at the nodes.  Interpolating the logs keeps the diagonal positive; the
// determinant stays at 1 up to the interpolation error.
class ProfileInterpolant {
 public:
  explicit ProfileInterpolant(const RadialMetricProfile& p)
      : radii_(p.grid.radii), ell_(p.ell) {
    p.validate();
    const int n = p.nr();
    lf1_.resize(n);
    lf2_.resize(n);
    gre_.resize(n);
    gim_.resize(n);
    for (int k = 0; k < n; ++k) {
      lf1_(k) = std::log(p.f1(k));
      lf2_(k) = std::log(p.f2(k));
      gre_(k) = p.g[k].real();
      gim_(k) = p.g[k].imag();
    }
  }

  double r_min() const { return radii_.front(); }
  double r_max() const { return radii_.back(); }

  Mat e_matrix(double r) const {
    if (r < r_min() - 1e-9 || r > r_max() + 1e-9)
      throw std::invalid_argument("ProfileInterpolant: radius outside the profile range");
    const double f1 = std::exp(chart(lf1_, r));
    const double f2 = std::exp(chart(lf2_, r));
    const cplx g(chart(gre_, r), chart(gim_, r));
    const double rl = std::pow(r, ell_);
    Mat m(2, 2);
    m(0, 0) = f1;
    m(0, 1) = rl * g;
    m(1, 0) = std::conj(m(0, 1));
    m(1, 1) = f2;
    return m;
  }
  HermitianForm e_form(double r) const { return HermitianForm(e_matrix(r)); }
  HermitianForm v_form(double r) const {
    return e_form(r).pullback(frame_v_from_e(ell_, cplx(r, 0.0)));
  }

 private:
  double chart(const RealVec& values, double r) const {
    const int n = static_cast<int>(radii_.size());
    const double dr = radii_[1] - radii_[0];
    int base = static_cast<int>(std::floor((r - radii_[0]) / dr)) - 1;
    base = std::max(0, std::min(base, n - 4));
    double acc = 0;
    for (int a = 0; a < 4; ++a) {
      double w = 1;
      for (int b = 0; b < 4; ++b)
        if (b != a) w *= (r - radii_[base + b]) / (radii_[base + a] - radii_[base + b]);
      acc += w * values(base + a);
    }
    return acc;
  }

  std::vector<double> radii_;
  int ell_;
  RealVec lf1_, lf2_, gre_, gim_;
};

// Equivariant extension of a radial profile off the evaluation line:
// M(zeta) = D(theta) M0(r) D(theta)^H with D = diag(1, e^{-i ell theta}),
// i.e. the off-diagonal picks up the zeta^ell phase.
inline MetricField equivariant_metric_field(const RadialMetricProfile& profile) {
  profile.validate();
  const auto interp = std::make_shared<ProfileInterpolant>(profile);
  const int ell = profile.ell;
  return [interp, ell](cplx zeta) {
    Mat m = interp->e_matrix(std::abs(zeta));
    m(0, 1) *= std::exp(cplx(0.0, ell * std::arg(zeta)));
    m(1, 0) = std::conj(m(0, 1));
    return HermitianForm(m);
  };
}

struct DecouplingScan {
  std::vector<std::pair<double, double>> sup_by_t;  // (t, sup bracket norm)
  DecayFit fit;
};

struct LimitScan {
  std::vector<std::pair<double, double>> dist_by_t;  // (t, sup stretch magnitude)
  DecayFit fit;
};

namespace detail {

inline void check_scan_range(const ProfileInterpolant& interp, const LocalModelSpec& spec,
                             const std::vector<double>& t_list, double r_lo, double r_hi,
                             int samples, const char* who) {
  if (t_list.size() < 3) throw std::invalid_argument(std::string(who) + ": need at least 3 scale values");
  for (size_t i = 0; i < t_list.size(); ++i) {
    if (!(t_list[i] > 0)) throw std::invalid_argument(std::string(who) + ": scales must be positive");
    if (i > 0 && !(t_list[i] > t_list[i - 1]))
      throw std::invalid_argument(std::string(who) + ": scales must increase");
  }
  if (!(r_lo > 0) || !(r_hi > r_lo))
    throw std::invalid_argument(std::string(who) + ": need 0 < r_lo < r_hi");
  if (samples < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 radial samples");
  const double tau = tau_for_t(spec, t_list.back());
  if (tau * tau * r_hi > interp.r_max() + 1e-9)
    throw std::invalid_argument(std::string(who) +
                                ": rescaled window leaves the profile (increase the outer radius "
                                "or lower the largest scale)");
  const double tau0 = tau_for_t(spec, t_list.front());
  if (tau0 * tau0 * r_lo < interp.r_min() - 1e-9)
    throw std::invalid_argument(std::string(who) + ": rescaled window undershoots the profile");
}

}  // namespace detail

// Sup of |[t theta, (t theta)^{*_{h_t}}]|_{h_t} over an annulus, for the
// scaled family h_t obtained from the solved profile by the coordinate
// rescale; the decay of the sup in t is fitted with the log-linear model.
inline DecouplingScan decoupling_scan(const RadialMetricProfile& profile,
                                      const LocalModelSpec& spec,
                                      const std::vector<double>& t_list, double r_lo,
                                      double r_hi, int samples = 96) {
  spec.validate();
  if (profile.ell != spec.ell)
    throw std::invalid_argument("decoupling_scan: profile twist disagrees with the model");
  const ProfileInterpolant interp(profile);
  detail::check_scan_range(interp, spec, t_list, r_lo, r_hi, samples, "decoupling_scan");

  DecouplingScan out;
  for (const double t : t_list) {
    const PhiTauAction act(spec, cplx(tau_for_t(spec, t), 0.0));
    double sup = 0;
    for (int i = 0; i < samples; ++i) {
      const double r = r_lo + (r_hi - r_lo) * i / (samples - 1);
      const HermitianForm ht = act.apply_e_frame(interp.e_form(act.source_point(r).real()));
      const Mat theta = t * higgs_matrix(spec, FrameTag::e_frame, cplx(r, 0.0));
      const Mat adj = Eigen::PartialPivLU<Mat>(ht.matrix()).solve(theta.adjoint() * ht.matrix());
      sup = std::max(sup, op_norm(theta * adj - adj * theta, ht));
    }
    out.sup_by_t.emplace_back(t, sup);
  }
  // A commuting (polystable) model gives exact zeros; the log-linear fit is
  // only defined on positive samples and stays empty otherwise.
  bool positive = true;
  for (const auto& s : out.sup_by_t) positive = positive && s.second > 0;
  if (positive) out.fit = fit_exponential_decay(out.sup_by_t);
  out.fit.samples = out.sup_by_t;
  return out;
}

// Sup over a window of the largest stretch factor between the decoupled
// diagonal limit and the rescaled-and-renormalized family, per scale t, with
// the log-linear decay fit.
inline LimitScan limit_convergence_check(const RadialMetricProfile& profile,
                                         const LocalModelSpec& spec, double b_c,
                                         const std::vector<double>& t_list, double r_lo,
                                         double r_hi, int samples = 96) {
  spec.validate();
  if (profile.ell != spec.ell)
    throw std::invalid_argument("limit_convergence_check: profile twist disagrees with the model");
  if (!(b_c > 0)) throw std::invalid_argument("limit_convergence_check: b_c must be positive");
  const ProfileInterpolant interp(profile);
  detail::check_scan_range(interp, spec, t_list, r_lo, r_hi, samples, "limit_convergence_check");

  LimitScan out;
  for (const double t : t_list) {
    const PhiTauAction act(spec, cplx(tau_for_t(spec, t), 0.0));
    const double gamma = limiting_rescale_factor(spec, t, b_c);
    double sup = 0;
    for (int i = 0; i < samples; ++i) {
      const double r = r_lo + (r_hi - r_lo) * i / (samples - 1);
      const HermitianForm ht_e = act.apply_e_frame(interp.e_form(act.source_point(r).real()));
      const HermitianForm ht_v = ht_e.pullback(frame_v_from_e(spec.ell, cplx(r, 0.0)));
      const RealVec kappa = dvector(hlim_metric(spec, cplx(r, 0.0)), psi_gamma(ht_v, gamma));
      sup = std::max(sup, kappa.cwiseAbs().maxCoeff());
    }
    out.dist_by_t.emplace_back(t, sup);
  }
  bool positive = true;
  for (const auto& s : out.dist_by_t) positive = positive && s.second > 0;
  if (positive) out.fit = fit_exponential_decay(out.dist_by_t);
  out.fit.samples = out.dist_by_t;
  return out;
}

}  // namespace hitchinlab
