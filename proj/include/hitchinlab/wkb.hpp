#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "hitchinlab/decayfit.hpp"
#include "hitchinlab/gaugesolve.hpp"
#include "hitchinlab/hermitian.hpp"
#include "hitchinlab/pathconn.hpp"
#include "hitchinlab/transport.hpp"

namespace hitchinlab {

// The flat family along the path has diagonal growth rates t * 2 Re a_j:
// the metric pairing doubles the real part of the spectral data.  The
// derived sampled system replaces a_j by 2 Re a_j and keeps b and B.
inline PathConnectionData derived_flat_connection(const PathConnectionData& base, double t) {
  PathConnectionData out = base;
  out.t = t;
  for (int k = 0; k < out.nodes; ++k)
    for (int j = 0; j < out.rank; ++j) out.a[k](j) = cplx(2.0 * base.a[k](j).real(), 0.0);
  out.validate();
  return out;
}

struct WkbStep {
  double t = 0;
  RealVec kappa_over_t;  // descending
  double err_inf = 0;
};

// Stretch factors between h0 at the start and h1 at the end of the path,
// through the gauged transport (I+G(1))^{-1} diag(exp(-mu)) (I+G(0)).
// Computed entirely in the log domain via compound matrices: the extreme
// diagonal scales exp(-mu_i) are factored out of every exterior power before
// anything is assembled in floating point, so the small stretch factors
// survive grading that an assembled transport matrix could never represent
// (singular value ratios far below machine epsilon).
inline RealVec dvector_gauged_product(const HermitianForm& h0, const HermitianForm& h1,
                                      const PathConnectionData& conn, const GaugePair& gauge) {
  const int r = conn.rank;
  if (h0.dim() != r || h1.dim() != r)
    throw std::invalid_argument("dvector_gauged_product: metric rank mismatch");
  if (static_cast<int>(gauge.G.size()) != conn.nodes)
    throw std::invalid_argument("dvector_gauged_product: sample count mismatch");
  std::vector<cplx> samples(conn.nodes);
  Vec mu(r);
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < conn.nodes; ++k) samples[k] = conn.alpha(k)(i) + gauge.H[k](i);
    mu(i) = simpson_integral(samples, conn.step());
  }
  const Mat eye = Mat::Identity(r, r);
  const Mat u = h1.cholL().adjoint() *
                (eye + gauge.G[conn.nodes - 1]).partialPivLu().solve(eye);
  Mat v = (eye + gauge.G[0]) *
          h0.cholL().adjoint().triangularView<Eigen::Upper>().solve(eye);
  for (int i = 0; i < r; ++i) v.row(i) *= std::exp(cplx(0, -mu(i).imag()));

  RealVec log_prods(r + 1);
  log_prods(0) = 0;
  for (int k = 1; k <= r; ++k) {
    const auto subsets = k_subsets(r, k);
    const Mat cu = compound_matrix(u, subsets);
    const Mat cv = compound_matrix(v, subsets);
    const int m = static_cast<int>(subsets.size());
    RealVec scale(m);
    double top = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < m; ++p) {
      double acc = 0;
      for (int i : subsets[p]) acc -= mu(i).real();
      scale(p) = acc;
      top = std::max(top, acc);
    }
    Mat a = cu;
    for (int p = 0; p < m; ++p) a.col(p) *= std::exp(scale(p) - top);
    a = a * cv;
    Eigen::JacobiSVD<Mat> svd(a);
    const double smax = svd.singularValues()(0);
    if (!(smax > 0)) throw std::runtime_error("dvector_gauged_product: degenerate transport");
    log_prods(k) = std::log(smax) + top;
  }
  RealVec kappa(r);
  for (int k = 1; k <= r; ++k) kappa(k - 1) = log_prods(k) - log_prods(k - 1);
  return kappa;
}

struct WkbReport {
  RealVec target;  // 2*alpha_i = -2 int Re a_i, descending
  std::vector<WkbStep> steps;
  bool has_fit = false;
  DecayFit fit;
};

// Compares the renormalized distance vector of endpoint metrics transported
// along the path against the first-order prediction, across a sweep of t.
inline WkbReport wkb_compare(const PathConnectionData& base, const std::vector<double>& ts,
                             const std::optional<HermitianForm>& h_start = std::nullopt,
                             const std::optional<HermitianForm>& h_end = std::nullopt,
                             const GaugeSolveOptions& opt = GaugeSolveOptions{}) {
  base.validate();
  if (ts.empty()) throw std::invalid_argument("wkb_compare: empty t sweep");
  const int r = base.rank;
  const double h = base.step();
  const HermitianForm h0 = h_start ? *h_start : HermitianForm::identity(r);
  const HermitianForm h1 = h_end ? *h_end : HermitianForm::identity(r);
  if (h0.dim() != r || h1.dim() != r)
    throw std::invalid_argument("wkb_compare: endpoint metric rank mismatch");

  WkbReport rep;
  rep.target = RealVec(r);
  std::vector<cplx> samples(base.nodes);
  for (int i = 0; i < r; ++i) {
    for (int k = 0; k < base.nodes; ++k) samples[k] = 2.0 * base.a[k](i).real();
    rep.target(i) = -simpson_integral(samples, h).real();
  }
  std::sort(rep.target.data(), rep.target.data() + r, std::greater<double>());

  for (double t : ts) {
    if (!(t > 0)) throw std::invalid_argument("wkb_compare: t values must be positive");
    const PathConnectionData conn = derived_flat_connection(base, t);
    const GaugePair gauge = solve_gauge(conn, opt);
    const RealVec kappa = dvector_gauged_product(h0, h1, conn, gauge);
    WkbStep step;
    step.t = t;
    step.kappa_over_t = kappa / t;
    step.err_inf = (step.kappa_over_t - rep.target).cwiseAbs().maxCoeff();
    rep.steps.push_back(std::move(step));
  }

  if (rep.steps.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& st : rep.steps)
      if (st.err_inf > 0) pts.emplace_back(st.t, st.err_inf);
    if (pts.size() >= 3) {
      rep.fit = fit_exponential_decay(pts);
      rep.has_fit = true;
    }
  }
  return rep;
}

}  // namespace hitchinlab
