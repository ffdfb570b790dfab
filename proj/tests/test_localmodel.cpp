#include "hitchinlab/localmodel.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace hitchinlab;
using testutil::make_rng;
using testutil::max_abs;

namespace {

LocalModelSpec stable_spec() {
  LocalModelSpec s;
  s.m = 1;
  s.ell = 1;
  s.c = make_rational(-1, 2);
  return s;
}

std::vector<cplx> sample_points(std::mt19937_64& rng, int n, double rmin, double rmax) {
  std::uniform_real_distribution<double> ur(rmin, rmax);
  std::uniform_real_distribution<double> ua(0.0, 6.283185307179586);
  std::vector<cplx> out;
  for (int i = 0; i < n; ++i) out.push_back(std::polar(ur(rng), ua(rng)));
  return out;
}

}  // namespace

TEST_CASE("frame conversions are mutually inverse off the origin", "[localmodel]") {
  auto rng = make_rng(41);
  for (int ell : {0, 1, 2, 3}) {
    for (const cplx z : sample_points(rng, 40, 0.05, 4.0)) {
      const Mat p = frame_e_from_v(ell, z);
      const Mat q = frame_v_from_e(ell, z);
      CHECK(max_abs(Mat(p * q - Mat::Identity(2, 2))) < 1e-12);
      CHECK(max_abs(Mat(q * p - Mat::Identity(2, 2))) < 1e-12);
    }
  }
  CHECK_THROWS_AS(frame_v_from_e(2, cplx(0, 0)), std::invalid_argument);
  // ell = 0 conversion is constant and regular everywhere, including 0
  CHECK(max_abs(Mat(frame_v_from_e(0, cplx(0, 0)) * frame_e_from_v(0, cplx(0, 0)) -
                    Mat::Identity(2, 2))) < 1e-15);
}

TEST_CASE("higgs matrices in both frames", "[localmodel]") {
  auto rng = make_rng(42);
  LocalModelSpec s;
  s.m = 3;
  s.ell = 2;
  s.c = make_rational(-1, 3);
  s.validate();
  CHECK(s.leading() == cplx(4.0, 0.0));
  CHECK(s.c2() == make_rational(-5, 3));

  for (const cplx z : sample_points(rng, 40, 0.05, 3.0)) {
    const Mat tv = higgs_matrix(s, FrameTag::v_frame, z);
    CHECK(tv(0, 0) == s.leading() * ipow(z, 3));
    CHECK(tv(1, 1) == -tv(0, 0));
    CHECK(std::abs(tv(0, 1)) + std::abs(tv(1, 0)) == 0.0);

    const Mat te = higgs_matrix(s, FrameTag::e_frame, z);
    CHECK(std::abs(te.trace()) < 1e-13 * std::abs(te(0, 0)));
    // the two displays agree under the frame change
    const Mat conj = frame_v_from_e(s.ell, z) * tv * frame_e_from_v(s.ell, z);
    CHECK(max_abs(Mat(conj - te)) < 1e-10 * std::max(1.0, max_abs(te)));
  }

  // ell = m: constant lower-left corner
  LocalModelSpec eq;
  eq.m = 2;
  eq.ell = 2;
  eq.c = make_rational(-1, 2);
  const Mat te0 = higgs_matrix(eq, FrameTag::e_frame, cplx(0, 0));
  CHECK(te0(1, 0) == cplx(-6.0, 0.0));
  CHECK(te0(0, 0) == cplx(0.0, 0.0));
}

TEST_CASE("decoupled diagonal metric", "[localmodel]") {
  LocalModelSpec triv;
  triv.m = 1;
  CHECK(max_abs(Mat(hlim_metric(triv, cplx(0.7, 0.3)).matrix() - Mat::Identity(2, 2))) < 1e-14);
  CHECK_THROWS_AS(hlim_metric(triv, cplx(0, 0)), std::invalid_argument);

  auto rng = make_rng(43);
  const LocalModelSpec s = stable_spec();
  for (const cplx z : sample_points(rng, 40, 0.1, 5.0)) {
    const HermitianForm h = hlim_metric(s, z);
    CHECK(std::abs(h.matrix()(0, 1)) == 0.0);
    const double r = std::abs(z);
    CHECK(h.matrix()(0, 0).real() == Catch::Approx(std::pow(r, -1.0)));
    // |v1 ^ v2| = sqrt(det) = r^{-ell}
    CHECK(std::exp(0.5 * h.log_det()) == Catch::Approx(std::pow(r, -double(s.ell))).epsilon(1e-12));
  }
}

TEST_CASE("cutoff profile", "[localmodel]") {
  CHECK(hkappa_cutoff(0.0) == 1.0);
  CHECK(hkappa_cutoff(0.5) == 1.0);
  CHECK(hkappa_cutoff(1.0) == 0.0);
  CHECK(hkappa_cutoff(2.0) == 0.0);
  double prev = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double v = hkappa_cutoff(0.5 + 0.01 * i);
    CHECK(v <= prev + 1e-15);
    CHECK(v >= 0.0);
    prev = v;
  }
}

TEST_CASE("interpolating metric family", "[localmodel]") {
  auto rng = make_rng(44);
  const LocalModelSpec s = stable_spec();
  const double kappa = 0.3;
  const int L = 4;

  CHECK_THROWS_AS(hkappa_metric(1.5, L, s, cplx(1, 0)), std::invalid_argument);
  CHECK_THROWS_AS(hkappa_metric(kappa, 0, s, cplx(1, 0)), std::invalid_argument);

  for (const cplx z : sample_points(rng, 60, 0.0, 3.0)) {
    const HermitianForm he = hkappa_metric(kappa, L, s, z);
    CHECK(std::abs(std::exp(he.log_det()) - 1.0) < 1e-10);  // unit determinant in the lattice frame
    if (std::abs(z) >= 1.0) {
      // outside the disc: u1 = v1 and u2 = zeta^ell v2 are orthogonal
      const Mat pv = frame_e_from_v(s.ell, z);
      const HermitianForm hv = he.pullback(frame_v_from_e(s.ell, z));
      (void)pv;
      CHECK(std::abs(hv.matrix()(0, 1)) < 1e-12 * std::abs(hv.matrix()(0, 0)));
      CHECK(hv.matrix()(0, 0).real() == Catch::Approx(std::pow(kappa, -2.0 * L)));
      const double r = std::abs(z);
      CHECK(hv.matrix()(1, 1).real() ==
            Catch::Approx(std::pow(kappa, 2.0 * L) * std::pow(r, -2.0 * s.ell)));
    }
  }

  // u-frame norms at the origin: w = 0 there, so e1 = u1
  const HermitianForm h0 = hkappa_metric(kappa, L, s, cplx(0, 0));
  CHECK(h0.matrix()(0, 0).real() == Catch::Approx(std::pow(kappa, -2.0 * L)));
  CHECK(std::abs(h0.matrix()(0, 1)) == 0.0);
}

TEST_CASE("diagonal rescale action", "[localmodel]") {
  auto rng = make_rng(45);
  for (int i = 0; i < 50; ++i) {
    const HermitianForm h(testutil::random_pd(rng, 2));
    const HermitianForm same = psi_gamma(h, 1.0);
    CHECK(max_abs(Mat(same.matrix() - h.matrix())) < 1e-14);

    std::uniform_real_distribution<double> ug(0.2, 3.0);
    const double g1 = ug(rng), g2 = ug(rng);
    const HermitianForm a = psi_gamma(psi_gamma(h, g1), g2);
    const HermitianForm b = psi_gamma(h, g1 * g2);
    CHECK(max_abs(Mat(a.matrix() - b.matrix())) < 1e-10 * max_abs(b.matrix()));
    CHECK(psi_gamma(h, g1).log_det() == Catch::Approx(h.log_det()));
  }
  CHECK_THROWS_AS(psi_gamma(HermitianForm::identity(2), -1.0), std::invalid_argument);
}

TEST_CASE("limiting rescale factor", "[localmodel]") {
  LocalModelSpec triv;
  triv.m = 2;
  triv.ell = 0;
  triv.c = Rational(0);
  CHECK(limiting_rescale_factor(triv, 10.0, 1.0) == 1.0);
  CHECK(limiting_rescale_factor(triv, 1234.0, 1.0) == 1.0);

  LocalModelSpec balanced;
  balanced.m = 3;
  balanced.ell = 2;
  balanced.c = make_rational(-1);  // ell + 2c = 0
  CHECK(limiting_rescale_factor(balanced, 77.0, 2.0) == Catch::Approx(0.5));

  LocalModelSpec ex;
  ex.m = 1;
  ex.ell = 1;
  ex.c = make_rational(-1, 4);
  const double want = 0.5 * std::pow(16.0, -1.0 / 8.0);
  CHECK(limiting_rescale_factor(ex, 16.0, 2.0) == Catch::Approx(want).epsilon(1e-13));
  // logarithm identity cross-check
  CHECK(std::log(limiting_rescale_factor(ex, 16.0, 2.0)) ==
        Catch::Approx(-std::log(2.0) - (1.0 / 8.0) * std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("coordinate rescale bookkeeping", "[localmodel]") {
  const LocalModelSpec s = stable_spec();
  const PhiTauAction act(s, cplx(1.3, 0.0));
  CHECK(act.t(s) == Catch::Approx(std::pow(1.3, 4.0)));
  CHECK(std::abs(act.source_point(cplx(1.0, 1.0)) - cplx(1.69, 1.69)) < 1e-14);
  CHECK(act.w1 == Catch::Approx(1.3));
  CHECK(act.w2 == Catch::Approx(1.0 / 1.3));
  CHECK(tau_for_t(s, act.t(s)) == Catch::Approx(1.3));

  // |tau| = 1 fixes radial metrics pointwise on profiles: the frame factors
  // are unity and the source radius is unchanged
  const PhiTauAction rot(s, std::polar(1.0, 0.77));
  CHECK(rot.w1 == Catch::Approx(1.0));
  CHECK(std::abs(rot.source_point(cplx(2.0, 0.0))) == Catch::Approx(2.0));
  CHECK_THROWS_AS(PhiTauAction(s, cplx(0, 0)), std::invalid_argument);
}
