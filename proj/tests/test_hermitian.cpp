#include "hitchinlab/hermitian.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace hitchinlab;
using testutil::make_rng;
using testutil::random_invertible;
using testutil::random_matrix;
using testutil::random_pd;
using testutil::random_unitary;

namespace {

// Independent lower-triangular Cholesky, a = l * l^H.
Mat chol_lower_oracle(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Mat l = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      cplx s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      if (i == j)
        l(i, i) = std::sqrt(s.real());
      else
        l(i, j) = s / l(j, j);
    }
  }
  return l;
}

RealVec dvector_whitening_oracle(const Mat& m1, const Mat& m2) {
  const Mat l = chol_lower_oracle(m1);
  Mat b = l.triangularView<Eigen::Lower>().solve(m2);
  b = Mat(l.triangularView<Eigen::Lower>().solve(b.adjoint())).adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (b + b.adjoint())));
  RealVec kappa(m1.rows());
  for (int j = 0; j < m1.rows(); ++j) kappa(j) = 0.5 * std::log(es.eigenvalues()(m1.rows() - 1 - j));
  return kappa;
}

double opnorm_power_oracle(const Mat& f, const Mat& m1, const Mat& m2, std::mt19937_64& rng) {
  const Mat a = m1.partialPivLu().solve(Mat(f.adjoint() * m2 * f));
  Vec x = Vec::Zero(f.cols());
  for (int i = 0; i < x.size(); ++i) x(i) = testutil::random_cplx(rng);
  x.normalize();
  double rho = 0.0;
  for (int it = 0; it < 200000; ++it) {
    const Vec ax = a * x;
    const double num = (x.adjoint() * m1 * ax)(0).real();
    const double den = (x.adjoint() * m1 * x)(0).real();
    const double next = num / den;
    const double resid = (ax - next * x).norm();
    x = ax / ax.norm();
    if (it > 2 && resid <= 1e-13 * std::abs(next) * x.size()) {
      rho = next;
      break;
    }
    rho = next;
  }
  return std::sqrt(rho);
}

}  // namespace

TEST_CASE("HermitianForm validates its invariants", "[hermitian]") {
  auto rng = make_rng(11);
  CHECK_THROWS_AS(HermitianForm(Mat::Zero(2, 3)), std::invalid_argument);
  Mat notherm(2, 2);
  notherm << cplx(1, 0), cplx(2, 1), cplx(0, 0), cplx(1, 0);
  CHECK_THROWS_AS(HermitianForm(notherm), std::invalid_argument);
  Mat indef(2, 2);
  indef << 1, 0, 0, -1;
  CHECK_THROWS_AS(HermitianForm(indef), std::invalid_argument);
  for (int i = 0; i < 50; ++i) {
    const HermitianForm h(random_pd(rng, 3));
    const Mat& l = h.cholL();
    CHECK(testutil::max_abs(Mat(l * l.adjoint() - h.matrix())) < 1e-12 * (1 + testutil::max_abs(h.matrix())));
  }
}

TEST_CASE("dvector on equal and diagonal metrics", "[hermitian]") {
  const HermitianForm id = HermitianForm::identity(3);
  const RealVec zero = dvector(id, id);
  CHECK(zero.cwiseAbs().maxCoeff() < 1e-14);

  RealVec d(2);
  d << std::exp(2.0), std::exp(-4.0);
  const RealVec kappa = dvector(HermitianForm::identity(2), HermitianForm::diagonal(d));
  CHECK(std::abs(kappa(0) - 1.0) < 1e-12);
  CHECK(std::abs(kappa(1) + 2.0) < 1e-12);
}

TEST_CASE("dvector matches generalized-eigenvalue oracles", "[hermitian]") {
  auto rng = make_rng(12);
  for (int i = 0; i < 200; ++i) {
    const Mat m1 = random_pd(rng, 3);
    const Mat m2 = random_pd(rng, 3);
    const RealVec kappa = dvector(HermitianForm(m1), HermitianForm(m2));

    const RealVec oracle = dvector_whitening_oracle(m1, m2);
    CHECK((kappa - oracle).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(m2, m1);
    RealVec gen(3);
    for (int j = 0; j < 3; ++j) gen(j) = 0.5 * std::log(ges.eigenvalues()(2 - j));
    CHECK((kappa - gen).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dvector antisymmetry and sum rule", "[hermitian]") {
  auto rng = make_rng(13);
  for (int i = 0; i < 200; ++i) {
    const int r = 2 + static_cast<int>(rng() % 4);
    const HermitianForm h1(random_pd(rng, r));
    const HermitianForm h2(random_pd(rng, r));
    const RealVec fwd = dvector(h1, h2);
    RealVec bwd = dvector(h2, h1);
    for (int j = 0; j < r; ++j) bwd(j) = -bwd(j);
    std::sort(bwd.data(), bwd.data() + r, std::greater<double>());
    CHECK((fwd - bwd).cwiseAbs().maxCoeff() < 1e-10);

    for (int j = 0; j + 1 < r; ++j) CHECK(fwd(j) >= fwd(j + 1) - 1e-14);
    CHECK(std::abs(fwd.sum() - 0.5 * (h2.log_det() - h1.log_det())) < 1e-10);
  }
}

TEST_CASE("singular exponents of diagonal and unitary maps", "[hermitian]") {
  const HermitianForm id = HermitianForm::identity(3);
  Mat f = Mat::Zero(3, 3);
  f(0, 0) = 3;
  f(1, 1) = 2;
  f(2, 2) = 1;
  const RealVec beta = singular_exponents(f, id, id);
  CHECK(std::abs(beta(0) - std::log(3.0)) < 1e-12);
  CHECK(std::abs(beta(1) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(beta(2)) < 1e-12);

  auto rng = make_rng(14);
  for (int i = 0; i < 20; ++i) {
    const Mat u = random_unitary(rng, 4);
    const RealVec z = singular_exponents(u, HermitianForm::identity(4), HermitianForm::identity(4));
    CHECK(z.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("singular exponents equal the d-vector of the pulled-back metric", "[hermitian]") {
  auto rng = make_rng(15);
  for (int i = 0; i < 200; ++i) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const HermitianForm h1(random_pd(rng, r));
    const HermitianForm h2(random_pd(rng, r));
    const Mat f = random_invertible(rng, r);
    const RealVec beta = singular_exponents(f, h1, h2);
    const RealVec kappa = dvector(h1, h2.pullback(f));
    CHECK((beta - kappa).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("op_norm basics and power-iteration oracle", "[hermitian]") {
  CHECK(std::abs(op_norm(Mat::Identity(3, 3), HermitianForm::identity(3)) - 1.0) < 1e-14);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = -2;
  CHECK(std::abs(op_norm(d, HermitianForm::identity(2)) - 3.0) < 1e-14);
  CHECK(std::abs(op_norm(d, HermitianForm::identity(2), HermitianForm::identity(2), 2.0) - 6.0) < 1e-14);

  auto rng = make_rng(16);
  for (int i = 0; i < 100; ++i) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const Mat m1 = random_pd(rng, r);
    const Mat m2 = random_pd(rng, r);
    const Mat f = random_matrix(rng, r);
    const double got = op_norm(f, HermitianForm(m1), HermitianForm(m2));
    const double want = opnorm_power_oracle(f, m1, m2, rng);
    CHECK(std::abs(got - want) < 1e-10 * std::max(1.0, want));
  }
}

TEST_CASE("frame changes transport metrics and endomorphisms consistently", "[hermitian]") {
  auto rng = make_rng(17);
  CHECK_THROWS_AS(FrameChange(Mat::Zero(2, 2)), std::invalid_argument);
  for (int i = 0; i < 50; ++i) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const HermitianForm h(random_pd(rng, r));
    const FrameChange fc(random_invertible(rng, r));
    const HermitianForm hw = fc.apply(h);
    const Mat p = random_matrix(rng, r);
    const Mat pw = fc.apply_endo(p);
    // operator norms are frame-independent
    CHECK(std::abs(op_norm(p, h) - op_norm(pw, hw)) < 1e-9 * std::max(1.0, op_norm(p, h)));
    // round trip through the inverse frame change
    const Mat back = fc.inverse().apply_endo(pw);
    CHECK(testutil::max_abs(Mat(back - p)) < 1e-9);
  }
}

TEST_CASE("error paths reject malformed inputs", "[hermitian]") {
  const HermitianForm h2 = HermitianForm::identity(2);
  const HermitianForm h3 = HermitianForm::identity(3);
  CHECK_THROWS_AS(dvector(h2, h3), std::invalid_argument);
  CHECK_THROWS_AS(op_norm(Mat::Identity(3, 3), h2), std::invalid_argument);
  CHECK_THROWS_AS(singular_exponents(Mat::Zero(2, 2), h2, h2), std::invalid_argument);
}
