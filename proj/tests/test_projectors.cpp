#include "hitchinlab/projectors.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace hitchinlab;
using testutil::make_rng;
using testutil::max_abs;
using testutil::random_matrix;
using testutil::random_pd;

namespace {

// f = v * diag(lams) * v^{-1} with eigenvalues scattered tightly around the
// requested centers.
Mat clustered_matrix(std::mt19937_64& rng, const std::vector<cplx>& centers,
                     const std::vector<int>& sizes, std::vector<Mat>* oracle) {
  int r = 0;
  for (int s : sizes) r += s;
  Vec lams(r);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  int at = 0;
  for (size_t c = 0; c < centers.size(); ++c)
    for (int k = 0; k < sizes[c]; ++k) lams(at++) = centers[c] + cplx(u(rng), u(rng));
  Mat v = Mat::Identity(r, r) + 0.4 * random_matrix(rng, r);
  while (std::abs(v.determinant()) < 0.1) v = Mat::Identity(r, r) + 0.4 * random_matrix(rng, r);
  const Mat vinv = v.inverse();
  if (oracle) {
    oracle->clear();
    int lo = 0;
    for (size_t c = 0; c < centers.size(); ++c) {
      Mat sel = Mat::Zero(r, r);
      for (int k = lo; k < lo + sizes[c]; ++k) sel(k, k) = 1;
      oracle->push_back(Mat(v * sel * vinv));
      lo += sizes[c];
    }
  }
  Mat d = Mat::Zero(r, r);
  d.diagonal() = lams;
  return Mat(v * d * vinv);
}

}  // namespace

TEST_CASE("diagonal matrices give coordinate projectors", "[projectors]") {
  Mat f = Mat::Zero(3, 3);
  f(0, 0) = 1;
  f(1, 1) = 5;
  f(2, 2) = cplx(0, 2);
  const auto fam = spectral_projectors(f, {cplx(1, 0), cplx(5, 0), cplx(0, 2)});
  REQUIRE(fam.projectors.size() == 3);
  for (int c = 0; c < 3; ++c) {
    Mat want = Mat::Zero(3, 3);
    want(c, c) = 1;
    CHECK(max_abs(Mat(fam.projectors[c] - want)) < 1e-12);
  }
  CHECK(fam.gap == Catch::Approx(std::abs(cplx(1, 0) - cplx(0, 2))));
}

TEST_CASE("non-normal 2x2 matches the eigenvector oracle", "[projectors]") {
  Mat f(2, 2);
  f << 1, 1, 0, 3;
  const auto fam = spectral_projectors(f, {cplx(1, 0), cplx(3, 0)});
  Mat pi3(2, 2);
  pi3 << 0, 0.5, 0, 1;
  const Mat pi1 = Mat::Identity(2, 2) - pi3;
  CHECK(max_abs(Mat(fam.projectors[0] - pi1)) < 1e-12);
  CHECK(max_abs(Mat(fam.projectors[1] - pi3)) < 1e-12);

  // image/kernel characterization: pi projects onto its cluster's eigenspace
  Vec v3(2);
  v3 << 1, 2;
  CHECK((fam.projectors[1] * v3 - v3).norm() < 1e-12);
  Vec v1(2);
  v1 << 1, 0;
  CHECK((fam.projectors[1] * v1).norm() < 1e-12);
}

TEST_CASE("projector family invariants on random clustered matrices", "[projectors]") {
  auto rng = make_rng(21);
  for (int i = 0; i < 200; ++i) {
    const int nclusters = 2 + static_cast<int>(rng() % 2);
    std::vector<cplx> centers;
    for (int c = 0; c < nclusters; ++c)
      centers.push_back(cplx(3.0 * c, 1.5 * static_cast<double>(rng() % 3)));
    std::vector<int> sizes;
    for (int c = 0; c < nclusters; ++c) sizes.push_back(1 + static_cast<int>(rng() % 2));
    std::vector<Mat> oracle;
    const Mat f = clustered_matrix(rng, centers, sizes, &oracle);
    const auto fam = spectral_projectors(f, centers);
    const int r = static_cast<int>(f.rows());

    Mat sum = Mat::Zero(r, r);
    int rank_sum = 0;
    for (size_t a = 0; a < fam.projectors.size(); ++a) {
      const Mat& pa = fam.projectors[a];
      CHECK(max_abs(Mat(pa * pa - pa)) < 1e-10);
      CHECK(max_abs(Mat(pa - oracle[a])) < 1e-7);
      CHECK(max_abs(Mat(f * pa - pa * f)) < 1e-9);
      sum += pa;
      rank_sum += static_cast<int>(std::lround(pa.trace().real()));
      for (size_t b = 0; b < a; ++b) CHECK(max_abs(Mat(pa * fam.projectors[b])) < 1e-10);
    }
    CHECK(max_abs(Mat(sum - Mat::Identity(r, r))) < 1e-10);
    CHECK(rank_sum == r);
  }
}

TEST_CASE("cluster separation is enforced", "[projectors]") {
  Mat f = Mat::Zero(2, 2);
  f(0, 0) = 0;
  f(1, 1) = 1;
  // eigenvalue 1 sits at distance 1 from its center while the centers are 2 apart
  CHECK_THROWS_AS(spectral_projectors(f, {cplx(0, 0), cplx(2, 0)}), std::invalid_argument);
  CHECK_THROWS_AS(spectral_projectors(f, {cplx(0.5, 0), cplx(100, 0)}), std::invalid_argument);
  CHECK_THROWS_AS(spectral_projectors(f, std::vector<cplx>{}), std::invalid_argument);
}

TEST_CASE("orthogonality defect of constructed projectors", "[projectors]") {
  const HermitianForm id2 = HermitianForm::identity(2);
  CHECK(orthogonality_defect(Mat::Identity(2, 2), id2) < 1e-12);

  Mat oblique(2, 2);
  oblique << 1, -1, 0, 0;  // image span(e1), kernel span(e1 + e2)
  const double defect = orthogonality_defect(oblique, id2);

  // Gram-Schmidt oracle: orthogonal projector onto span(e1) is diag(1, 0)
  Mat ortho = Mat::Zero(2, 2);
  ortho(0, 0) = 1;
  const double want = op_norm(Mat(oblique - ortho), id2);
  CHECK(std::abs(defect - want) < 1e-12);
  CHECK(std::abs(want - 1.0) < 1e-12);

  CHECK_THROWS_AS(orthogonality_defect(oblique * 2.0, id2), std::invalid_argument);
}

TEST_CASE("defect vanishes exactly for h-self-adjoint projectors", "[projectors]") {
  auto rng = make_rng(22);
  for (int i = 0; i < 100; ++i) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const HermitianForm h(random_pd(rng, r));
    const int rk = 1 + static_cast<int>(rng() % (r - 1));
    Mat b(r, rk);
    for (int a = 0; a < r; ++a)
      for (int c = 0; c < rk; ++c) b(a, c) = testutil::random_cplx(rng);
    const Mat gram = b.adjoint() * h.matrix() * b;
    const Mat pi = b * Eigen::LLT<Mat>(gram).solve(Mat(b.adjoint() * h.matrix()));
    CHECK(orthogonality_defect(pi, h) < 1e-9);

    // h-self-adjointness certificate: M pi = (M pi)^H
    const Mat mp = h.matrix() * pi;
    CHECK(max_abs(Mat(mp - mp.adjoint())) < 1e-9);
  }
}
