#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "hitchinlab/hermitian.hpp"
#include "hitchinlab/polargrid.hpp"

namespace hitchinlab {

using MetricField = std::function<HermitianForm(cplx)>;
using EndoField = std::function<Mat(cplx)>;

struct ResidualNorms {
  double sup = 0;
  double l2 = 0;
  int points = 0;
};

// Pointwise self-duality defect over the evaluated radial range; values and
// norms are stored radial-major.
struct ResidualField {
  int first_radial = 0;
  int last_radial = -1;
  int ntheta = 1;
  std::vector<Mat> values;
  std::vector<double> norms;
  ResidualNorms summary;

  int index(int k, int j = 0) const { return (k - first_radial) * ntheta + j; }
  const Mat& value(int k, int j = 0) const { return values[index(k, j)]; }
  double norm_at(int k, int j = 0) const { return norms[index(k, j)]; }
};

namespace detail {

// Defect of the self-duality equation at one point, from radial/angular
// derivative samples of the Gram matrix M:
//   N = M^{-1} dzb dz M - M^{-1}(dzb M) M^{-1}(dz M) - [Theta, M^{-1} Theta^H M].
// dzb dz = Laplacian/4; the e^{+-i theta} phases of dz, dzb cancel inside the
// product term, so derivatives enter phase-free.
inline Mat selfduality_defect(const Mat& m, const Mat& mr, const Mat& mrr, const Mat& mt,
                              const Mat& mtt, const Mat& theta, double r) {
  const Eigen::PartialPivLU<Mat> lu(m);
  const Mat lap = mrr + mr / r + mtt / (r * r);
  const cplx iu(0.0, 1.0);
  const Mat dzb = 0.5 * (mr + (iu / r) * mt);
  const Mat dz = 0.5 * (mr - (iu / r) * mt);
  const Mat adj = lu.solve(theta.adjoint() * m);
  return 0.25 * lu.solve(lap) - lu.solve(dzb) * lu.solve(dz) - (theta * adj - adj * theta);
}

}  // namespace detail

// Discretized self-duality defect of a metric field against a Higgs field on
// a polar grid: second-order central differences, outer (and inner, for
// annuli) boundary ring excluded.  Reduced grids (ntheta == 1) evaluate along
// theta = 0 with the angular derivatives supplied analytically by the twist
// exponents; for fields with the assumed equivariance the pointwise norms are
// independent of theta, so the line evaluation is exact.  Pointwise norms are
// operator norms in the metric itself; the L2 norm uses the Euclidean area
// element r dr dtheta.
inline ResidualField hitchin_residual(const MetricField& metric, const EndoField& higgs,
                                      const PolarGrid& grid) {
  grid.validate();
  if (grid.ntheta != 1 && grid.ntheta < 4)
    throw std::invalid_argument("hitchin_residual: angle count must be 1 (reduced) or >= 4");
  const int nr = grid.nr();
  const int nt = grid.ntheta;
  const int first = grid.center_mirror ? 0 : 1;
  const int last = nr - 2;
  if (last - first + 1 < 4)
    throw std::invalid_argument("hitchin_residual: fewer than 4 interior radii");
  const double dr = grid.dr();
  const double dth = grid.dtheta();

  std::vector<HermitianForm> forms;
  forms.reserve(static_cast<size_t>(nr) * nt);
  for (int k = 0; k < nr; ++k)
    for (int j = 0; j < nt; ++j) {
      const double th = grid.angle(j);
      forms.push_back(metric(grid.radius(k) * cplx(std::cos(th), std::sin(th))));
    }
  const int rank = forms.front().dim();
  std::vector<int> tw = grid.reduced_twists;
  if (nt == 1) {
    if (tw.empty()) tw.assign(rank, 0);
    if (static_cast<int>(tw.size()) != rank)
      throw std::invalid_argument("hitchin_residual: twist count does not match field rank");
  }

  auto sample = [&](int k, int j) -> const Mat& { return forms[k * nt + j].matrix(); };
  // Value at signed radius -r_0 on the ray through angle j: the antipodal
  // sample (2D) or the analytic antipodal phase (reduced).
  Mat ghost;
  auto below = [&](int k, int j) -> Mat {
    if (k > 0) return sample(k - 1, j);
    if (nt > 1) return sample(0, (j + nt / 2) % nt);
    ghost = sample(0, 0);
    for (int a = 0; a < rank; ++a)
      for (int b = 0; b < rank; ++b)
        if ((tw[a] - tw[b]) % 2 != 0) ghost(a, b) = -ghost(a, b);
    return ghost;
  };

  ResidualField out;
  out.first_radial = first;
  out.last_radial = last;
  out.ntheta = nt;
  out.values.reserve(static_cast<size_t>(last - first + 1) * nt);
  out.norms.reserve(out.values.capacity());
  double l2_acc = 0;
  const double area_dth = nt == 1 ? 2.0 * M_PI : dth;

  for (int k = first; k <= last; ++k) {
    const double r = grid.radius(k);
    for (int j = 0; j < nt; ++j) {
      const Mat& m = sample(k, j);
      const Mat up = sample(k + 1, j);
      const Mat dn = below(k, j);
      const Mat mr = (up - dn) / (2.0 * dr);
      const Mat mrr = (up - 2.0 * m + dn) / (dr * dr);
      Mat mt = Mat::Zero(rank, rank);
      Mat mtt = Mat::Zero(rank, rank);
      if (nt == 1) {
        for (int a = 0; a < rank; ++a)
          for (int b = 0; b < rank; ++b) {
            const double dw = tw[a] - tw[b];
            mt(a, b) = cplx(0.0, dw) * m(a, b);
            mtt(a, b) = -dw * dw * m(a, b);
          }
      } else {
        const Mat& left = sample(k, (j + nt - 1) % nt);
        const Mat& right = sample(k, (j + 1) % nt);
        mt = (right - left) / (2.0 * dth);
        mtt = (right - 2.0 * m + left) / (dth * dth);
      }
      const double th = grid.angle(j);
      const Mat theta = higgs(r * cplx(std::cos(th), std::sin(th)));
      const Mat defect = detail::selfduality_defect(m, mr, mrr, mt, mtt, theta, r);
      const double nrm = op_norm(defect, forms[k * nt + j]);
      out.values.push_back(defect);
      out.norms.push_back(nrm);
      out.summary.sup = std::max(out.summary.sup, nrm);
      l2_acc += nrm * nrm * r * dr * area_dth;
      ++out.summary.points;
    }
  }
  out.summary.l2 = std::sqrt(l2_acc);
  return out;
}

}  // namespace hitchinlab
