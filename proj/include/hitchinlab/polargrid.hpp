#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hitchinlab {

// Uniform polar sampling of a disc or annulus.  ntheta == 1 means the grid is
// symmetry-reduced: fields are sampled along theta = 0 only and their angular
// dependence is supplied analytically through reduced_twists (the metric is
// assumed of the form D(theta) M0(r) D(theta)^H with D = diag(e^{i w_j theta})).
// Disc grids place the first node at dr/2 and reach through the origin with a
// mirrored ghost node instead of storing a value at r = 0.
struct PolarGrid {
  std::vector<double> radii;
  int ntheta = 1;
  std::vector<int> reduced_twists;
  bool center_mirror = false;

  static PolarGrid disc(double r_max, int nr, int ntheta = 1, std::vector<int> twists = {}) {
    PolarGrid g;
    if (nr < 8) throw std::invalid_argument("PolarGrid::disc: need at least 8 radial nodes");
    const double dr = r_max / nr;
    g.radii.resize(nr);
    for (int k = 0; k < nr; ++k) g.radii[k] = (k + 0.5) * dr;
    g.ntheta = ntheta;
    g.reduced_twists = std::move(twists);
    g.center_mirror = true;
    g.validate();
    return g;
  }

  static PolarGrid annulus(double r0, double r1, int nr, int ntheta = 1,
                           std::vector<int> twists = {}) {
    PolarGrid g;
    if (nr < 8) throw std::invalid_argument("PolarGrid::annulus: need at least 8 radial nodes");
    if (!(r0 > 0 && r1 > r0)) throw std::invalid_argument("PolarGrid::annulus: need 0 < r0 < r1");
    g.radii.resize(nr);
    for (int k = 0; k < nr; ++k) g.radii[k] = r0 + k * (r1 - r0) / (nr - 1);
    g.ntheta = ntheta;
    g.reduced_twists = std::move(twists);
    g.center_mirror = false;
    g.validate();
    return g;
  }

  int nr() const { return static_cast<int>(radii.size()); }
  double dr() const { return nr() >= 2 ? radii[1] - radii[0] : 0.0; }
  double dtheta() const { return 2.0 * M_PI / ntheta; }
  double radius(int k) const { return radii[k]; }
  double angle(int j) const { return j * dtheta(); }

  void validate() const {
    if (nr() < 8) throw std::invalid_argument("PolarGrid: need at least 8 radial nodes");
    if (ntheta < 1) throw std::invalid_argument("PolarGrid: need at least one angle");
    if (!(radii.front() > 0)) throw std::invalid_argument("PolarGrid: radii must be positive");
    if (!(radii.back() > 1.0))
      throw std::invalid_argument("PolarGrid: outer radius must exceed 1 (unit circle inside)");
    const double h = dr();
    if (!(h > 0)) throw std::invalid_argument("PolarGrid: radii must increase");
    for (int k = 0; k + 1 < nr(); ++k) {
      const double step = radii[k + 1] - radii[k];
      if (std::abs(step - h) > 1e-9 * h)
        throw std::invalid_argument("PolarGrid: radial spacing must be uniform");
    }
    if (center_mirror && std::abs(radii.front() - 0.5 * h) > 1e-9 * h)
      throw std::invalid_argument("PolarGrid: center-mirror grids start at dr/2");
    if (center_mirror && ntheta > 1 && ntheta % 2 != 0)
      throw std::invalid_argument("PolarGrid: center mirror needs an even angle count");
  }
};

}  // namespace hitchinlab
