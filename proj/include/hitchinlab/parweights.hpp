#pragma once

#include "hitchinlab/rational.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace hitchinlab {

// One zero of the eigenvalue one-form: local exponent m and lattice twist ell.
struct ZeroDatum {
  std::string label;
  int m = 0;
  int ell = 0;

  void validate() const {
    if (m < 0 || ell < 0 || ell > m)
      throw std::invalid_argument("ZeroDatum: need 0 <= ell <= m");
  }
  Rational a_P() const { return Rational(BigInt(ell), BigInt(2 * (m + 1))); }
};

// Combinatorial data of a reducible rank-2 spectral configuration.
struct GlobalSpectralSpec {
  std::vector<ZeroDatum> zeros;
  long long degE = 0;
  long long d1 = 0;
  long long d2 = 0;

  long long ell_sum() const {
    long long s = 0;
    for (const auto& z : zeros) s += z.ell;
    return s;
  }
  void validate() const {
    for (const auto& z : zeros) z.validate();
    if (d1 > d2) throw std::invalid_argument("GlobalSpectralSpec: need d1 <= d2");
    if (d1 + d2 - ell_sum() != degE)
      throw std::invalid_argument("GlobalSpectralSpec: degree constraint d1 + d2 - sum(ell) = degE violated");
  }
};

enum class Stability { stable, semistable, unstable };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::semistable: return "semistable";
    default: return "unstable";
  }
}

// Global verdict: both line-bundle degrees strictly above degE/2 (stable),
// at least equal (semistable), otherwise unstable. d1 <= d2 makes d1 decisive.
inline Stability stability_check(const GlobalSpectralSpec& spec) {
  spec.validate();
  const long long lhs = 2 * spec.d1;  // compare d1 with degE/2 in halves
  if (lhs > spec.degE) return Stability::stable;
  if (lhs == spec.degE) return Stability::semistable;
  return Stability::unstable;
}

// Local-model verdict from the weight parameter: weights (c, -c-ell) must be
// strictly negative for stability.
inline Stability stability_check_local(const Rational& c, int ell) {
  const Rational zero(0);
  const Rational minus_ell(BigInt(-ell), BigInt(1));
  if (c < zero && c > minus_ell) return Stability::stable;
  if (c == zero || c == minus_ell) return Stability::semistable;
  return Stability::unstable;
}

// Piecewise-linear weight function of one zero: (m+1)(a - a_P) on [0, a_P],
// zero afterwards. Continuous, nondecreasing, nonpositive.
inline Rational chi_P(const ZeroDatum& z, const Rational& a) {
  z.validate();
  if (a < Rational(0)) throw std::invalid_argument("chi_P: need a >= 0");
  const Rational ap = z.a_P();
  if (a >= ap) return Rational(0);
  return Rational(BigInt(z.m + 1), BigInt(1)) * (a - ap);
}

inline Rational chi_global(const GlobalSpectralSpec& spec, const Rational& a) {
  Rational s(0);
  for (const auto& z : spec.zeros) s += chi_P(z, a);
  return s;
}

// Unique balancing parameter solving d1 - degE/2 + chi(a) = 0 on [0, max a_P),
// by scanning the sorted breakpoints {a_P} and solving the linear piece that
// brackets the target value.
inline Rational solve_a(const GlobalSpectralSpec& spec) {
  spec.validate();
  const Stability verdict = stability_check(spec);
  if (verdict == Stability::unstable) throw std::invalid_argument("solve_a: spec not stable");
  if (spec.d1 == spec.d2) return Rational(0);
  if (verdict != Stability::stable) throw std::invalid_argument("solve_a: spec not stable");

  const Rational target = Rational(BigInt(spec.degE), BigInt(2)) - Rational(BigInt(spec.d1), BigInt(1));
  std::vector<Rational> brk;
  for (const auto& z : spec.zeros)
    if (z.ell > 0) brk.push_back(z.a_P());
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
  if (brk.empty()) throw std::invalid_argument("solve_a: no positive breakpoints (all ell zero) for d1 < d2");

  Rational lo(0);
  Rational chi_lo = chi_global(spec, lo);
  if (target < chi_lo) throw std::invalid_argument("solve_a: target below chi(0)");
  for (const Rational& hi : brk) {
    const Rational chi_hi = chi_global(spec, hi);
    if (target <= chi_hi) {
      // slope of chi on (lo, hi) = sum of (m+1) over zeros with a_P > lo
      Rational slope(0);
      for (const auto& z : spec.zeros)
        if (z.a_P() > lo) slope += Rational(BigInt(z.m + 1), BigInt(1));
      const Rational a = lo + (target - chi_lo) / slope;
      if (a >= brk.back()) throw std::invalid_argument("solve_a: root not below max a_P");
      return a;
    }
    lo = hi;
    chi_lo = chi_hi;
  }
  throw std::invalid_argument("solve_a: no root below max a_P");
}

// Parabolic weights of the two limiting line bundles at every zero.
struct WeightAssignment {
  Rational a_star;
  std::vector<Rational> weight1;  // -chi_P(a_star), one per zero
  std::vector<Rational> weight2;  // chi_P(a_star) + ell_P
};

inline WeightAssignment weights(const GlobalSpectralSpec& spec) {
  WeightAssignment out;
  out.a_star = solve_a(spec);
  for (const auto& z : spec.zeros) {
    const Rational chi = chi_P(z, out.a_star);
    out.weight1.push_back(-chi);
    out.weight2.push_back(chi + Rational(BigInt(z.ell), BigInt(1)));
  }
  return out;
}

// Parabolic degrees of the two sides: d_j minus its weight sum. Both must
// equal degE/2 for any stable spec.
inline std::pair<Rational, Rational> parabolic_degrees(const GlobalSpectralSpec& spec,
                                                       const WeightAssignment& wa) {
  Rational s1(0), s2(0);
  for (const auto& w : wa.weight1) s1 += w;
  for (const auto& w : wa.weight2) s2 += w;
  return {Rational(BigInt(spec.d1), BigInt(1)) - s1, Rational(BigInt(spec.d2), BigInt(1)) - s2};
}

// Rank-1 filtered bundle: lattice degree of the weight-carrying level plus
// one weight per marked point.
struct FilteredLineBundle {
  long long degree = 0;
  std::vector<Rational> weights;
};

inline Rational parabolic_degree(const FilteredLineBundle& l) {
  Rational s(BigInt(l.degree), BigInt(1));
  for (const auto& w : l.weights) s -= w;
  return s;
}

// Unique integer n with a - 1 < n + w <= a, the lattice level of weight w at
// cut level a; equals floor(a - w).
inline BigInt lattice_level(const Rational& a, const Rational& w) { return rational_floor(a - w); }

// Ordinary degree of the level-b lattice of a rank-1 filtered bundle.
inline Rational lattice_degree(const FilteredLineBundle& l, const std::vector<Rational>& b) {
  if (b.size() != l.weights.size()) throw std::invalid_argument("lattice_degree: point count mismatch");
  Rational s(BigInt(l.degree), BigInt(1));
  for (size_t p = 0; p < b.size(); ++p) s += Rational(lattice_level(b[p], l.weights[p]), BigInt(1));
  return s;
}

// Jump data of a filtration at one marked point, relative to a reference
// level b: the weights a in (b-1, b] with the dimensions of their graded
// pieces.
struct PointJumps {
  Rational b;
  std::vector<std::pair<Rational, int>> jumps;
};

// Reference-level form of the parabolic degree: the degree of the level-b
// lattice minus the weighted dimension count of the jumps in each window
// (b_P - 1, b_P]. Independent of the chosen reference levels.
inline Rational parabolic_degree_general(const Rational& lattice_deg_at_b,
                                         const std::vector<PointJumps>& points) {
  Rational s = lattice_deg_at_b;
  for (const auto& pt : points) {
    for (const auto& [a, dim] : pt.jumps) {
      if (dim <= 0) throw std::invalid_argument("parabolic_degree_general: nonpositive jump dimension");
      if (!(a > pt.b - Rational(1)) || !(a <= pt.b))
        throw std::invalid_argument("parabolic_degree_general: jump outside the reference window");
      s -= a * Rational(BigInt(dim), BigInt(1));
    }
  }
  return s;
}

}  // namespace hitchinlab
