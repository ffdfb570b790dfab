#pragma once

#include "hitchinlab/parweights.hpp"

#include <random>

namespace testutil {

inline std::mt19937_64 make_rng_pw(unsigned long long seed) { return std::mt19937_64(seed); }

inline long long floor_div_ll(long long a, long long b) {
  long long q = a / b;
  if (a % b != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

// Uniformly scattered stable spectral spec: random zeros, then d1 drawn from
// the exact stability window.
inline hitchinlab::GlobalSpectralSpec random_stable_spec(std::mt19937_64& rng) {
  while (true) {
    hitchinlab::GlobalSpectralSpec spec;
    const int nz = 1 + static_cast<int>(rng() % 5);
    long long ellsum = 0;
    for (int i = 0; i < nz; ++i) {
      hitchinlab::ZeroDatum z;
      z.label = "P" + std::to_string(i);
      z.m = static_cast<int>(rng() % 6);
      z.ell = static_cast<int>(rng() % (z.m + 1));
      ellsum += z.ell;
      spec.zeros.push_back(z);
    }
    if (ellsum == 0) continue;
    spec.degE = static_cast<long long>(rng() % 11) - 5;
    const long long d1min = floor_div_ll(spec.degE, 2) + 1;
    const long long d1max = floor_div_ll(spec.degE + ellsum, 2);
    if (d1max < d1min) continue;
    spec.d1 = d1min + static_cast<long long>(rng() % static_cast<unsigned long long>(d1max - d1min + 1));
    spec.d2 = spec.degE + ellsum - spec.d1;
    spec.validate();
    return spec;
  }
}

// Exact bisection oracle on an N-point rational grid over [0, max a_P]:
// returns the grid bracket [lo, hi] containing the balancing parameter.
inline std::pair<hitchinlab::Rational, hitchinlab::Rational> bisect_a_oracle(
    const hitchinlab::GlobalSpectralSpec& spec, long long n_grid) {
  using hitchinlab::BigInt;
  using hitchinlab::Rational;
  const Rational target =
      Rational(BigInt(spec.degE), BigInt(2)) - Rational(BigInt(spec.d1), BigInt(1));
  Rational amax(0);
  for (const auto& z : spec.zeros) amax = std::max(amax, z.a_P());
  // smallest grid index with chi(a_k) >= target; chi is nondecreasing
  long long lo = 0, hi = n_grid;
  while (lo < hi) {
    const long long mid = lo + (hi - lo) / 2;
    const Rational a = amax * Rational(BigInt(mid), BigInt(n_grid));
    if (hitchinlab::chi_global(spec, a) >= target)
      hi = mid;
    else
      lo = mid + 1;
  }
  const Rational right = amax * Rational(BigInt(lo), BigInt(n_grid));
  const Rational left = lo == 0 ? Rational(0) : amax * Rational(BigInt(lo - 1), BigInt(n_grid));
  return {left, right};
}

}  // namespace testutil
