#include "hitchinlab/parweights.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "specgen.hpp"

using namespace hitchinlab;
using testutil::bisect_a_oracle;
using testutil::random_stable_spec;

namespace {

Rational rat(long long n, long long d = 1) { return Rational(BigInt(n), BigInt(d)); }

GlobalSpectralSpec two_zero_spec() {
  GlobalSpectralSpec spec;
  spec.zeros = {{"P", 3, 3}, {"Q", 1, 1}};
  spec.degE = 0;
  spec.d1 = 1;
  spec.d2 = 3;
  return spec;
}

}  // namespace

TEST_CASE("chi_P kink values and exact rational evaluation", "[parweights]") {
  const ZeroDatum p{"P", 3, 3};
  CHECK(chi_P(p, p.a_P()) == rat(0));
  CHECK(chi_P(p, rat(1)) == rat(0));
  CHECK(chi_P(p, rat(0)) == rat(-3, 2));
  CHECK(chi_P(p, rat(1, 6)) == rat(-5, 6));

  const ZeroDatum q{"Q", 1, 1};
  CHECK(chi_P(q, rat(0)) == rat(-1, 2));
  CHECK(chi_P(q, rat(1, 6)) == rat(-1, 6));

  CHECK_THROWS_AS(chi_P(p, rat(-1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(chi_P(ZeroDatum{"bad", 1, 2}, rat(0)), std::invalid_argument);
}

TEST_CASE("chi_global is nondecreasing, piecewise linear, eventually zero", "[parweights]") {
  auto rng = testutil::make_rng_pw(31);
  for (int i = 0; i < 200; ++i) {
    const GlobalSpectralSpec spec = random_stable_spec(rng);
    CHECK(chi_global(spec, rat(0)) == rat(-spec.ell_sum(), 2));
    Rational amax(0);
    for (const auto& z : spec.zeros) amax = std::max(amax, z.a_P());
    CHECK(chi_global(spec, amax) == rat(0));
    CHECK(chi_global(spec, amax + rat(1, 7)) == rat(0));
    Rational prev = chi_global(spec, rat(0));
    for (int k = 1; k <= 16; ++k) {
      const Rational a = amax * rat(k, 16);
      const Rational cur = chi_global(spec, a);
      CHECK(cur >= prev);
      CHECK(cur <= rat(0));
      prev = cur;
    }
  }
}

TEST_CASE("solve_a on the symmetric and two-zero configurations", "[parweights]") {
  GlobalSpectralSpec sym;
  sym.zeros = {{"P", 1, 1}, {"Q", 1, 1}, {"R", 1, 1}, {"S", 1, 1}};
  sym.degE = 0;
  sym.d1 = sym.d2 = 2;
  CHECK(solve_a(sym) == rat(0));
  const WeightAssignment wsym = weights(sym);
  for (size_t p = 0; p < sym.zeros.size(); ++p) {
    CHECK(wsym.weight1[p] == rat(1, 2));
    CHECK(wsym.weight2[p] == rat(1, 2));
  }

  const GlobalSpectralSpec spec = two_zero_spec();
  CHECK(solve_a(spec) == rat(1, 6));
  const WeightAssignment wa = weights(spec);
  CHECK(wa.weight1[0] == rat(5, 6));
  CHECK(wa.weight2[0] == rat(13, 6));
  CHECK(wa.weight1[1] == rat(1, 6));
  CHECK(wa.weight2[1] == rat(5, 6));
  const auto [p1, p2] = parabolic_degrees(spec, wa);
  CHECK(p1 == rat(0));
  CHECK(p2 == rat(0));
}

TEST_CASE("solve_a matches the dense bisection oracle", "[parweights]") {
  const GlobalSpectralSpec spec = two_zero_spec();
  const auto [lo, hi] = bisect_a_oracle(spec, 1000000);
  const Rational a = solve_a(spec);
  CHECK(a >= lo);
  CHECK(a <= hi);

  auto rng = testutil::make_rng_pw(32);
  for (int i = 0; i < 100; ++i) {
    const GlobalSpectralSpec s = random_stable_spec(rng);
    const Rational as = solve_a(s);
    const auto [l, h] = bisect_a_oracle(s, 10000);
    CHECK(as >= l);
    CHECK(as <= h);
  }
}

TEST_CASE("weights satisfy the exact sum rules on random stable specs", "[parweights]") {
  auto rng = testutil::make_rng_pw(33);
  for (int i = 0; i < 500; ++i) {
    const GlobalSpectralSpec spec = random_stable_spec(rng);
    const WeightAssignment wa = weights(spec);
    // defining equation holds exactly
    CHECK(rat(spec.d1) - rat(spec.degE, 2) + chi_global(spec, wa.a_star) == rat(0));
    Rational amax(0);
    for (const auto& z : spec.zeros) amax = std::max(amax, z.a_P());
    CHECK(wa.a_star >= rat(0));
    CHECK(wa.a_star < amax);
    for (size_t p = 0; p < spec.zeros.size(); ++p) {
      CHECK(wa.weight1[p] + wa.weight2[p] == rat(spec.zeros[p].ell));
      CHECK(wa.weight1[p] >= rat(0));
      CHECK(wa.weight2[p] <= rat(spec.zeros[p].ell));
    }
    const auto [p1, p2] = parabolic_degrees(spec, wa);
    CHECK(p1 == rat(spec.degE, 2));
    CHECK(p2 == rat(spec.degE, 2));
  }
}

TEST_CASE("balancing parameter is nonincreasing in d1", "[parweights]") {
  // holding the zeros and d2, raising d1 (degE recomputed from the degree
  // constraint) raises d1 - degE/2, so the root of the nondecreasing chi
  // moves left; the d1 = d2 endpoint gives the minimum value 0.
  GlobalSpectralSpec base;
  base.zeros = {{"P", 3, 3}, {"Q", 1, 1}};
  const long long d2 = 3;
  Rational prev(1);
  for (long long d1 = 0; d1 <= d2; ++d1) {
    GlobalSpectralSpec s = base;
    s.d1 = d1;
    s.d2 = d2;
    s.degE = d1 + d2 - s.ell_sum();
    if (stability_check(s) != Stability::stable && d1 != d2) continue;
    const Rational a = solve_a(s);
    CHECK(a <= prev);
    const auto [l, h] = bisect_a_oracle(s, 10000);
    CHECK(a >= l);
    CHECK(a <= h);
    prev = a;
  }
  GlobalSpectralSpec balanced = base;
  balanced.d1 = balanced.d2 = 3;
  balanced.degE = 6 - balanced.ell_sum();
  CHECK(solve_a(balanced) == rat(0));
}

TEST_CASE("solve_a rejects unstable and malformed specs", "[parweights]") {
  GlobalSpectralSpec bad = two_zero_spec();
  bad.d1 = 0;
  bad.d2 = 4;  // keeps the degree constraint but 2*d1 = 0 = degE (semistable only)
  CHECK_THROWS_AS(solve_a(bad), std::invalid_argument);
  bad.d1 = -1;
  bad.d2 = 5;
  CHECK_THROWS_AS(solve_a(bad), std::invalid_argument);
  GlobalSpectralSpec broken = two_zero_spec();
  broken.degE = 1;
  CHECK_THROWS_AS(solve_a(broken), std::invalid_argument);
  GlobalSpectralSpec swapped = two_zero_spec();
  std::swap(swapped.d1, swapped.d2);
  CHECK_THROWS_AS(solve_a(swapped), std::invalid_argument);
}

TEST_CASE("stability verdicts", "[parweights]") {
  CHECK(stability_check_local(rat(-1, 2), 1) == Stability::stable);
  CHECK(stability_check_local(rat(0), 1) == Stability::semistable);
  CHECK(stability_check_local(rat(-1), 1) == Stability::semistable);
  CHECK(stability_check_local(rat(1, 4), 1) == Stability::unstable);
  CHECK(stability_check_local(rat(-3, 2), 1) == Stability::unstable);
  CHECK(stability_check_local(rat(0), 0) == Stability::semistable);

  GlobalSpectralSpec boundary = two_zero_spec();
  boundary.d1 = 0;
  boundary.d2 = 4;
  CHECK(stability_check(boundary) == Stability::semistable);
  CHECK(stability_check(two_zero_spec()) == Stability::stable);
}

TEST_CASE("rank-1 parabolic degree and lattice levels", "[parweights]") {
  const FilteredLineBundle l{2, {rat(1, 2), rat(1, 2)}};
  CHECK(parabolic_degree(l) == rat(1));

  CHECK(lattice_level(rat(7, 3), rat(0)) == BigInt(2));   // floor(a) at zero weight
  CHECK(lattice_level(rat(0), rat(1, 2)) == BigInt(-1));  // -1 < -1/2 <= 0
  auto rng = testutil::make_rng_pw(34);
  std::uniform_int_distribution<int> num(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const Rational a = rat(num(rng), 1 + static_cast<int>(rng() % 9));
    const Rational w = rat(num(rng), 1 + static_cast<int>(rng() % 9));
    const BigInt n = lattice_level(a, w);
    // defining double inequality and periodicity
    CHECK(Rational(n, BigInt(1)) + w <= a);
    CHECK(a - Rational(1) < Rational(n, BigInt(1)) + w);
    CHECK(lattice_level(a + rat(1), w) == n + 1);
  }
}

TEST_CASE("reference-level independence of the general degree formula", "[parweights]") {
  auto rng = testutil::make_rng_pw(35);
  std::uniform_int_distribution<int> num(-10, 10);
  for (int i = 0; i < 200; ++i) {
    FilteredLineBundle l;
    l.degree = num(rng);
    const int npts = 1 + static_cast<int>(rng() % 3);
    for (int p = 0; p < npts; ++p) l.weights.push_back(rat(num(rng), 1 + static_cast<int>(rng() % 9)));
    const Rational want = parabolic_degree(l);

    for (int trial = 0; trial < 3; ++trial) {
      std::vector<Rational> b;
      std::vector<PointJumps> jumps;
      for (int p = 0; p < npts; ++p) {
        b.push_back(rat(num(rng), 1 + static_cast<int>(rng() % 9)));
        PointJumps pj;
        pj.b = b.back();
        const Rational a_jump = l.weights[p] + Rational(lattice_level(b.back(), l.weights[p]), BigInt(1));
        pj.jumps.push_back({a_jump, 1});
        jumps.push_back(pj);
      }
      CHECK(parabolic_degree_general(lattice_degree(l, b), jumps) == want);
    }
  }
}

TEST_CASE("lattice-degree averaging identity at one point", "[parweights]") {
  auto rng = testutil::make_rng_pw(36);
  std::uniform_int_distribution<int> num(0, 8);
  for (int i = 0; i < 200; ++i) {
    FilteredLineBundle l;
    l.degree = num(rng) - 4;
    const Rational w_p = rat(num(rng), 9);  // in [0, 1)
    const Rational w_q = rat(num(rng) - 4, 7);
    l.weights = {w_p, w_q};

    // integrate b -> deg of (level-b lattice at P, weights kept at Q) over
    // (0, 1]: piecewise constant with a single jump at w_p
    const Rational at_low = rat(l.degree) + Rational(lattice_level(rat(0), w_p) + 1, BigInt(1)) - w_q - rat(1);
    // value on (0, w_p) is deg0 - 1 - w_q, on [w_p, 1] it is deg0 - w_q
    const Rational lo_val = rat(l.degree) - rat(1) - w_q;
    const Rational hi_val = rat(l.degree) - w_q;
    const Rational integral = w_p == rat(0) ? hi_val : lo_val * w_p + hi_val * (rat(1) - w_p);
    (void)at_low;

    // right side: degree at reference level 0 minus (a1 - 1) * dim with a1
    // the jump representative in (0, 1]
    const FilteredLineBundle at_zero{
        l.degree + lattice_level(rat(0), w_p).convert_to<long long>(), {w_q}};
    const Rational a1 = w_p == rat(0) ? rat(1) : w_p;
    const Rational rhs = parabolic_degree(at_zero) - (a1 - rat(1));
    CHECK(integral == rhs);
    CHECK(integral == parabolic_degree(l));
  }
}
