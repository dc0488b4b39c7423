#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "nde/errors.hpp"
#include "nde/rootfinder.hpp"

using namespace nde;

namespace {

const double kPi = std::acos(-1.0);

// Winding number by brute force: thousands of uniform samples per side, no adaptivity.
int brute_winding(const NeutralParams& p, const Rectangle& r, int per_side = 20000) {
  const cplx corners[5] = {{r.re_min, r.im_min}, {r.re_max, r.im_min}, {r.re_max, r.im_max}, {r.re_min, r.im_max},
                           {r.re_min, r.im_min}};
  double total = 0;
  for (int s = 0; s < 4; ++s) {
    cplx prev = eval_h(p, corners[s]);
    for (int j = 1; j <= per_side; ++j) {
      const cplx z = corners[s] + (corners[s + 1] - corners[s]) * (double(j) / per_side);
      const cplx v = eval_h(p, z);
      total += std::arg(v / prev);
      prev = v;
    }
  }
  return static_cast<int>(std::lround(total / (2 * kPi)));
}

}  // namespace

TEST_CASE("strip bounds follow the proof inequalities") {
  const StripBounds s = strip_bounds(NeutralParams(0, 0, 2));
  CHECK(s.nu1 < s.nu2);
  CHECK(s.nu2 >= std::log(4.0) - 1e-15);
  // ac = b: the second term vanishes, so e^{nu2} >= 2|c| must hold.
  for (double c : {0.5, 2.0, -3.0}) {
    const NeutralParams p(1.5, 1.5 * c, c);
    CHECK(std::exp(strip_bounds(p).nu2) >= 2 * std::abs(c) * (1 - 1e-15));
  }
  const NeutralParams p(1, 2, 0.5);
  const StripBounds sb = strip_bounds(p);
  for (const auto& e : enumerate_eigenvalues(p, 50).eigs) {
    CHECK(e.value.real() > sb.nu1);
    CHECK(e.value.real() < sb.nu2);
  }
}

TEST_CASE("real roots: closed forms") {
  auto r = real_roots(NeutralParams(0, 0, 2));
  REQUIRE(r.size() == 1);
  CHECK(std::abs(r[0].value) < 1e-14);

  r = real_roots(NeutralParams(0, 0, -0.5));
  REQUIRE(r.size() == 2);
  std::sort(r.begin(), r.end(), [](auto& x, auto& y) { return x.value.real() < y.value.real(); });
  CHECK(r[0].value.real() == Catch::Approx(std::log(0.5)).epsilon(1e-13));
  CHECK(std::abs(r[1].value) < 1e-14);
}

TEST_CASE("real roots match a dense sign scan") {
  for (const NeutralParams& p : {NeutralParams(1, 2, 0.5), NeutralParams(2, 0.5, 1), NeutralParams(-1, 0.5, -2),
                                 NeutralParams(0.3, 2, -0.5), NeutralParams(-2, 0.5, 1)}) {
    const StripBounds sb = strip_bounds(p);
    const int M = 100000;
    std::vector<double> scan;
    double prev = eval_h(p, sb.nu1).real();
    for (int j = 1; j <= M; ++j) {
      const double x = sb.nu1 + (sb.nu2 - sb.nu1) * j / M;
      const double v = eval_h(p, x).real();
      if ((prev < 0) != (v < 0)) scan.push_back(x);
      prev = v;
    }
    auto roots = real_roots(p);
    REQUIRE(roots.size() == scan.size());
    std::sort(roots.begin(), roots.end(), [](auto& x, auto& y) { return x.value.real() < y.value.real(); });
    for (std::size_t i = 0; i < scan.size(); ++i) {
      CHECK(std::abs(roots[i].value.real() - scan[i]) <= (sb.nu2 - sb.nu1) / M);
      CHECK(roots[i].residual <= 1e-12 * (1 + std::abs(roots[i].value)));
    }
  }
}

TEST_CASE("argument-principle counts") {
  const NeutralParams z(0, 0, 2);
  const double L = std::log(2.0);
  CHECK(count_zeros_in_rect(z, Rectangle(L - 0.3, L + 0.3, kPi - 0.3, kPi + 0.3)) == 1);

  const NeutralParams p(1, 2, 0.5);
  const StripBounds sb = strip_bounds(p);
  const Rectangle slice(sb.nu1, sb.nu2, kPi, 3 * kPi);
  const int n = count_zeros_in_rect(p, slice);
  CHECK(n == brute_winding(p, slice));
  CHECK(n == 1);

  // Additivity across a split line that avoids roots.
  const Rectangle big(sb.nu1, sb.nu2, 0.5, 20.5);
  const Rectangle lo(sb.nu1, sb.nu2, 0.5, 10.0), hi(sb.nu1, sb.nu2, 10.0, 20.5);
  CHECK(count_zeros_in_rect(p, big) == count_zeros_in_rect(p, lo) + count_zeros_in_rect(p, hi));
  CHECK(count_zeros_in_rect(p, big) == brute_winding(p, big));

  // A root on the boundary is refused.
  CHECK_THROWS_AS(count_zeros_in_rect(z, Rectangle(-0.5, 0.0, -0.5, 0.5)), BoundaryTooClose);
  CHECK_THROWS_AS(Rectangle(1, 0, 0, 1), InvalidInput);
}

TEST_CASE("Newton refinement near seeds") {
  const NeutralParams z(0, 0, 2);
  const cplx z3 = auxiliary_eigen(z, 3);
  const Eigenvalue e = find_eigenvalue_near(z, z3);
  CHECK(e.certified);
  CHECK(std::abs(e.value - z3) <= 1e-14 * std::abs(z3));

  const NeutralParams p(1, 2, 0.5);
  const cplx z10 = auxiliary_eigen(p, 10);
  const Eigenvalue r = find_eigenvalue_near(p, z10);
  REQUIRE(r.certified);
  // Independent certificate: exactly one zero in a small square around the result, and
  // the asymptotic constant C = 10 |root - z10| stays moderate.
  const double d = 10 * std::abs(r.value - z10);
  CHECK(d < 5.0);
  const double w = std::max(2 * std::abs(r.value - z10), 0.05);
  CHECK(count_zeros_in_rect(p, Rectangle(r.value.real() - w, r.value.real() + w, r.value.imag() - w,
                                         r.value.imag() + w)) == 1);

  const Eigenvalue c = find_eigenvalue_near(p, std::conj(z10));
  CHECK(c.value == std::conj(r.value));
}

TEST_CASE("enumeration: exact spectrum of the pure neutral case") {
  const NeutralParams z(0, 0, 2);
  const Spectrum s = enumerate_eigenvalues(z, 5);
  REQUIRE(s.eigs.size() == 12);
  int reals = 0;
  for (const auto& e : s.eigs) {
    CHECK(e.certified);
    CHECK(e.residual <= 1e-12 * (1 + std::abs(e.value)));
    if (e.is_real()) {
      ++reals;
      CHECK(std::abs(e.value) < 1e-14);
      continue;
    }
    CHECK(e.value.real() == Catch::Approx(std::log(2.0)).epsilon(1e-13));
    const double k = (e.value.imag() / kPi - 1) / 2;  // Im = (2k + 1) pi
    CHECK(std::abs(k - std::round(k)) < 1e-12);
  }
  CHECK(reals == 1);
}

TEST_CASE("enumeration: row |A| < B distribution") {
  const NeutralParams p(1, 2, 0.5);
  const Spectrum s = enumerate_eigenvalues(p, 50);
  const double L = p.accumulation();
  int right = 0, left_real = 0;
  for (const auto& e : s.eigs) {
    if (e.index && std::labs(*e.index) >= 1 && e.value.real() > L) ++right;
    if (e.is_real() && e.value.real() < L) ++left_real;
  }
  CHECK(right == 100);
  CHECK(left_real == 1);
  CHECK(s.fully_certified());
}

TEST_CASE("enumeration invariants") {
  for (const NeutralParams& p : {NeutralParams(1, 2, 0.5), NeutralParams(2, 0.5, 1), NeutralParams(0.3, 2, -0.5),
                                 NeutralParams(-0.2, 1.3, -1.0)}) {
    const Spectrum s = enumerate_eigenvalues(p, 60);
    int mult = 0;
    for (const auto& e : s.eigs) mult += e.multiplicity;
    CHECK(mult == s.total_count);
    CHECK(std::is_sorted(s.eigs.begin(), s.eigs.end(), [](const Eigenvalue& x, const Eigenvalue& y) {
      return x.value.real() < y.value.real() || (x.value.real() == y.value.real() && x.value.imag() < y.value.imag());
    }));
    // Conjugate closure inside the symmetric part of the region.
    const double sym = std::min(-s.im_low, s.im_high);
    for (const auto& e : s.eigs) {
      if (e.is_real() || std::abs(e.value.imag()) >= sym) continue;
      const bool found = std::any_of(s.eigs.begin(), s.eigs.end(), [&](const Eigenvalue& o) {
        return std::abs(o.value - std::conj(e.value)) <= 1e-12 * (1 + std::abs(e.value));
      });
      CHECK(found);
    }
    for (const auto& e : s.eigs) {
      if (e.is_real()) continue;
      CHECK(std::abs(e.value.imag()) >= 1e-10);
      if (e.index) CHECK(std::abs(e.value - auxiliary_eigen(p, *e.index)) < e.ball_radius);
    }
  }
}

TEST_CASE("asymptotic rate n |lambda_n - z_n| is bounded") {
  const NeutralParams p(2, 0.5, 1);
  const Spectrum s = enumerate_eigenvalues(p, 200);
  double lo = 1e300, hi = 0;
  for (long n = 10; n <= 200; ++n) {
    const Eigenvalue* e = s.by_index(n);
    REQUIRE(e != nullptr);
    const double v = std::abs(e->value - auxiliary_eigen(p, n)) * n;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi / lo < 4.0);
}

TEST_CASE("multiple roots are reported, not indexed") {
  // c = -1, a = b = 0: h = lambda (1 - e^{-lambda}) has a double root at 0.
  const Spectrum s = enumerate_eigenvalues(NeutralParams(0, 0, -1), 5);
  const auto it = std::find_if(s.eigs.begin(), s.eigs.end(), [](const Eigenvalue& e) { return std::abs(e.value) < 1e-6; });
  REQUIRE(it != s.eigs.end());
  CHECK(it->multiplicity == 2);
  CHECK_FALSE(it->index.has_value());
}
