#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nde/characteristic.hpp"
#include "nde/errors.hpp"

using namespace nde;
using Catch::Approx;

namespace {

const double kPi = std::acos(-1.0);

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("params reject c = 0 and non-finite input") {
  CHECK_THROWS_AS(NeutralParams(1, 2, 0), InvalidInput);
  CHECK_THROWS_AS(NeutralParams(NAN, 2, 1), InvalidInput);
  CHECK_THROWS_AS(NeutralParams(1, INFINITY, 1), InvalidInput);
}

TEST_CASE("derived constants") {
  const NeutralParams p(1, 2, 0.5);
  CHECK(p.delta() == 1);
  CHECK(p.accumulation() == Approx(std::log(0.5)));
  CHECK(p.A() == Approx(1 + std::log(0.5)));
  CHECK(p.B() == Approx(std::log(0.5) + 4));

  // For c < 0 the shifted equation z(1 - e^{-z}) + A + B e^{-z} = 0 has B = -ln|c| + b/|c|:
  // substitute lambda = z + ln|c| into h and divide e^{-lambda} terms by |c|.
  const NeutralParams q(0.3, 2, -0.5);
  CHECK(q.delta() == -1);
  CHECK(q.A() == Approx(0.3 + std::log(0.5)));
  CHECK(q.B() == Approx(-std::log(0.5) + 4));
  const cplx z(0.37, 1.9);
  const cplx lam = z + q.accumulation();
  const cplx shifted = z * (1.0 + double(q.delta()) * std::exp(-z)) + q.A() + q.B() * std::exp(-z);
  CHECK(std::abs(shifted - eval_h(q, lam)) < 1e-13);

  CHECK(NeutralParams(1, 2, 3) == NeutralParams(1, 2, 3));
  CHECK_FALSE(NeutralParams(1, 2, 3) == NeutralParams(1, 2, -3));
}

TEST_CASE("h examples") {
  const NeutralParams z(0, 0, 2);
  CHECK(std::abs(eval_h(z, 0.0)) == 0.0);
  CHECK(std::abs(eval_h(z, cplx(std::log(2.0), kPi))) < 1e-15);
  const double e1 = std::exp(-1.0);
  CHECK(eval_h(NeutralParams(1, 2, 0.5), 1.0).real() == Approx(1 + 0.5 * e1 + 1 + 2 * e1).epsilon(1e-15));
  CHECK(eval_h(NeutralParams(1, 2, 0.5), 1.0).real() == Approx(2.9197).margin(1e-4));
}

TEST_CASE("h' and h'' closed forms") {
  CHECK(std::abs(eval_h_prime(NeutralParams(0, 0, 2), 0.0) - 3.0) < 1e-15);
  // Real zero of h'' at (2c - b)/c.
  CHECK(std::abs(eval_h_second(NeutralParams(1, 2, 0.5), -2.0)) < 1e-15);
  for (double c : {0.5, -1.5, 3.0}) CHECK(std::abs(eval_h_second(NeutralParams(0.7, 2 * c, c), 0.0)) < 1e-15);

  const NeutralParams p(1, 2, 0.5);
  const cplx lam(std::log(0.5), kPi);
  const cplx e = std::exp(-lam);
  CHECK(std::abs(eval_h_prime(p, lam) - (1.0 + 0.5 * e - 0.5 * lam * e - 2.0 * e)) < 1e-14);
}

TEST_CASE("derivatives match central differences") {
  std::mt19937_64 rng(7);
  const double eps = 1e-6;
  for (int k = 0; k < 100; ++k) {
    const NeutralParams p(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0.2, 3) * (k % 2 ? 1 : -1));
    const cplx lam(uniform(rng, -3, 3), uniform(rng, -40, 40));
    const cplx fd1 = (eval_h(p, lam + eps) - eval_h(p, lam - eps)) / (2 * eps);
    const cplx fd2 = (eval_h_prime(p, lam + eps) - eval_h_prime(p, lam - eps)) / (2 * eps);
    const cplx d1 = eval_h_prime(p, lam), d2 = eval_h_second(p, lam);
    CHECK(std::abs(fd1 - d1) <= 1e-6 * std::max(1.0, std::abs(d1)) * std::max(1.0, std::abs(lam)));
    CHECK(std::abs(fd2 - d2) <= 1e-5 * std::max(1.0, std::abs(d2)) * std::max(1.0, std::abs(lam)));
    const CharValues all = eval_h_all(p, lam);
    CHECK(all.h == eval_h(p, lam));
    CHECK(all.dh == d1);
    CHECK(all.d2h == d2);
  }
}

TEST_CASE("h0 and auxiliary eigenvalues") {
  CHECK(std::abs(eval_h0(NeutralParams(1, 1, 3), 0.0)) == 0.0);
  CHECK(std::abs(eval_h0(NeutralParams(0, 0, 2), cplx(std::log(2.0), kPi))) < 1e-15);
  CHECK(std::abs(eval_h0(NeutralParams(0, 0, -0.5), std::log(0.5))) < 1e-15);

  const cplx z0 = auxiliary_eigen(NeutralParams(0, 0, 2), 0);
  CHECK(z0.real() == Approx(std::log(2.0)));
  CHECK(z0.imag() == Approx(kPi));
  const cplx z1 = auxiliary_eigen(NeutralParams(0, 0, -0.5), 1);
  CHECK(z1.real() == Approx(std::log(0.5)));
  CHECK(z1.imag() == Approx(2 * kPi));

  for (double c : {2.0, -0.5, 0.3, -1.0})
    for (long n = -100; n <= 100; ++n) {
      const NeutralParams p(0.4, -1.1, c);
      const cplx z = auxiliary_eigen(p, n);
      CHECK(std::abs(eval_h0(p, z)) <= 1e-12 * (1 + std::abs(z)));
    }
}

TEST_CASE("pointwise identities") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 200; ++k) {
    const NeutralParams p(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0.2, 3) * (k % 2 ? 1 : -1));
    const cplx lam(uniform(rng, -3, 3), uniform(rng, -60, 60));
    CHECK(eval_h(p, std::conj(lam)) == std::conj(eval_h(p, lam)));
    const cplx split = eval_h0(p, lam) + p.a() + p.b() * std::exp(-lam);
    CHECK(std::abs(split - eval_h(p, lam)) <= 1e-13 * (1 + std::abs(eval_h(p, lam)) + std::abs(lam)));
  }
}

TEST_CASE("dichotomy condition examples") {
  CHECK(dichotomy_condition(NeutralParams(1, 2, 0.5)));
  CHECK_FALSE(dichotomy_condition(NeutralParams(0, 0, 2)));
  // a = b/|c| exactly, second clause irrelevant.
  CHECK_FALSE(dichotomy_condition(NeutralParams(3, 6, 2)));
  CHECK_FALSE(dichotomy_condition(NeutralParams(-1.5, -4.5, 3)));
}

TEST_CASE("dichotomy condition is |A| != |B| on a parameter sweep") {
  std::mt19937_64 rng(2024);
  int boundary = 0;
  for (int k = 0; k < 10000; ++k) {
    const double c = uniform(rng, 0.1, 4) * (k % 2 ? 1 : -1);
    const double L = std::log(std::abs(c));
    const double delta = c > 0 ? 1 : -1;
    double a = uniform(rng, -4, 4), b = uniform(rng, -4, 4);
    // A quarter of the draws sit exactly on one of the two boundary lines A = B or A = -B.
    switch (k % 8) {
      case 0: b = std::abs(c) * (a + L - delta * L); break;     // A = B
      case 2: b = -std::abs(c) * (a + L + delta * L); break;    // A = -B
      default: break;
    }
    const NeutralParams p(a, b, c);
    const bool generic = std::abs(std::abs(p.A()) - std::abs(p.B())) > 1e-9;
    if (!generic) ++boundary;
    CHECK(dichotomy_condition(p) == generic);
  }
  CHECK(boundary >= 2000);
}
