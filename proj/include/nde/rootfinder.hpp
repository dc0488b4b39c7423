#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nde/characteristic.hpp"
#include "nde/tolerances.hpp"

namespace nde {

struct Eigenvalue {
  cplx value;
  std::optional<long> index;  // asymptotic index n when certified inside a ball around z_n
  double residual = 0.0;      // |h(value)|
  int multiplicity = 1;
  bool certified = false;
  double ball_radius = 0.0;   // radius of the certifying ball around z_n, when indexed

  bool is_real() const { return value.imag() == 0.0; }
};

struct Rectangle {
  double re_min, re_max, im_min, im_max;

  Rectangle(double r0, double r1, double i0, double i1);
  cplx center() const { return {0.5 * (re_min + re_max), 0.5 * (im_min + im_max)}; }
  bool contains(cplx z) const {
    return z.real() > re_min && z.real() < re_max && z.imag() > im_min && z.imag() < im_max;
  }
};

struct StripBounds {
  double nu1, nu2;
};

// Everything enumerate_eigenvalues learned about one parameter set.
struct Spectrum {
  explicit Spectrum(const NeutralParams& p) : params(p) {}

  NeutralParams params;
  long n_max = 0;
  StripBounds strip{};
  double im_low = 0.0, im_high = 0.0;  // horizontal extent of the certified region
  std::vector<Eigenvalue> eigs;        // sorted by (Re, Im)
  long n_eps = 0;                      // every index with n_eps <= |n| <= n_max is certified
  // Roots not enumerated (index beyond n_max) have |Re - ln|c|| below this.
  double tail_bound = 0.0;
  int total_count = 0;                 // winding number of the whole region

  const Eigenvalue* by_index(long n) const;
  bool fully_certified() const;
};

using AnalyticFn = std::function<cplx(cplx)>;

StripBounds strip_bounds(const NeutralParams& p);

std::vector<Eigenvalue> real_roots(const NeutralParams& p,
                                   const Tolerances& tol = default_tolerances());

int count_zeros_in_rect(const NeutralParams& p, const Rectangle& rect,
                        const Tolerances& tol = default_tolerances());

// Winding number of an arbitrary analytic function around the rectangle.
int count_zeros_of(const AnalyticFn& f, const Rectangle& rect,
                   const Tolerances& tol = default_tolerances());

Eigenvalue find_eigenvalue_near(const NeutralParams& p, cplx seed,
                                const Tolerances& tol = default_tolerances());

Spectrum enumerate_eigenvalues(const NeutralParams& p, long n_max,
                               const Tolerances& tol = default_tolerances());

}  // namespace nde
