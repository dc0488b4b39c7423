#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "nde/characteristic.hpp"

namespace nde {

// A complex function on [-1, 0] stored at theta_j = -1 + j/N, j = 0..N, with N even.
// Off-node values come from the local cubic through the four nearest nodes.
class GridFunction {
 public:
  explicit GridFunction(std::vector<cplx> samples);

  static GridFunction from_callable(const std::function<cplx(double)>& f, int n_intervals);
  static GridFunction zero(int n_intervals);

  int intervals() const { return static_cast<int>(v_.size()) - 1; }
  double step() const { return 1.0 / intervals(); }
  double node(int j) const { return -1.0 + static_cast<double>(j) / intervals(); }
  const std::vector<cplx>& samples() const { return v_; }
  cplx operator[](int j) const { return v_[j]; }

  cplx operator()(double theta) const;

  GridFunction operator+(const GridFunction& o) const;
  GridFunction operator-(const GridFunction& o) const;
  GridFunction operator*(cplx s) const;
  GridFunction conj() const;

  // Largest |Im| relative to the sup-norm, 0 for the zero function.
  double imag_ratio() const;

 private:
  std::vector<cplx> v_;
};

double sup_norm(const GridFunction& f);

// Integral of e^{-lambda s} f(s) over [lower, upper], lower <= upper in [-1, 0].
cplx weighted_integral(const GridFunction& f, cplx lambda, double lower, double upper);

// W_j = integral of e^{-lambda s} f(s) over [theta_j, 0] for every node, computed
// with the same rule as weighted_integral.
std::vector<cplx> weighted_tail_integrals(const GridFunction& f, cplx lambda);

// Integral of e^{z_n theta} f(theta) over [-1, 0].
cplx fourier_coefficient(const GridFunction& f, const NeutralParams& p, long n);

// Derivative on the nodes by fourth order finite differences.
GridFunction finite_difference(const GridFunction& f);

// Smooth pseudo-random function: a trigonometric polynomial of degree 6 plus a quadratic,
// coefficients drawn from a 64-bit Mersenne twister so output is identical on every platform.
GridFunction random_smooth(std::uint64_t seed, int n_intervals, bool real_valued = true);

void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_csv(std::istream& is);
std::string to_json(const GridFunction& f);
GridFunction from_json(const std::string& text);

}  // namespace nde
