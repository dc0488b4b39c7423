#include "nde/characteristic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nde/errors.hpp"

namespace nde {

NeutralParams::NeutralParams(double a, double b, double c) : a_(a), b_(b), c_(c) {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c))
    throw InvalidInput("coefficients must be finite");
  if (c == 0.0) throw InvalidInput("c must be nonzero (neutral coefficient)");
  log_c_ = std::log(std::abs(c));
  delta_ = c > 0 ? 1 : -1;
  A_ = a + log_c_;
  // With lambda = z + ln|c| we get e^{-lambda} = e^{-z}/|c|, so c lambda e^{-lambda}
  // contributes delta ln|c| e^{-z} besides delta z e^{-z}.
  B_ = delta_ * log_c_ + b / std::abs(c);
}

cplx eval_h(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return lambda + p.c() * lambda * e + p.a() + p.b() * e;
}

cplx eval_h_prime(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return 1.0 + p.c() * e - p.c() * lambda * e - p.b() * e;
}

cplx eval_h_second(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return (p.c() * lambda + p.b() - 2.0 * p.c()) * e;
}

CharValues eval_h_all(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return {lambda + p.c() * lambda * e + p.a() + p.b() * e,
          1.0 + p.c() * e - p.c() * lambda * e - p.b() * e,
          (p.c() * lambda + p.b() - 2.0 * p.c()) * e};
}

cplx eval_h0(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return lambda * (1.0 + p.c() * e);
}

cplx eval_h0_prime(const NeutralParams& p, cplx lambda) {
  const cplx e = std::exp(-lambda);
  return 1.0 + p.c() * e - p.c() * lambda * e;
}

double auxiliary_phase(const NeutralParams& p) {
  return p.c() > 0 ? std::numbers::pi : 0.0;
}

cplx auxiliary_eigen(const NeutralParams& p, long n) {
  return {p.accumulation(), 2.0 * std::numbers::pi * static_cast<double>(n) + auxiliary_phase(p)};
}

double row_tolerance(const NeutralParams& p) {
  return 1e-12 * std::max({1.0, std::abs(p.A()), std::abs(p.B())});
}

bool dichotomy_condition(const NeutralParams& p) {
  const double tol = row_tolerance(p);
  const double q = p.b() / std::abs(p.c());
  const double L = p.accumulation();
  if (p.delta() > 0) return std::abs(p.a() - q) > tol && std::abs(L + 0.5 * (p.a() + q)) > 0.5 * tol;
  return std::abs(p.a() + 2.0 * L - q) > tol && std::abs(p.a() + q) > tol;
}

}  // namespace nde
