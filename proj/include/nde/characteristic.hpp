#pragma once

#include <complex>

namespace nde {

using cplx = std::complex<double>;

// Coefficients of x'(t) + c x'(t-1) + a x(t) + b x(t-1) = 0.
// A, B and delta describe the equation after the shift lambda = z + ln|c|:
//   z (1 + delta e^{-z}) + A + B e^{-z} = 0.
class NeutralParams {
 public:
  NeutralParams(double a, double b, double c);

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double A() const { return A_; }
  double B() const { return B_; }
  int delta() const { return delta_; }
  double accumulation() const { return log_c_; }

  bool operator==(const NeutralParams& o) const {
    return a_ == o.a_ && b_ == o.b_ && c_ == o.c_;
  }

 private:
  double a_, b_, c_;
  double log_c_;
  double A_, B_;
  int delta_;
};

// h, h', h'' sharing one evaluation of e^{-lambda}.
struct CharValues {
  cplx h, dh, d2h;
};

cplx eval_h(const NeutralParams& p, cplx lambda);
cplx eval_h_prime(const NeutralParams& p, cplx lambda);
cplx eval_h_second(const NeutralParams& p, cplx lambda);
CharValues eval_h_all(const NeutralParams& p, cplx lambda);

// Characteristic function of x'(t) + c x'(t-1) = 0 and its derivative.
cplx eval_h0(const NeutralParams& p, cplx lambda);
cplx eval_h0_prime(const NeutralParams& p, cplx lambda);

// z_n = ln|c| + i(2n pi + arg(-c)).
cplx auxiliary_eigen(const NeutralParams& p, long n);

// Im z_n - 2n pi: pi for c > 0, zero for c < 0.
double auxiliary_phase(const NeutralParams& p);

// a != b/|c| and ln|c| != -(a + b/|c|)/2, as the two clauses A != B, A != -B.
bool dichotomy_condition(const NeutralParams& p);

// Relative tolerance used when comparing A against +-B.
double row_tolerance(const NeutralParams& p);

}  // namespace nde
