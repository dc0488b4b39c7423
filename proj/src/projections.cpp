#include "nde/projections.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <thread>

#include "nde/errors.hpp"

namespace nde {

namespace {

constexpr double kPi = std::numbers::pi;

GridFunction exp_mode(cplx xi, cplx coef, int n) {
  std::vector<cplx> v(n + 1);
  for (int j = 0; j <= n; ++j) v[j] = coef * std::exp(xi * (-1.0 + static_cast<double>(j) / n));
  return GridFunction(std::move(v));
}

void require_simple(const Eigenvalue& e) {
  if (e.multiplicity != 1)
    throw MultipleRoot("eigenvalue of multiplicity " + std::to_string(e.multiplicity) +
                       " has no rank-one residue projection");
}

void require_aux_index(const NeutralParams& p, long n) {
  if (p.c() == -1.0 && n == 0) throw DoubleRootExcluded("z_0 = 0 is a double root of h0 when c = -1");
}

// Simpson weights on M + 1 equispaced points over an interval of length 1.
std::vector<double> simpson_weights(int m) {
  std::vector<double> w(m + 1);
  const double h = 1.0 / m;
  for (int q = 0; q <= m; ++q) w[q] = h / 3.0 * (q == 0 || q == m ? 1.0 : (q % 2 ? 4.0 : 2.0));
  return w;
}

}  // namespace

ProjectionOperator ProjectionOperator::main(const NeutralParams& p, const std::vector<Eigenvalue>& eigs) {
  ProjectionOperator op{p, ProjectionKind::MainEquation, {}};
  for (const auto& e : eigs) {
    require_simple(e);
    op.eigs.push_back(e.value);
  }
  return op;
}

ProjectionOperator ProjectionOperator::auxiliary(const NeutralParams& p, const std::vector<long>& indices) {
  ProjectionOperator op{p, ProjectionKind::Auxiliary, {}};
  for (long n : indices) {
    require_aux_index(p, n);
    op.eigs.push_back(auxiliary_eigen(p, n));
  }
  return op;
}

bool ProjectionOperator::real_output() const {
  for (const auto& z : eigs) {
    if (z.imag() == 0.0) continue;
    const bool paired = std::any_of(eigs.begin(), eigs.end(), [&](cplx w) {
      return std::abs(w - std::conj(z)) <= 1e-12 * (1.0 + std::abs(z));
    });
    if (!paired) return false;
  }
  return true;
}

cplx KernelForm::c0(double theta) const {
  cplx s = 0.0;
  for (const auto& t : terms) s += t.alpha * std::exp(t.xi * theta);
  return s;
}

cplx KernelForm::c1(double theta) const {
  cplx s = 0.0;
  for (const auto& t : terms) s += t.beta * std::exp(t.xi * theta);
  return s;
}

cplx KernelForm::k(double theta, double s) const {
  cplx r = 0.0;
  for (const auto& t : terms) r += t.gamma * std::exp(t.xi * (theta - s));
  return r;
}

GridFunction KernelForm::apply(const GridFunction& f) const {
  const int n = f.intervals();
  std::vector<cplx> out(n + 1, 0.0);
  const cplx f0 = f[n], fm1 = f[0];
  for (const auto& t : terms) {
    const cplx coef = t.alpha * f0 + t.beta * fm1 + t.gamma * weighted_integral(f, t.xi, -1.0, 0.0);
    for (int j = 0; j <= n; ++j) out[j] += coef * std::exp(t.xi * f.node(j));
  }
  return GridFunction(std::move(out));
}

KernelForm KernelForm::operator-(const KernelForm& o) const {
  KernelForm r = *this;
  for (const auto& t : o.terms) r.terms.push_back({t.xi, -t.alpha, -t.beta, -t.gamma});
  return r;
}

cplx F_functional(const NeutralParams& p, cplx lambda, const GridFunction& f) {
  const int n = f.intervals();
  return f[n] + p.c() * f[0] -
         (p.c() * lambda + p.b()) * std::exp(-lambda) * weighted_integral(f, lambda, -1.0, 0.0);
}

cplx F0_functional(const NeutralParams& p, cplx lambda, const GridFunction& f) {
  const int n = f.intervals();
  return f[n] + p.c() * f[0] - p.c() * lambda * std::exp(-lambda) * weighted_integral(f, lambda, -1.0, 0.0);
}

GridFunction resolvent(const NeutralParams& p, cplx lambda, const GridFunction& f, ProjectionKind kind,
                       const Tolerances& tol) {
  const bool aux = kind == ProjectionKind::Auxiliary;
  const cplx hv = aux ? eval_h0(p, lambda) : eval_h(p, lambda);
  if (!(std::abs(hv) > tol.near_spectrum))
    throw NearSpectrum("|h(lambda)| = " + std::to_string(std::abs(hv)) + " is within the spectrum tolerance");
  const cplx ratio = (aux ? F0_functional(p, lambda, f) : F_functional(p, lambda, f)) / hv;
  const auto w = weighted_tail_integrals(f, lambda);
  const int n = f.intervals();
  std::vector<cplx> g(n + 1);
  for (int j = 0; j <= n; ++j) g[j] = std::exp(lambda * f.node(j)) * (ratio + w[j]);
  return GridFunction(std::move(g));
}

GridFunction residue_projection(const NeutralParams& p, const Eigenvalue& eig, const GridFunction& f) {
  require_simple(eig);
  const cplx coef = F_functional(p, eig.value, f) / eval_h_prime(p, eig.value);
  return exp_mode(eig.value, coef, f.intervals());
}

GridFunction aux_projection(const NeutralParams& p, long n, const GridFunction& f) {
  require_aux_index(p, n);
  const cplx z = auxiliary_eigen(p, n);
  const int N = f.intervals();
  const cplx coef = (f[N] + p.c() * f[0] + z * weighted_integral(f, z, -1.0, 0.0)) / z;
  return exp_mode(z, coef, N);
}

GridFunction contour_projection(const NeutralParams& p, cplx center, double radius, int quad_nodes,
                                const GridFunction& f, ProjectionKind kind, const Tolerances& tol) {
  if (quad_nodes < 64) throw InvalidInput("contour quadrature needs at least 64 nodes");
  const bool aux = kind == ProjectionKind::Auxiliary;
  AnalyticFn fn = aux ? AnalyticFn([&p](cplx z) { return eval_h0(p, z); })
                      : AnalyticFn([&p](cplx z) { return eval_h(p, z); });
  if (!(radius > 0)) {
    // Half the distance to the nearest neighbouring root.
    double nearest;
    if (aux) {
      nearest = std::min(2.0 * kPi, std::abs(center) > 1e-12 ? std::abs(center) : 2.0 * kPi);
    } else {
      const long n = static_cast<long>(std::abs(center.imag()) / (2.0 * kPi)) + 3;
      const Spectrum s = enumerate_eigenvalues(p, n, tol);
      nearest = std::numeric_limits<double>::infinity();
      const Eigenvalue* self = nullptr;
      for (const auto& e : s.eigs)
        if (!self || std::abs(e.value - center) < std::abs(self->value - center)) self = &e;
      for (const auto& e : s.eigs)
        if (&e != self) nearest = std::min(nearest, std::abs(e.value - self->value));
    }
    radius = 0.5 * nearest;
  }
  // Bounding square of the 10%-enlarged circle holds one root, and that root
  // sits inside 90% of the radius.
  const double R = 1.1 * radius;
  const int inside = count_zeros_of(
      fn, Rectangle(center.real() - R, center.real() + R, center.imag() - R, center.imag() + R), tol);
  if (inside != 1) throw WrongCount("contour square holds " + std::to_string(inside) + " roots");
  if (!aux) {
    const Eigenvalue e = find_eigenvalue_near(p, center, tol);
    if (!(std::abs(e.value - center) <= 0.9 * radius))
      throw BoundaryTooClose("eigenvalue within 10% of the contour");
  } else {
    bool ok = false;
    for (long n = -1; n <= 1 && !ok; ++n) {
      const long k = std::lround((center.imag() - auxiliary_phase(p)) / (2.0 * kPi)) + n;
      ok = std::abs(auxiliary_eigen(p, k) - center) <= 0.9 * radius;
    }
    ok = ok || std::abs(center) <= 0.9 * radius;
    if (!ok) throw BoundaryTooClose("auxiliary eigenvalue within 10% of the contour");
  }
  const int N = f.intervals();
  std::vector<cplx> acc(N + 1, 0.0);
  for (int k = 0; k < quad_nodes; ++k) {
    const cplx u = std::polar(radius, 2.0 * kPi * k / quad_nodes);
    const GridFunction r = resolvent(p, center + u, f, kind, tol);
    for (int j = 0; j <= N; ++j) acc[j] += u * r[j];
  }
  for (auto& v : acc) v /= static_cast<double>(quad_nodes);
  return GridFunction(std::move(acc));
}

GapSplit gap_projection(const NeutralParams& p, const SpectralGap& gap, const GridFunction& f) {
  GridFunction fin = GridFunction::zero(f.intervals());
  for (const auto& e : gap.finite_eigs) fin = fin + residue_projection(p, e, f);
  return {fin, f - fin};
}

GridFunction apply(const ProjectionOperator& op, const GridFunction& f) {
  GridFunction out = GridFunction::zero(f.intervals());
  if (op.kind == ProjectionKind::MainEquation) {
    for (const auto& z : op.eigs) out = out + residue_projection(op.params, Eigenvalue{z, {}, 0.0, 1, true, 0.0}, f);
  } else {
    const int N = f.intervals();
    for (const auto& z : op.eigs) {
      const cplx coef = (f[N] + op.params.c() * f[0] + z * weighted_integral(f, z, -1.0, 0.0)) / z;
      out = out + exp_mode(z, coef, N);
    }
  }
  return out;
}

KernelForm kernel_form(const ProjectionOperator& op) {
  KernelForm kf;
  const double c = op.params.c(), b = op.params.b();
  for (const auto& xi : op.eigs) {
    if (op.kind == ProjectionKind::MainEquation) {
      const cplx d = eval_h_prime(op.params, xi);
      kf.terms.push_back({xi, 1.0 / d, c / d, -(c * xi + b) * std::exp(-xi) / d});
    } else {
      // At z_n: h0'(z_n) = z_n and -c z_n e^{-z_n} / h0'(z_n) = 1.
      kf.terms.push_back({xi, 1.0 / xi, c / xi, 1.0});
    }
  }
  return kf;
}

double operator_norm(const KernelForm& kf, int n_intervals) {
  if (kf.terms.empty()) return 0.0;
  const int M = 4 * n_intervals;
  // k depends on theta - s only, so |k| is tabulated on the 2M + 1 lags.
  std::vector<double> absk(2 * M + 1);
  for (int l = -M; l <= M; ++l) {
    const double u = static_cast<double>(l) / M;
    cplx v = 0.0;
    for (const auto& t : kf.terms) v += t.gamma * std::exp(t.xi * u);
    absk[l + M] = std::abs(v);
  }
  const auto w = simpson_weights(M);
  double best = 0.0;
  for (int p = 0; p <= M; ++p) {
    const double theta = -1.0 + static_cast<double>(p) / M;
    cplx c0 = 0.0, c1 = 0.0;
    for (const auto& t : kf.terms) {
      const cplx e = std::exp(t.xi * theta);
      c0 += t.alpha * e;
      c1 += t.beta * e;
    }
    double integral = 0.0;
    const double* row = absk.data() + p + M;  // row[-q] = |k(theta_p, s_q)|
    for (int q = 0; q <= M; ++q) integral += w[q] * row[-q];
    best = std::max(best, std::abs(c0) + std::abs(c1) + integral);
  }
  return best;
}

double operator_norm(const ProjectionOperator& op, int n_intervals) {
  return operator_norm(kernel_form(op), n_intervals);
}

GridFunction partial_sum(const NeutralParams& p, const std::vector<long>& indices, const GridFunction& f) {
  GridFunction out = GridFunction::zero(f.intervals());
  for (long n : indices) out = out + aux_projection(p, n, f);
  return out;
}

double perturbation_norm(const Spectrum& s, long n, int n_intervals) {
  require_aux_index(s.params, n);
  const Eigenvalue* e = s.by_index(n);
  if (!e) throw Incomplete("no certified root with index " + std::to_string(n));
  const KernelForm kp = kernel_form(ProjectionOperator::main(s.params, {*e}));
  const KernelForm kq = kernel_form(ProjectionOperator::auxiliary(s.params, {n}));
  return operator_norm(kp - kq, n_intervals);
}

NormGrowthResult norm_growth_experiment(const Spectrum& s, int m_max, int n_intervals, int fit_from) {
  if (!dichotomy_condition(s.params)) throw InvalidInput("norm growth needs |A| != |B|");
  const OmegaConfiguration cfg = omega_configuration(s.params, s.eigs);
  const auto gaps = enumerate_gaps(cfg, s, m_max + 1);
  NormGrowthResult res{default_side(cfg), n_intervals, {}};
  res.rows.resize(gaps.size());
  const unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t m = w; m < gaps.size(); m += workers) {
        const auto& g = gaps[m];
        int count = 0;
        for (const auto& e : g.finite_eigs) count += e.multiplicity;
        res.rows[m] = {g.m, count, g.beta, g.alpha,
                       operator_norm(ProjectionOperator::main(s.params, g.finite_eigs), n_intervals)};
      }
    }));
  }
  for (auto& j : jobs) j.get();

  // Least squares of norm against ln K~ over m in [fit_from, m_max].
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  int n = 0;
  for (const auto& r : res.rows) {
    if (r.m < fit_from || r.finite_count <= 0) continue;
    const double x = std::log(static_cast<double>(r.finite_count)), y = r.norm;
    sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y;
    ++n;
  }
  res.fit_from = fit_from;
  res.fit_to = m_max;
  if (n >= 2) {
    const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
    res.slope = cxy / vx;
    res.intercept = (sy - res.slope * sx) / n;
    res.r_squared = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
  }
  return res;
}

}  // namespace nde
