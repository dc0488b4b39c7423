#include "nde/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "nde/errors.hpp"
#include "nde/projections.hpp"

namespace nde {

namespace {

constexpr double kMaxHorizon = 50.0;

int steps_for(double dt) {
  if (!(dt > 0) || dt > 1.0 / 64 + 1e-15) throw InvalidInput("dt must lie in (0, 1/64]");
  const double inv = 1.0 / dt;
  const long m = std::lround(inv);
  if (std::abs(inv - m) > 1e-9 * inv) throw InvalidInput("1/dt must be an integer");
  return static_cast<int>(m);
}

Segment sized(int m) {
  Segment s;
  s.x.resize(m + 1);
  s.dx.resize(m + 1);
  s.x_mid.resize(m);
  s.dx_mid.resize(m);
  return s;
}

// One unit interval of the method of steps from the previous interval.
Segment advance(const NeutralParams& p, const Segment& prev, int m) {
  const double a = p.a(), b = p.b(), c = p.c(), dt = 1.0 / m;
  Segment s = sized(m);
  auto f = [a](cplx x, cplx g) { return -a * x + g; };
  s.x[0] = prev.x[m];
  for (int i = 0; i < m; ++i) {
    const cplx g0 = -b * prev.x[i] - c * prev.dx[i];
    const cplx gm = -b * prev.x_mid[i] - c * prev.dx_mid[i];
    const cplx g1 = -b * prev.x[i + 1] - c * prev.dx[i + 1];
    const cplx x0 = s.x[i];
    const cplx k1 = f(x0, g0);
    const cplx k2 = f(x0 + 0.5 * dt * k1, gm);
    const cplx k3 = f(x0 + 0.5 * dt * k2, gm);
    const cplx k4 = f(x0 + dt * k3, g1);
    const cplx x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    s.x[i + 1] = x1;
    s.dx[i] = f(x0, g0);
    const cplx d1 = f(x1, g1);
    s.x_mid[i] = 0.5 * (x0 + x1) + dt / 8.0 * (s.dx[i] - d1);
    s.dx_mid[i] = f(s.x_mid[i], gm);
    if (i + 1 == m) s.dx[m] = d1;
  }
  return s;
}

// Cubic Hermite on one step of length dt, local u in [0, 1].
cplx hermite(cplx x0, cplx x1, cplx d0, cplx d1, double dt, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * x0 + (u3 - 2 * u2 + u) * dt * d0 + (-2 * u3 + 3 * u2) * x1 +
         (u3 - u2) * dt * d1;
}

cplx hermite_deriv(cplx x0, cplx x1, cplx d0, cplx d1, double dt, double u) {
  const double u2 = u * u;
  return ((6 * u2 - 6 * u) * x0 + (-6 * u2 + 6 * u) * x1) / dt + (3 * u2 - 4 * u + 1) * d0 +
         (3 * u2 - 2 * u) * d1;
}

double slope(const std::vector<double>& t, const std::vector<double>& y) {
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    st += t[i];
    sy += y[i];
    stt += t[i] * t[i];
    sty += t[i] * y[i];
  }
  return (sty - st * sy / n) / (stt - st * st / n);
}

}  // namespace

Trajectory::Trajectory(NeutralParams p, int m, History initial, std::vector<Segment> segments,
                       std::vector<cplx> jumps, double t0)
    : p_(p), m_(m), init_(std::move(initial)), segs_(std::move(segments)), jumps_(std::move(jumps)), t0_(t0) {}

const Segment& Trajectory::segment_for(double t, double& local) const {
  if (t < t0_ - 1.0 - 1e-12 || t > horizon() + 1e-12) throw InvalidInput("time outside the trajectory");
  if (t < t0_) {
    local = t - (t0_ - 1.0);
    return init_.seg;
  }
  const long k = std::min<long>(static_cast<long>(std::floor(t - t0_)), static_cast<long>(segs_.size()) - 1);
  local = t - t0_ - static_cast<double>(k);
  return segs_[k];
}

cplx Trajectory::x(double t) const {
  double local;
  const Segment& s = segment_for(t, local);
  const double pos = std::clamp(local * m_, 0.0, static_cast<double>(m_));
  const int i = std::min(static_cast<int>(pos), m_ - 1);
  return hermite(s.x[i], s.x[i + 1], s.dx[i], i + 1 == m_ ? s.dx[m_] : s.dx[i + 1], dt(), pos - i);
}

cplx Trajectory::dx(double t) const {
  double local;
  const Segment& s = segment_for(t, local);
  const double pos = std::clamp(local * m_, 0.0, static_cast<double>(m_));
  const int i = std::min(static_cast<int>(pos), m_ - 1);
  return hermite_deriv(s.x[i], s.x[i + 1], s.dx[i], s.dx[i + 1], dt(), pos - i);
}

double Trajectory::state_norm(double t) const {
  const long k = std::lround(t - t0_);
  if (std::abs(t - t0_ - k) > 1e-9 || k < 0 || k > static_cast<long>(segs_.size()))
    throw InvalidInput("state_norm needs an integer time inside the trajectory");
  const Segment& s = k == 0 ? init_.seg : segs_[k - 1];
  double m = 0.0;
  for (const auto& v : s.x) m = std::max(m, std::abs(v));
  return m;
}

History Trajectory::history_at(double t) const {
  const long k = std::lround(t - t0_);
  if (std::abs(t - t0_ - k) > 1e-9 || k < 0 || k > static_cast<long>(segs_.size()))
    throw InvalidInput("restart needs an integer time inside the trajectory");
  return {m_, k == 0 ? init_.seg : segs_[k - 1]};
}

void Trajectory::write_csv(std::ostream& os) const {
  os << "t,x_re,x_im,dx_re,dx_im\n";
  char buf[160];
  auto row = [&](double t, cplx x, cplx d) {
    std::snprintf(buf, sizeof buf, "%.10f,%.17g,%.17g,%.17g,%.17g\n", t, x.real(), x.imag(), d.real(), d.imag());
    os << buf;
  };
  auto dump = [&](const Segment& s, double start, bool last) {
    for (int i = 0; i < m_; ++i) row(start + static_cast<double>(i) / m_, s.x[i], s.dx[i]);
    if (last) row(start + 1.0, s.x[m_], s.dx[m_]);
  };
  dump(init_.seg, t0_ - 1.0, segs_.empty());
  for (std::size_t k = 0; k < segs_.size(); ++k) dump(segs_[k], t0_ + static_cast<double>(k), k + 1 == segs_.size());
}

History make_history(const GridFunction& phi, const GridFunction& phi_deriv, double dt) {
  const int m = steps_for(dt);
  History h{m, sized(m)};
  for (int i = 0; i <= m; ++i) {
    const double th = -1.0 + static_cast<double>(i) / m;
    h.seg.x[i] = phi(th);
    h.seg.dx[i] = phi_deriv(th);
  }
  for (int i = 0; i < m; ++i) {
    const double th = -1.0 + (i + 0.5) / m;
    h.seg.x_mid[i] = phi(th);
    h.seg.dx_mid[i] = phi_deriv(th);
  }
  return h;
}

Trajectory integrate(const NeutralParams& p, const History& h, double t0, double horizon) {
  if (!(horizon > t0) || horizon > kMaxHorizon + 1e-12) throw InvalidInput("horizon must lie in (t0, 50]");
  const int m = h.steps_per_unit;
  const long units = static_cast<long>(std::ceil(horizon - t0 - 1e-12));
  std::vector<Segment> segs;
  std::vector<cplx> jumps;
  segs.reserve(units);
  const Segment* prev = &h.seg;
  for (long k = 0; k < units; ++k) {
    segs.push_back(advance(p, *prev, m));
    jumps.push_back(segs.back().dx[0] - prev->dx[m]);
    prev = &segs.back();
  }
  return Trajectory(p, m, h, std::move(segs), std::move(jumps), t0);
}

Trajectory integrate(const NeutralParams& p, const GridFunction& phi, const GridFunction& phi_deriv,
                     double horizon, double dt, bool check_history, const Tolerances& tol) {
  if (phi.intervals() != phi_deriv.intervals()) throw InvalidInput("phi and phi' grids differ");
  if (check_history) {
    const GridFunction fd = finite_difference(phi);
    const double scale = 1.0 + sup_norm(phi_deriv);
    const double err = sup_norm(fd - phi_deriv);
    if (err > tol.history_check * scale)
      throw InconsistentHistory("phi' differs from the derivative of phi by " + std::to_string(err));
  }
  return integrate(p, make_history(phi, phi_deriv, dt), 0.0, horizon);
}

double decay_rate(const Trajectory& traj, double t_start, double t_end) {
  if (t_end - t_start < 5.0 - 1e-12) throw InvalidInput("rate window must span at least 5 time units");
  std::vector<double> ts, ys;
  for (long t = static_cast<long>(std::ceil(t_start - 1e-9)); t <= static_cast<long>(std::floor(t_end + 1e-9)); ++t) {
    const double n = traj.state_norm(static_cast<double>(t));
    if (!(n >= 1e-14))
      throw SignalUnderflow("state norm " + std::to_string(n) + " at t = " + std::to_string(t) +
                            "; shorten the window");
    ts.push_back(static_cast<double>(t));
    ys.push_back(std::log(n));
  }
  return slope(ts, ys);
}

DichotomyReport dichotomy_check(const NeutralParams& p, const SpectralGap& gap, const GridFunction& phi,
                                double t_start, double t_end, double dt, const Tolerances& tol) {
  if (phi.imag_ratio() > 1e-12) throw InvalidInput("dichotomy_check expects a real initial function");
  DichotomyReport rep;
  rep.gap = gap;
  const int N = phi.intervals();
  const bool stable_finite = gap.finite_side == GapSide::StableFinite;

  const GapSplit split = gap_projection(p, gap, phi);
  rep.finite_norm = sup_norm(split.finite_part);
  rep.complement_norm = sup_norm(split.complement);

  // Finite part: exact evolution sum coef e^{lambda t}, with derivative sum lambda coef e^{lambda t}.
  std::vector<std::pair<cplx, cplx>> modes;
  for (const auto& e : gap.finite_eigs)
    modes.emplace_back(e.value, F_functional(p, e.value, phi) / eval_h_prime(p, e.value));
  auto fin_deriv = GridFunction::from_callable(
      [&](double th) {
        cplx s = 0.0;
        for (auto [l, c] : modes) s += l * c * std::exp(l * th);
        return s;
      },
      N);

  const double tiny = 1e-12 * std::max(1.0, sup_norm(phi));
  if (modes.empty() || rep.finite_norm <= tiny) {
    rep.finite_ok = true;
    rep.finite_rate_analytic = std::numeric_limits<double>::quiet_NaN();
    rep.notes.push_back("finite part vanishes");
  } else {
    std::vector<double> ts, ys;
    const int M = 64;
    for (long t = static_cast<long>(std::ceil(t_start)); t <= static_cast<long>(std::floor(t_end)); ++t) {
      double sup = 0.0;
      for (int j = 0; j <= M; ++j) {
        const double s = static_cast<double>(t) - 1.0 + static_cast<double>(j) / M;
        cplx v = 0.0;
        for (auto [l, c] : modes) v += c * std::exp(l * s);
        sup = std::max(sup, std::abs(v));
      }
      ts.push_back(static_cast<double>(t));
      ys.push_back(std::log(sup));
    }
    rep.finite_rate_analytic = slope(ts, ys);
    rep.finite_ok = stable_finite ? rep.finite_rate_analytic <= gap.beta + tol.rate_slack
                                  : rep.finite_rate_analytic >= gap.alpha - tol.rate_slack;
  }

  auto simulated_rate = [&](const GridFunction& x0, const GridFunction& d0, double& rate, const char* what) {
    if (sup_norm(x0) <= tiny) {
      rep.notes.push_back(std::string(what) + " part vanishes");
      return false;
    }
    const Trajectory tr = integrate(p, x0, d0, t_end, dt, false, tol);
    rate = decay_rate(tr, t_start, t_end);
    return true;
  };
  const GridFunction comp_deriv = finite_difference(phi) - fin_deriv;
  double r = 0.0;
  if (stable_finite) {
    rep.stable_ok = !simulated_rate(split.finite_part, fin_deriv, r, "stable") || r <= gap.beta + tol.rate_slack;
    rep.stable_rate = r;
    r = 0.0;
    rep.unstable_ok = !simulated_rate(split.complement, comp_deriv, r, "unstable") || r >= gap.alpha - tol.rate_slack;
    rep.unstable_rate = r;
  } else {
    rep.stable_ok = !simulated_rate(split.complement, comp_deriv, r, "stable") || r <= gap.beta + tol.rate_slack;
    rep.stable_rate = r;
    r = 0.0;
    rep.unstable_ok = !simulated_rate(split.finite_part, fin_deriv, r, "unstable") || r >= gap.alpha - tol.rate_slack;
    rep.unstable_rate = r;
  }
  return rep;
}

}  // namespace nde
