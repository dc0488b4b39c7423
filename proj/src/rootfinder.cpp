#include "nde/rootfinder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "nde/errors.hpp"

namespace nde {

namespace {

constexpr double kPi = std::numbers::pi;

double scaled(cplx v, cplx z) { return std::abs(v) / (1.0 + std::abs(z)); }

// Accumulates arg f along polygonal paths, refining each piece until the phase
// increment is below pi/2.
class PhaseWalker {
 public:
  PhaseWalker(const AnalyticFn& f, const Tolerances& tol) : f_(f), tol_(tol) {}

  void segment(cplx z0, cplx z1) {
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(z1 - z0) / 0.25)));
    cplx zp = z0;
    cplx vp = eval(z0);
    for (int k = 1; k <= pieces; ++k) {
      const cplx z = k == pieces ? z1 : z0 + (z1 - z0) * (static_cast<double>(k) / pieces);
      const cplx v = eval(z);
      total_ += piece(zp, vp, z, v, 0);
      zp = z;
      vp = v;
    }
  }

  double total() const { return total_; }

 private:
  cplx eval(cplx z) {
    const cplx v = f_(z);
    if (!(scaled(v, z) >= tol_.boundary_clearance))
      throw BoundaryTooClose("|f| below clearance at " + std::to_string(z.real()) + "+" +
                             std::to_string(z.imag()) + "i");
    return v;
  }

  double piece(cplx z0, cplx v0, cplx z1, cplx v1, int depth) {
    const double d = std::arg(v1 / v0);
    if (std::abs(d) < 0.5 * kPi) return d;
    if (depth > 48) throw BoundaryTooClose("phase increment not resolved");
    const cplx zm = 0.5 * (z0 + z1);
    const cplx vm = eval(zm);
    return piece(z0, v0, zm, vm, depth + 1) + piece(zm, vm, z1, v1, depth + 1);
  }

  const AnalyticFn& f_;
  const Tolerances& tol_;
  double total_ = 0.0;
};

double hr(const NeutralParams& p, double x) {
  const double e = std::exp(-x);
  return x + p.c() * x * e + p.a() + p.b() * e;
}

double dhr(const NeutralParams& p, double x) {
  const double e = std::exp(-x);
  return 1.0 + p.c() * e - p.c() * x * e - p.b() * e;
}

template <class F>
double bisect(F&& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
}

// Minimum of |h|/(1+|z|) over equispaced samples of a segment.
double line_clearance(const NeutralParams& p, cplx z0, cplx z1) {
  const double len = std::abs(z1 - z0);
  const int n = std::max(16, static_cast<int>(std::ceil(len / std::min(0.005, len / 200.0))));
  double m = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const cplx z = z0 + (z1 - z0) * (static_cast<double>(k) / n);
    m = std::min(m, scaled(eval_h(p, z), z));
  }
  return m;
}

// Horizontal cut near y_nom across [x0, x1] that keeps roots comfortably away.
double choose_cut(const NeutralParams& p, double x0, double x1, double y_nom, double step,
                  const Tolerances& tol) {
  double best_y = y_nom, best = -1.0;
  for (int r = 0; r <= 2 * tol.boundary_retries; ++r) {
    const double shift = (r == 0) ? 0.0 : ((r % 2) ? 1.0 : -1.0) * step * ((r + 1) / 2);
    const double y = y_nom + shift;
    const double cl = line_clearance(p, {x0, y}, {x1, y});
    if (cl >= tol.line_comfort) return y;
    if (cl > best) {
      best = cl;
      best_y = y;
    }
  }
  if (best < 100.0 * tol.boundary_clearance)
    throw BoundaryTooClose("no clear horizontal cut near Im = " + std::to_string(y_nom));
  return best_y;
}

AnalyticFn h_of(const NeutralParams& p) {
  return [p](cplx z) { return eval_h(p, z); };
}

class RectSearch {
 public:
  RectSearch(const NeutralParams& p, const Tolerances& tol) : p_(p), tol_(tol) {}

  void run(const Rectangle& r, int count, cplx seed, std::vector<Eigenvalue>& out) {
    if (count <= 0) return;
    if (count == 1) {
      try {
        Eigenvalue e = find_eigenvalue_near(p_, seed, tol_);
        if (e.certified && r.contains(e.value)) {
          out.push_back(e);
          return;
        }
      } catch (const DerivativeVanished&) {
      }
    }
    const double w = r.re_max - r.re_min, hgt = r.im_max - r.im_min;
    if (std::hypot(w, hgt) < 1e-7) {
      const cplx z = r.center();
      Eigenvalue e{z, std::nullopt, std::abs(eval_h(p_, z)), count, true, 0.0};
      if (count == 1) {
        e.certified = e.residual <= tol_.root_residual * (1.0 + std::abs(z));
      }
      out.push_back(e);
      return;
    }
    static constexpr double fractions[] = {0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.3, 0.7};
    for (double f : fractions) {
      Rectangle lo = r, hi = r;
      if (w >= hgt) {
        const double x = r.re_min + f * w;
        if (line_clearance(p_, {x, r.im_min}, {x, r.im_max}) < tol_.line_comfort * std::min(1.0, w))
          continue;
        lo.re_max = x;
        hi.re_min = x;
      } else {
        const double y = r.im_min + f * hgt;
        if (line_clearance(p_, {r.re_min, y}, {r.re_max, y}) < tol_.line_comfort * std::min(1.0, hgt))
          continue;
        lo.im_max = y;
        hi.im_min = y;
      }
      int c_lo, c_hi;
      try {
        c_lo = count_zeros_in_rect(p_, lo, tol_);
        c_hi = count_zeros_in_rect(p_, hi, tol_);
      } catch (const BoundaryTooClose&) {
        continue;
      }
      if (c_lo + c_hi != count) continue;
      run(lo, c_lo, lo.center(), out);
      run(hi, c_hi, hi.center(), out);
      return;
    }
    throw BoundaryTooClose("could not split rectangle around " + std::to_string(r.center().real()) +
                           "+" + std::to_string(r.center().imag()) + "i");
  }

 private:
  const NeutralParams& p_;
  const Tolerances& tol_;
};

// Tries to certify that lambda is the unique root in a square around z_n that
// fits inside the cell of half-width r_cell.
bool certify_index(const NeutralParams& p, Eigenvalue& e, long n, double r_cell,
                   const Tolerances& tol) {
  const cplx zn = auxiliary_eigen(p, n);
  const double corr = std::abs(e.value - zn);
  if (!(corr < r_cell)) return false;
  double r = std::min(tol.max_ball_radius, std::max(4.0 * corr, 1e-3));
  if (r <= 1.05 * corr) r = std::min(2.0 * corr, 0.5 * (corr + r_cell));
  for (int attempt = 0; attempt < 12 && r < r_cell; ++attempt) {
    try {
      const int k = count_zeros_in_rect(p, Rectangle(zn.real() - r, zn.real() + r, zn.imag() - r,
                                                     zn.imag() + r), tol);
      if (k == 1) {
        e.index = n;
        e.ball_radius = r;
        return true;
      }
      if (k > 1) return false;
    } catch (const BoundaryTooClose&) {
    }
    r *= 1.5;
  }
  return false;
}

}  // namespace

Rectangle::Rectangle(double r0, double r1, double i0, double i1)
    : re_min(r0), re_max(r1), im_min(i0), im_max(i1) {
  if (!(r0 < r1) || !(i0 < i1)) throw InvalidInput("degenerate rectangle");
}

const Eigenvalue* Spectrum::by_index(long n) const {
  for (const auto& e : eigs)
    if (e.index && *e.index == n) return &e;
  return nullptr;
}

bool Spectrum::fully_certified() const {
  return std::all_of(eigs.begin(), eigs.end(), [](const Eigenvalue& e) { return e.certified; });
}

StripBounds strip_bounds(const NeutralParams& p) {
  const double a = p.a(), c = std::abs(p.c());
  const double k = std::abs(p.a() * p.c() - p.b());
  // Right of nu2: |lambda + a| >= 1 and |e^lambda| >= 2|c| + |ac - b|.
  const double nu2 = std::max(-a + 1.0, std::log(2.0 * c + k));
  // Left of nu1: |e^lambda| <= |c|/4 and |(ac - b)/(lambda + a)| <= |c|/4.
  const double d = std::max(1.0, 4.0 * k / c);
  const double nu1 = std::min(std::log(c / 4.0), -a - d);
  return {nu1, nu2};
}

std::vector<Eigenvalue> real_roots(const NeutralParams& p, const Tolerances& tol) {
  const auto [lo, hi] = strip_bounds(p);
  auto h = [&](double x) { return hr(p, x); };
  auto dh = [&](double x) { return dhr(p, x); };

  // h'' = (c x + b - 2c) e^{-x} vanishes only at xs, so h' is monotone on each side.
  const double xs = (2.0 * p.c() - p.b()) / p.c();
  std::vector<double> cuts{lo};
  if (xs > lo && xs < hi) cuts.push_back(xs);
  cuts.push_back(hi);
  std::vector<double> crit;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u = dh(cuts[i]), v = dh(cuts[i + 1]);
    if (u == 0.0 && i > 0) continue;
    if ((u < 0) != (v < 0) || v == 0.0) crit.push_back(bisect(dh, cuts[i], cuts[i + 1]));
  }
  std::sort(crit.begin(), crit.end());
  crit.erase(std::unique(crit.begin(), crit.end()), crit.end());

  std::vector<Eigenvalue> out;
  auto accept = [&](double x, int mult) {
    if (mult == 1) {
      for (int k = 0; k < 2; ++k) {
        const double hx = h(x), d = dh(x);
        if (hx == 0.0 || d == 0.0) break;
        const double next = x - hx / d;
        if (!(std::abs(h(next)) < std::abs(hx))) break;
        x = next;
      }
    }
    const double res = std::abs(h(x));
    if (!(res <= tol.root_residual * (1.0 + std::abs(x))))
    {
      char buf[96];
      std::snprintf(buf, sizeof buf, "real root near %.6f has residual %.3e", x, res);
      throw ToleranceNotMet(buf);
    }
    for (const auto& e : out)
      if (std::abs(e.value.real() - x) <= tol.cluster) return;
    out.push_back({cplx(x, 0.0), std::nullopt, res, mult, true, 0.0});
  };

  // Tangential zeros at critical points of h are double roots (triple if h'' vanishes too).
  for (double x : crit) {
    if (std::abs(h(x)) <= tol.root_residual * (1.0 + std::abs(x))) {
      const int mult = std::abs(eval_h_second(p, x)) <= 1e-8 ? 3 : 2;
      accept(x, mult);
    }
  }
  std::vector<double> pts{lo};
  pts.insert(pts.end(), crit.begin(), crit.end());
  pts.push_back(hi);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double u = h(pts[i]), v = h(pts[i + 1]);
    if (u != 0.0 && v != 0.0 && (u < 0) != (v < 0)) accept(bisect(h, pts[i], pts[i + 1]), 1);
  }
  std::sort(out.begin(), out.end(),
            [](const Eigenvalue& x, const Eigenvalue& y) { return x.value.real() < y.value.real(); });
  return out;
}

int count_zeros_of(const AnalyticFn& f, const Rectangle& r, const Tolerances& tol) {
  PhaseWalker w(f, tol);
  const cplx z00(r.re_min, r.im_min), z10(r.re_max, r.im_min), z11(r.re_max, r.im_max),
      z01(r.re_min, r.im_max);
  w.segment(z00, z10);
  w.segment(z10, z11);
  w.segment(z11, z01);
  w.segment(z01, z00);
  const double turns = w.total() / (2.0 * kPi);
  const double k = std::round(turns);
  if (std::abs(turns - k) > 0.1 || k < 0)
    throw ToleranceNotMet("winding number " + std::to_string(turns) + " is not a count");
  return static_cast<int>(k);
}

int count_zeros_in_rect(const NeutralParams& p, const Rectangle& rect, const Tolerances& tol) {
  return count_zeros_of(h_of(p), rect, tol);
}

Eigenvalue find_eigenvalue_near(const NeutralParams& p, cplx seed, const Tolerances& tol) {
  if (seed.imag() < 0) {
    Eigenvalue e = find_eigenvalue_near(p, std::conj(seed), tol);
    e.value = std::conj(e.value);
    return e;
  }
  cplx z = seed;
  bool converged = false;
  for (int it = 0; it < tol.newton_max_iter; ++it) {
    const CharValues v = eval_h_all(p, z);
    if (std::abs(v.h) <= tol.root_residual * (1.0 + std::abs(z))) {
      converged = true;
      break;
    }
    if (std::abs(v.dh) < tol.derivative_floor)
      throw DerivativeVanished("h' vanishes near " + std::to_string(z.real()) + "+" +
                               std::to_string(z.imag()) + "i");
    z -= v.h / v.dh;
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) break;
  }
  if (converged) {
    // Up to two polishing steps, kept only while the residual keeps dropping.
    for (int k = 0; k < 2; ++k) {
      const CharValues v = eval_h_all(p, z);
      if (v.h == 0.0 || std::abs(v.dh) < tol.derivative_floor) break;
      const cplx next = z - v.h / v.dh;
      if (!(std::abs(eval_h(p, next)) < std::abs(v.h))) break;
      z = next;
    }
  }
  const double res = std::abs(eval_h(p, z));
  return {z, std::nullopt, res, 1,
          converged && res <= tol.root_residual * (1.0 + std::abs(z)), 0.0};
}

Spectrum enumerate_eigenvalues(const NeutralParams& p, long n_max, const Tolerances& tol) {
  if (n_max < 1) throw InvalidInput("n_max must be at least 1");
  const StripBounds sb = strip_bounds(p);
  const double L = p.accumulation();
  const bool cpos = p.c() > 0;
  const double omega = auxiliary_phase(p);

  // Horizontal cuts y_0 < y_1 < ... < y_{n_max} halfway between consecutive z_k.
  // The central region (-y_0, y_0) holds z_0 (and z_{-1} when c > 0).
  std::vector<double> ycut(n_max + 1);
  for (long k = 0; k <= n_max; ++k)
    ycut[k] = choose_cut(p, sb.nu1, sb.nu2, omega + (2.0 * k + 1.0) * kPi, 0.05, tol);

  Spectrum s(p);
  s.n_max = n_max;
  s.strip = sb;
  RectSearch search(p, tol);

  // Central region: real axis band, then the upper half.
  const double eta = choose_cut(p, sb.nu1, sb.nu2, 0.02, 0.004, tol);
  std::vector<Eigenvalue> upper;
  std::vector<Eigenvalue> reals = real_roots(p, tol);
  {
    const Rectangle band(sb.nu1, sb.nu2, -eta, eta);
    const int in_band = count_zeros_in_rect(p, band, tol);
    int real_mult = 0;
    for (const auto& e : reals) real_mult += e.multiplicity;
    if (in_band != real_mult) {
      // Complex pairs hug the real axis: resolve the band by subdivision instead.
      std::vector<Eigenvalue> found;
      search.run(band, in_band, band.center(), found);
      reals.clear();
      for (auto& e : found) {
        if (std::abs(e.value.imag()) < tol.real_snap) {
          e.value = {e.value.real(), 0.0};
          e.residual = std::abs(eval_h(p, e.value));
          reals.push_back(e);
        } else if (e.value.imag() > 0) {
          upper.push_back(e);
        }
      }
    }
    const Rectangle top(sb.nu1, sb.nu2, eta, ycut[0]);
    search.run(top, count_zeros_in_rect(p, top, tol), auxiliary_eigen(p, 0), upper);
  }
  for (long k = 1; k <= n_max; ++k) {
    const Rectangle slice(sb.nu1, sb.nu2, ycut[k - 1], ycut[k]);
    search.run(slice, count_zeros_in_rect(p, slice, tol), auxiliary_eigen(p, k), upper);
  }

  // Asymptotic indices.
  auto cell_radius = [&](long n) {
    const double y = omega + 2.0 * kPi * n;
    const double ylo = n == 0 ? -ycut[0] : ycut[n - 1];
    return std::min({y - ylo, ycut[n] - y, L - sb.nu1, sb.nu2 - L});
  };
  for (auto& e : upper) {
    const long n = std::lround((e.value.imag() - omega) / (2.0 * kPi));
    if (n >= 0 && n <= n_max && e.multiplicity == 1) certify_index(p, e, n, cell_radius(n), tol);
  }
  if (!cpos) {
    for (auto& e : reals)
      if (e.multiplicity == 1 && certify_index(p, e, 0, cell_radius(0), tol)) break;
  }

  // Mirror the upper half. For c > 0 the lower half stops at index -n_max.
  const long lower_top = cpos ? n_max - 1 : n_max;
  for (const auto& e : upper) {
    s.eigs.push_back(e);
    const double y = e.value.imag();
    if (y >= ycut[lower_top]) continue;
    Eigenvalue m = e;
    m.value = std::conj(e.value);
    if (e.index) m.index = cpos ? -*e.index - 1 : -*e.index;
    s.eigs.push_back(m);
  }
  for (auto& e : reals) s.eigs.push_back(e);
  std::sort(s.eigs.begin(), s.eigs.end(), [](const Eigenvalue& x, const Eigenvalue& y) {
    if (x.value.real() != y.value.real()) return x.value.real() < y.value.real();
    return x.value.imag() < y.value.imag();
  });

  s.im_high = ycut[n_max];
  s.im_low = -ycut[lower_top];
  int total = 0;
  for (const auto& e : s.eigs) total += e.multiplicity;
  s.total_count = count_zeros_in_rect(p, Rectangle(sb.nu1, sb.nu2, s.im_low, s.im_high), tol);
  if (s.total_count != total)
    throw ToleranceNotMet("enumerated " + std::to_string(total) + " roots but the region holds " +
                          std::to_string(s.total_count));

  // n_eps: every index n with n_eps <= |n| <= n_max is present.
  long n_eps = n_max + 1;
  for (long k = n_max; k >= 0; --k) {
    const bool ok = s.by_index(k) != nullptr && (k == 0 ? (!cpos || s.by_index(-1) != nullptr) : s.by_index(-k) != nullptr);
    if (!ok) break;
    n_eps = k;
  }
  s.n_eps = n_eps;

  // Beyond n_max the real parts approach ln|c| like 1/n^2; twice the largest
  // scaled deviation among the last indexed roots bounds the tail.
  double worst = -1.0;
  for (const auto& e : s.eigs) {
    if (!e.index) continue;
    const long an = std::labs(*e.index);
    if (an >= std::max(1L, n_max - 9)) worst = std::max(worst, std::abs(e.value.real() - L) * an);
  }
  s.tail_bound = worst < 0 ? std::numeric_limits<double>::infinity()
                           : std::max(2.0 * worst / static_cast<double>(n_max), 1e-12);
  return s;
}

}  // namespace nde
