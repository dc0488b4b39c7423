#include "nde/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nde/errors.hpp"

namespace nde {

namespace {

enum class Pattern { AllLeft, AllRight, OneLeftRestRight, OneRightRestLeft, OnLine };

Pattern row_pattern(Table t, Row r) {
  switch (r) {
    case Row::A_gt_absB: return Pattern::AllLeft;
    case Row::A_lt_negabsB: return Pattern::OneRightRestLeft;
    case Row::absA_lt_negB: return t == Table::Table1 ? Pattern::AllRight : Pattern::OneLeftRestRight;
    case Row::absA_lt_B: return t == Table::Table1 ? Pattern::OneLeftRestRight : Pattern::AllRight;
    default: return Pattern::OnLine;
  }
}

// Distinct values after merging neighbours closer than tol (input sorted).
std::vector<double> cluster(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

std::string describe(const Eigenvalue& e) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.12g%+.12gi", e.value.real(), e.value.imag());
  return buf;
}

}  // namespace

const char* to_string(Table t) { return t == Table::Table1 ? "Table1" : "Table2"; }

const char* to_string(Row r) {
  switch (r) {
    case Row::A_gt_absB: return "A_gt_absB";
    case Row::absA_lt_negB: return "absA_lt_negB";
    case Row::absA_lt_B: return "absA_lt_B";
    case Row::A_lt_negabsB: return "A_lt_negabsB";
    case Row::boundary_AeqabsB: return "boundary_AeqabsB";
    case Row::boundary_AeqnegB: return "boundary_AeqnegB";
    case Row::boundary_AeqB: return "boundary_AeqB";
  }
  return "?";
}

const char* to_string(OmegaCase c) {
  switch (c) {
    case OmegaCase::i: return "i";
    case OmegaCase::ii: return "ii";
    case OmegaCase::iii: return "iii";
    case OmegaCase::iv: return "iv";
    case OmegaCase::v: return "v";
  }
  return "?";
}

const char* to_string(GapSide s) {
  return s == GapSide::StableFinite ? "StableFinite" : "UnstableFinite";
}

RegionTag classify_region(const NeutralParams& p) {
  const double A = p.A(), B = p.B(), tol = row_tolerance(p);
  const Table t = p.delta() > 0 ? Table::Table1 : Table::Table2;
  if (std::abs(std::abs(A) - std::abs(B)) <= tol) {
    if (A > tol) return {t, Row::boundary_AeqabsB};
    // A = B = 0 belongs to "A = -B <= 0" in the first table and "A = B >= 0" in the second.
    if (t == Table::Table1) return {t, std::abs(A + B) <= tol ? Row::boundary_AeqnegB : Row::boundary_AeqB};
    return {t, std::abs(A - B) <= tol ? Row::boundary_AeqB : Row::boundary_AeqnegB};
  }
  if (A > std::abs(B)) return {t, Row::A_gt_absB};
  if (A < -std::abs(B)) return {t, Row::A_lt_negabsB};
  return {t, B > 0 ? Row::absA_lt_B : Row::absA_lt_negB};
}

RegionCheck verify_region(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                          const Tolerances& tol) {
  const RegionTag tag = classify_region(p);
  const Pattern pat = row_pattern(tag.table, tag.row);
  const double L = p.accumulation(), eps = tol.region;
  RegionCheck rc;
  std::vector<const Eigenvalue*> left, right, on;
  for (const auto& e : eigs) {
    if (!e.certified) continue;
    const double s = e.value.real() - L;
    (s < -eps ? left : s > eps ? right : on).push_back(&e);
  }
  auto fail = [&](const std::string& why, const std::vector<const Eigenvalue*>& bad) {
    rc.passed = false;
    rc.diagnostic = why;
    for (auto* e : bad) {
      rc.violating.push_back(*e);
      rc.diagnostic += " " + describe(*e);
    }
    return rc;
  };
  auto single_real = [](const std::vector<const Eigenvalue*>& v) {
    return v.size() == 1 && v[0]->is_real() && v[0]->multiplicity == 1;
  };

  switch (pat) {
    case Pattern::AllLeft:
      if (!right.empty() || !on.empty()) return fail("roots not left of ln|c|:", right.empty() ? on : right);
      break;
    case Pattern::AllRight:
      if (!left.empty() || !on.empty()) return fail("roots not right of ln|c|:", left.empty() ? on : left);
      break;
    case Pattern::OneLeftRestRight:
      if (!single_real(left)) return fail("expected exactly one real root left of ln|c|, found:", left);
      if (!on.empty()) return fail("roots on ln|c|:", on);
      break;
    case Pattern::OneRightRestLeft:
      if (!single_real(right)) return fail("expected exactly one real root right of ln|c|, found:", right);
      if (!on.empty()) return fail("roots on ln|c|:", on);
      break;
    case Pattern::OnLine: {
      std::vector<const Eigenvalue*> off = left;
      off.insert(off.end(), right.begin(), right.end());
      const bool all_on = (tag.table == Table::Table1 && tag.row == Row::boundary_AeqnegB) ||
                          (tag.table == Table::Table2 && tag.row == Row::boundary_AeqB);
      if (all_on && !off.empty()) return fail("roots off ln|c|:", off);
      if (off.size() > 1 || (off.size() == 1 && !off[0]->is_real()))
        return fail("more than one real exceptional root off ln|c|:", off);
      // Rows that name the exceptional root: shifted value -A, i.e. lambda = -a.
      const bool named = (tag.row == Row::boundary_AeqabsB &&
                          ((tag.table == Table::Table1 && p.B() > 0) ||
                           (tag.table == Table::Table2 && p.B() < 0))) ||
                         (tag.table == Table::Table1 && tag.row == Row::boundary_AeqB) ||
                         (tag.table == Table::Table2 && tag.row == Row::boundary_AeqnegB);
      if (named) {
        if (off.size() != 1) return fail("exceptional root -A missing", off);
        if (std::abs(off[0]->value.real() + p.a()) > 1e-8 * (1.0 + std::abs(p.a())))
          return fail("exceptional root is not at lambda = -a:", off);
      }
      break;
    }
  }
  rc.passed = true;
  rc.diagnostic = std::string(to_string(tag.table)) + "/" + to_string(tag.row) + " holds";
  return rc;
}

OmegaConfiguration omega_configuration(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                                       const Tolerances& tol) {
  const RegionTag tag = classify_region(p);
  const double L = p.accumulation();
  OmegaConfiguration cfg;
  cfg.accumulation = L;
  cfg.infinite = dichotomy_condition(p);
  std::vector<double> re;
  for (const auto& e : eigs) re.push_back(e.value.real());
  const auto distinct = cluster(re, tol.cluster);
  std::vector<double> lo, hi;
  for (double x : distinct) {
    if (x < L - tol.cluster) lo.push_back(x);
    else if (x > L + tol.cluster) hi.push_back(x);
  }
  std::reverse(hi.begin(), hi.end());  // decreasing toward ln|c|

  const Pattern pat = row_pattern(tag.table, tag.row);
  auto find_exceptional = [&](double value) {
    for (const auto& e : eigs) {
      if (e.is_real()) continue;
      if (std::abs(e.value.real() - value) <= tol.cluster) {
        cfg.collisions.push_back("exceptional real root at " + std::to_string(value) +
                                 " shares its real part with " + describe(e));
        break;
      }
    }
  };
  switch (pat) {
    case Pattern::AllLeft:
      cfg.omega_case = OmegaCase::i;
      cfg.gamma = lo;
      break;
    case Pattern::AllRight:
      cfg.omega_case = OmegaCase::ii;
      cfg.gamma = hi;
      break;
    case Pattern::OneLeftRestRight:
      cfg.omega_case = OmegaCase::iii;
      if (!lo.empty()) {
        cfg.gamma.push_back(lo.front());
        find_exceptional(lo.front());
      }
      cfg.gamma.insert(cfg.gamma.end(), hi.begin(), hi.end());
      break;
    case Pattern::OneRightRestLeft:
      cfg.omega_case = OmegaCase::iv;
      if (!hi.empty()) {
        cfg.gamma.push_back(hi.front());
        find_exceptional(hi.front());
      }
      cfg.gamma.insert(cfg.gamma.end(), lo.begin(), lo.end());
      break;
    case Pattern::OnLine:
      cfg.omega_case = OmegaCase::v;
      cfg.gamma = cluster([&] {
        auto v = distinct;
        v.push_back(L);
        return v;
      }(), tol.cluster);
      break;
  }
  return cfg;
}

GapSide default_side(const OmegaConfiguration& cfg) {
  switch (cfg.omega_case) {
    case OmegaCase::ii:
    case OmegaCase::iii: return GapSide::UnstableFinite;
    case OmegaCase::v:
      // The side holding the exceptional real root, if any.
      for (double g : cfg.gamma)
        if (g > cfg.accumulation + 1e-9) return GapSide::UnstableFinite;
      return GapSide::StableFinite;
    default: return GapSide::StableFinite;
  }
}

std::vector<SpectralGap> enumerate_gaps(const OmegaConfiguration& cfg, const Spectrum& s, int m_max,
                                        std::optional<GapSide> side_opt, const Tolerances& tol) {
  if (m_max < 1) throw InvalidInput("m_max must be positive");
  const bool finite_case = cfg.omega_case == OmegaCase::v;
  if (finite_case && m_max > 3)
    throw InsufficientRoots("|A| = |B|: finitely many dichotomies, at most 3 gaps (requested " +
                            std::to_string(m_max) + ")");
  const GapSide side = side_opt.value_or(default_side(cfg));
  const bool left = side == GapSide::StableFinite;
  const double L = cfg.accumulation;
  const bool infinite_side = !finite_case && side == default_side(cfg);

  // Distinct real parts on the requested side, ordered from the outside in.
  std::vector<double> re;
  for (const auto& e : s.eigs) re.push_back(e.value.real());
  std::vector<double> pts;
  for (double x : cluster(re, tol.cluster)) {
    const double d = left ? L - x : x - L;
    if (d > tol.cluster && d > s.tail_bound) pts.push_back(x);
  }
  if (!left) std::reverse(pts.begin(), pts.end());
  // On a side with finitely many roots the accumulation line closes the list.
  if (!infinite_side) pts.push_back(L);

  int available = static_cast<int>(pts.size());
  int count = m_max;
  if (available < m_max) {
    if (!finite_case)
      throw InsufficientRoots("only " + std::to_string(available) + " distinct real parts available, " +
                              std::to_string(m_max) + " gaps requested");
    count = available;
  }

  std::vector<SpectralGap> gaps;
  for (int m = 0; m < count; ++m) {
    SpectralGap g;
    g.m = m;
    g.finite_side = side;
    g.unbounded = m == 0;
    const double outer = m == 0 ? pts[0] + (left ? -1.0 : 1.0) : pts[m - 1];
    const double inner = pts[m];
    const double margin = m == 0 ? 0.1 : tol.gap_margin * std::abs(inner - outer);
    if (left) {
      g.beta = m == 0 ? inner - 1.0 : outer + margin;
      g.alpha = inner - margin;
    } else {
      g.beta = inner + margin;
      g.alpha = m == 0 ? inner + 1.0 : outer - margin;
    }
    for (const auto& e : s.eigs) {
      const double x = e.value.real();
      if (x >= g.beta - 1e-15 && x <= g.alpha + 1e-15)
        throw ToleranceNotMet("root " + describe(e) + " inside gap " + std::to_string(m));
      if (left ? x < g.beta : x > g.alpha) g.finite_eigs.push_back(e);
    }
    gaps.push_back(std::move(g));
  }
  return gaps;
}

double theta_cutoff(const Spectrum& s) {
  const double L = s.params.accumulation();
  return std::max(L - s.strip.nu1, s.strip.nu2 - L);
}

int theta(const Spectrum& s, double delta) {
  if (!(delta > 0)) throw InvalidInput("delta must be positive");
  if (delta < s.tail_bound)
    throw Incomplete("delta " + std::to_string(delta) + " is below the tail bound " +
                     std::to_string(s.tail_bound) + "; raise n_max");
  const double L = s.params.accumulation();
  int n = 0;
  for (const auto& e : s.eigs)
    if (std::abs(e.value.real() - L) > delta) n += e.multiplicity;
  return n;
}

KSequence k_sequence(const Spectrum& s, int m_max, const Tolerances& tol) {
  if (!dichotomy_condition(s.params)) throw InvalidInput("k_sequence needs |A| != |B|");
  const double L = s.params.accumulation();
  std::vector<double> d;
  for (const auto& e : s.eigs) d.push_back(std::abs(e.value.real() - L));
  auto levels = cluster(d, tol.cluster);
  std::reverse(levels.begin(), levels.end());
  std::vector<double> trusted;
  for (double x : levels)
    if (x > s.tail_bound) trusted.push_back(x);
  if (static_cast<int>(trusted.size()) < m_max)
    throw Incomplete("only " + std::to_string(trusted.size()) + " trusted levels for m_max = " +
                     std::to_string(m_max));
  KSequence ks;
  ks.K.push_back(0);
  for (int j = 0; j < m_max; ++j) {
    int k = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d[i] >= trusted[j] - tol.cluster) k += s.eigs[i].multiplicity;
    ks.K.push_back(k);
  }
  for (std::size_t m = 1; m < ks.K.size(); ++m) {
    const int inc = ks.K[m] - ks.K[m - 1];
    if (inc < 1 || inc > 7) ks.increments_ok = false;
    if (m + 1 < ks.K.size()) ks.ratios.push_back(static_cast<double>(ks.K[m + 1]) / ks.K[m]);
  }
  return ks;
}

double rho(const NeutralParams& p, double x0) {
  const double a = p.a(), b = p.b(), c = p.c();
  const double e = std::exp(-x0);
  const double P = ((a + 2.0 * x0) * c + b) * e;
  const double R = c * (c * x0 + b) * e * e + a + x0;
  return (P - R) / (P + R);
}

VerticalLineReport vertical_line_check(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                                       const Tolerances& tol) {
  VerticalLineReport rep;
  const double L = p.accumulation();
  std::vector<const Eigenvalue*> up;
  for (const auto& e : eigs)
    if (e.certified && e.value.imag() > 0 && std::abs(e.value.real() - L) > tol.cluster) up.push_back(&e);
  std::sort(up.begin(), up.end(),
            [](auto* x, auto* y) { return x->value.real() < y->value.real(); });
  for (std::size_t i = 0; i < up.size(); ++i) {
    if (i > 0 && up[i]->value.real() - up[i - 1]->value.real() <= tol.cluster) {
      rep.passed = false;
      rep.diagnostics.push_back("two roots on one vertical line: " + describe(*up[i - 1]) + " and " +
                                describe(*up[i]));
    }
    ++rep.lines_checked;
    // On the line Re = x0 the real and imaginary parts of h = 0 force
    // cos y = -R/P, hence tan^2(y/2) = (P + R)/(P - R) = 1/rho(x0).
    const double x0 = up[i]->value.real(), y = up[i]->value.imag();
    const double r = rho(p, x0);
    if (!(r >= 0)) {
      rep.passed = false;
      rep.diagnostics.push_back("rho < 0 at a root: " + describe(*up[i]));
      continue;
    }
    const double t = std::tan(0.5 * y);
    const double mismatch = std::abs(r * t * t - 1.0);
    rep.worst_rho_mismatch = std::max(rep.worst_rho_mismatch, mismatch);
    if (mismatch > 1e-6) {
      rep.passed = false;
      rep.diagnostics.push_back("tan^2(y/2) rho(x0) != 1 at " + describe(*up[i]));
    }
  }
  return rep;
}

}  // namespace nde
