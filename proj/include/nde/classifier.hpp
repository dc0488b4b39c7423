#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nde/characteristic.hpp"
#include "nde/rootfinder.hpp"
#include "nde/tolerances.hpp"

namespace nde {

enum class Table { Table1, Table2 };

enum class Row {
  A_gt_absB,
  absA_lt_negB,
  absA_lt_B,
  A_lt_negabsB,
  boundary_AeqabsB,
  boundary_AeqnegB,
  boundary_AeqB,
};

struct RegionTag {
  Table table;
  Row row;
};

enum class OmegaCase { i, ii, iii, iv, v };

enum class GapSide { StableFinite, UnstableFinite };

struct OmegaConfiguration {
  OmegaCase omega_case;
  std::vector<double> gamma;  // computed prefix of the gamma sequence (case v: all of Sigma)
  double accumulation = 0.0;
  bool infinite = false;
  // Exceptional real root whose real part coincides with another root's (cases iii, iv).
  std::vector<std::string> collisions;
};

struct SpectralGap {
  int m = 0;
  double beta = 0.0, alpha = 0.0;
  GapSide finite_side = GapSide::StableFinite;
  std::vector<Eigenvalue> finite_eigs;
  bool unbounded = false;  // the outer component (-inf, gamma_0) or (gamma_0, +inf)
};

struct RegionCheck {
  bool passed = false;
  std::string diagnostic;
  std::vector<Eigenvalue> violating;
  explicit operator bool() const { return passed; }
};

struct KSequence {
  std::vector<int> K;          // K_0 = 0, K_1, ...
  std::vector<double> ratios;  // K_{m+1}/K_m for m >= 1
  bool increments_ok = true;   // every increment in [1, 7]
};

struct VerticalLineReport {
  bool passed = true;
  std::vector<std::string> diagnostics;
  int lines_checked = 0;
  double worst_rho_mismatch = 0.0;  // max |cot^2(y/2) / rho(x0) - 1|
  explicit operator bool() const { return passed; }
};

const char* to_string(Table t);
const char* to_string(Row r);
const char* to_string(OmegaCase c);
const char* to_string(GapSide s);

RegionTag classify_region(const NeutralParams& p);

RegionCheck verify_region(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                          const Tolerances& tol = default_tolerances());

OmegaConfiguration omega_configuration(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                                       const Tolerances& tol = default_tolerances());

// Default side is the one with infinitely many components.
GapSide default_side(const OmegaConfiguration& cfg);

std::vector<SpectralGap> enumerate_gaps(const OmegaConfiguration& cfg, const Spectrum& s, int m_max,
                                        std::optional<GapSide> side = std::nullopt,
                                        const Tolerances& tol = default_tolerances());

int theta(const Spectrum& s, double delta);

// max(ln|c| - nu1, nu2 - ln|c|): Theta vanishes from here on.
double theta_cutoff(const Spectrum& s);

KSequence k_sequence(const Spectrum& s, int m_max, const Tolerances& tol = default_tolerances());

// rho(x0) from the real and imaginary parts of h = 0 on the line Re lambda = x0.
double rho(const NeutralParams& p, double x0);

VerticalLineReport vertical_line_check(const NeutralParams& p, const std::vector<Eigenvalue>& eigs,
                                       const Tolerances& tol = default_tolerances());

}  // namespace nde
