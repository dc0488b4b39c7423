#pragma once

#include <complex>
#include <vector>

#include "nde/characteristic.hpp"
#include "nde/classifier.hpp"
#include "nde/grid_function.hpp"
#include "nde/rootfinder.hpp"
#include "nde/tolerances.hpp"

namespace nde {

enum class ProjectionKind { MainEquation, Auxiliary };

// Finite-rank spectral projection: the sum of the rank-one residues at eigs.
struct ProjectionOperator {
  NeutralParams params;
  ProjectionKind kind = ProjectionKind::MainEquation;
  std::vector<cplx> eigs;

  // Builds from certified eigenvalues; MultipleRoot if any is not simple.
  static ProjectionOperator main(const NeutralParams& p, const std::vector<Eigenvalue>& eigs);
  static ProjectionOperator auxiliary(const NeutralParams& p, const std::vector<long>& indices);

  // True when the eigenvalue set is closed under conjugation.
  bool real_output() const;
};

// One exponential term xi of the kernel representation
//   (P phi)(theta) = c0(theta) phi(0) + c1(theta) phi(-1) + integral k(theta, s) phi(s) ds,
// with c0 = sum alpha e^{xi theta}, c1 = sum beta e^{xi theta}, k = sum gamma e^{xi (theta - s)}.
struct ExpTerm {
  cplx xi, alpha, beta, gamma;
};

struct KernelForm {
  std::vector<ExpTerm> terms;

  cplx c0(double theta) const;
  cplx c1(double theta) const;
  cplx k(double theta, double s) const;
  GridFunction apply(const GridFunction& f) const;
  KernelForm operator-(const KernelForm& o) const;
};

cplx F_functional(const NeutralParams& p, cplx lambda, const GridFunction& f);
// phi(0) + c phi(-1) - c lambda e^{-lambda} integral e^{-lambda s} phi(s) ds.
cplx F0_functional(const NeutralParams& p, cplx lambda, const GridFunction& f);

GridFunction resolvent(const NeutralParams& p, cplx lambda, const GridFunction& f,
                       ProjectionKind kind = ProjectionKind::MainEquation,
                       const Tolerances& tol = default_tolerances());

GridFunction residue_projection(const NeutralParams& p, const Eigenvalue& eig, const GridFunction& f);

// radius <= 0 picks half the distance to the nearest other root found nearby.
GridFunction contour_projection(const NeutralParams& p, cplx center, double radius, int quad_nodes,
                                const GridFunction& f,
                                ProjectionKind kind = ProjectionKind::MainEquation,
                                const Tolerances& tol = default_tolerances());

GridFunction aux_projection(const NeutralParams& p, long n, const GridFunction& f);

struct GapSplit {
  GridFunction finite_part;
  GridFunction complement;
};

GapSplit gap_projection(const NeutralParams& p, const SpectralGap& gap, const GridFunction& f);

GridFunction apply(const ProjectionOperator& op, const GridFunction& f);
KernelForm kernel_form(const ProjectionOperator& op);

// max over theta of |c0| + |c1| + integral |k(theta, s)| ds on a 4N-point grid.
double operator_norm(const KernelForm& kf, int n_intervals = 1024);
double operator_norm(const ProjectionOperator& op, int n_intervals = 1024);

GridFunction partial_sum(const NeutralParams& p, const std::vector<long>& indices, const GridFunction& f);

// ||P_{lambda_n} - Q_{z_n}|| with lambda_n taken from the spectrum by index.
double perturbation_norm(const Spectrum& s, long n, int n_intervals = 1024);

struct NormGrowthRow {
  int m;
  int finite_count;  // K~_m, eigenvalues (with multiplicity) on the finite side
  double beta, alpha;
  double norm;
};

struct NormGrowthResult {
  GapSide side;
  int n_intervals;
  std::vector<NormGrowthRow> rows;
  double slope = 0.0, intercept = 0.0, r_squared = 0.0;  // norm vs ln K~ over the fit window
  int fit_from = 0, fit_to = 0;
};

NormGrowthResult norm_growth_experiment(const Spectrum& s, int m_max, int n_intervals = 1024,
                                        int fit_from = 5);

}  // namespace nde
