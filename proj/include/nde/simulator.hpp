#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "nde/characteristic.hpp"
#include "nde/classifier.hpp"
#include "nde/grid_function.hpp"
#include "nde/tolerances.hpp"

namespace nde {

// State on one unit interval [k, k+1] at step nodes and step midpoints.
// dx[0] is the right limit x'(k+) and dx[M] the left limit x'((k+1)-).
struct Segment {
  std::vector<cplx> x, dx;          // M + 1 nodes
  std::vector<cplx> x_mid, dx_mid;  // M midpoints
};

// The last unit interval of a solution, enough to continue integrating.
struct History {
  int steps_per_unit = 0;
  Segment seg;
};

class Trajectory {
 public:
  Trajectory(NeutralParams p, int steps_per_unit, History initial, std::vector<Segment> segments,
             std::vector<cplx> jumps, double t0);

  const NeutralParams& params() const { return p_; }
  double dt() const { return 1.0 / m_; }
  int steps_per_unit() const { return m_; }
  double t_start() const { return t0_; }
  double horizon() const { return t0_ + static_cast<double>(segs_.size()); }
  const std::vector<Segment>& segments() const { return segs_; }
  // Delta_k = x'(t0 + k +) - x'(t0 + k -), k = 0 .. segments - 1.
  const std::vector<cplx>& jumps() const { return jumps_; }

  // Dense output by cubic Hermite interpolation inside each step; t in [t0 - 1, horizon].
  cplx x(double t) const;
  cplx dx(double t) const;

  // sup over theta in [-1, 0] of |x(t + theta)| at step nodes; t must be integer-aligned.
  double state_norm(double t) const;

  // The unit interval ending at integer time t, for restarting.
  History history_at(double t) const;

  void write_csv(std::ostream& os) const;

 private:
  const Segment& segment_for(double t, double& local) const;

  NeutralParams p_;
  int m_;
  History init_;
  std::vector<Segment> segs_;
  std::vector<cplx> jumps_;
  double t0_;
};

History make_history(const GridFunction& phi, const GridFunction& phi_deriv, double dt);

Trajectory integrate(const NeutralParams& p, const GridFunction& phi, const GridFunction& phi_deriv,
                     double horizon, double dt, bool check_history = true,
                     const Tolerances& tol = default_tolerances());

// Continues from a history at time t0.
Trajectory integrate(const NeutralParams& p, const History& h, double t0, double horizon);

double decay_rate(const Trajectory& traj, double t_start, double t_end);

struct DichotomyReport {
  SpectralGap gap;
  // Slope of ln sup|x_t| for the finite part evolved exactly as sum coef e^{lambda t}.
  double finite_rate_analytic = 0.0;
  // Measured on simulated trajectories: the part spanned by roots left of the gap
  // and the part spanned by roots right of it.
  double stable_rate = 0.0, unstable_rate = 0.0;
  double finite_norm = 0.0, complement_norm = 0.0;
  bool finite_ok = false, stable_ok = false, unstable_ok = false;
  std::vector<std::string> notes;
  bool passed() const { return finite_ok && stable_ok && unstable_ok; }
};

// Splits phi across the gap, evolves the finite part analytically and the
// complement with integrate(), and compares rates with (beta, alpha).
DichotomyReport dichotomy_check(const NeutralParams& p, const SpectralGap& gap, const GridFunction& phi,
                                double t_start = 5.0, double t_end = 25.0, double dt = 1.0 / 256,
                                const Tolerances& tol = default_tolerances());

}  // namespace nde
