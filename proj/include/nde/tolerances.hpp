#pragma once

namespace nde {

// Every numerical threshold used by the library, in one place.
struct Tolerances {
  double root_residual = 1e-12;       // |h| <= root_residual * (1 + |lambda|)
  int newton_max_iter = 50;
  double derivative_floor = 1e-14;    // |h'| below this aborts Newton
  double boundary_clearance = 1e-8;   // min |h| / (1 + |z|) on a contour
  double line_comfort = 1e-2;         // preferred clearance when choosing cut lines
  double cluster = 1e-9;              // real parts closer than this are one value
  double real_snap = 1e-10;           // |Im| below this is snapped to zero
  double region = 1e-9;               // strictness of table predicates
  double boundary_row = 1e-12;        // |A| = |B| detection
  double max_ball_radius = 0.5;
  int boundary_retries = 5;
  double gap_margin = 0.1;            // fraction of gap width kept as margin
  double near_spectrum = 1e-8;        // resolvent refuses |h| <= this
  double history_check = 1e-3;        // phi' vs finite difference of phi
  double rate_slack = 0.02;
  double quad = 1e-8;                 // agreement level for quadrature oracles
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

}  // namespace nde
