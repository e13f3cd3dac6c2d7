#pragma once

#include <Eigen/Dense>

namespace adatemp::sw {

using Eigen::Index;
using Eigen::VectorXd;

inline constexpr double kDryThreshold = 1e-8;
inline constexpr double kDefaultCfl = 0.45;

/// Cell-averaged shallow-water state on a 1-D channel with a Neumann boundary
/// at the left edge and a reflective wall at the right edge.
struct SWState {
  VectorXd h;      // height over ground, >= 0
  VectorXd hu;     // momentum
  VectorXd zb;     // cell-averaged orography
  VectorXd edges;  // N + 1 increasing cell edges
  double boundary_inflow = 0.0;  // cumulative mass entering through x = 0

  Index cells() const { return h.size(); }
  VectorXd widths() const;
  VectorXd centers() const;
  double mass() const;
  /// Surface elevation h + zb.
  VectorXd total_height() const { return h + zb; }
};

/// Dam-break scenario geometry. Orography is flat (0) up to x_r, rises
/// linearly to z_d at x_d, falls to z_b_level at x_b and stays flat to L.
struct SWScenario {
  double x_r = 10.0;
  double x_d = 20.0;
  double x_b = 24.0;
  double length = 28.0;
  double h0 = 1.5;       // resting surface level H_0
  double hw = 1.8;       // raised surface level H_w on [x_w, x_r]
  double z_b_level = 0.5;
  double z_d = 2.2;
  double g = 9.81;
  Index n_uniform = 49;  // uniform cells on [0, x_b); one extra cell [x_b, L]

  void validate(double x_w) const;
  /// Pointwise orography.
  double orography(double x) const;
};

/// Builds the initial state: surface H_w on [x_w, x_r] moving right with
/// speed sqrt(g (H_w - H_0)), H_0 at rest elsewhere, h = max(H - z, 0) per cell.
SWState build_scenario(const SWScenario& s, double x_w);

/// Largest stable step cfl * min dx / max(|u| + sqrt(g h)) over wet cells.
double cfl_dt(const SWState& state, double g, double cfl = kDefaultCfl);

/// One second-order (SSP-RK2, MUSCL-minmod) well-balanced finite-volume step.
/// Throws NumericalError("unstable step") when dt exceeds cfl_dt.
SWState sw_step(const SWState& state, double g, double dt);

/// Integrates over `duration` with CFL-limited substeps.
SWState sw_advance(const SWState& state, double g, double duration, double cfl = kDefaultCfl);

/// h := max(h, 0); momentum zeroed where h was clamped or is dry.
SWState clamp_nonnegative(const SWState& state);

/// Filter state layout: [h_0..h_{N-1}, hu_0..hu_{N-1}].
VectorXd to_vector(const SWState& state);
SWState from_vector(const VectorXd& v, const SWState& layout);

}  // namespace adatemp::sw
