#pragma once

#include "diskflow/compat.hpp"
#include "diskflow/deriv.hpp"
#include "diskflow/flow.hpp"
#include "diskflow/initial_data.hpp"
#include "diskflow/types.hpp"

#include <vector>

namespace diskflow::transport {

// Mild solution f(t,x,v) = f0(X(0;t,x,v), V(0;t,x,v)).
double evaluate(const InitialData& data, double t, const Vec2& x, const Vec2& v);

struct Gradient {
  double df_dt = 0.0;
  RowVec2 df_dx = RowVec2::Zero();
  RowVec2 df_dv = RowVec2::Zero();
};

// Chain rule through the analytic flow Jacobian; valid in open cells.
Gradient gradient(const InitialData& data, double t, const Vec2& x,
                  const Vec2& v);

// |FD_t f + v . FD_x f| with central differences of evaluate at step h.
double pde_residual(const InitialData& data, double t, const Vec2& x,
                    const Vec2& v, double h = 1e-4);

// |f(t,p,v) - f(t,p,R_p v)|.
double bc_residual(const InitialData& data, double t,
                   const geom::BoundaryPoint& p, const Vec2& v);

// --- one-sided derivative jump at a bounce ---------------------------------

struct JumpEntry {
  Vec2 direction;        // unit v-perturbation direction (no-bounce side)
  double measured_gap;   // one-sided FD along +dir plus one-sided FD along -dir
  double predicted_gap;  // analytic one-sided difference along dir
  double c1_contraction; // C1-condition defect contracted along the direction
};

struct JumpReport {
  double t = 0.0;            // flight time placing X(0) on the boundary
  Vec2 x = Vec2::Zero();     // interior starting point
  Vec2 v = Vec2::Zero();
  std::vector<JumpEntry> entries;

  double max_gap() const;
};

// Builds the t = t_b configuration from a gamma_- point (x = x_b + t v with t
// a fraction of the forward chord) and measures the one-sided directional
// v-derivatives of f across the bounce.  Passing no directions selects an
// orthonormal pair split by the bounce normal.
JumpReport jump_demo(const InitialData& data, const compat::GammaMinusPoint& p,
                     const std::vector<Vec2>& directions = {},
                     double chord_fraction = 0.5);

// --- regularity-bound monitoring --------------------------------------------

struct BoundSample {
  Vec2 x, v;
};

struct BoundReport {
  int order = 1;
  double fitted_constant = 0.0;  // max measured/envelope ratio
  double max_measured = 0.0;
  double envelope_at_worst = 0.0;
  BoundSample worst;
  double worst_t = 0.0;
  double fitted_first_half = 0.0;
  double fitted_second_half = 0.0;
  std::size_t used = 0;    // samples inside open cells
  std::size_t skipped = 0; // samples rejected by cell/angle guards

  bool finite() const;
  // fitted constants of the two disjoint halves agree within a factor of 2
  bool stable() const;
};

// Measured derivative magnitudes of f against the regularity envelopes
//   order 1:  |v| / (v.n(x_b))^2 * (1+|v|)^2 * (1 + |v| t)
//   order 2:  |v|^2 / (v.n(x_b))^4 * (1+|v|)^4 * (1 + |v| t)^2
// The fitted constant is reported, never asserted against a fixed value.
BoundReport bound_monitor(const InitialData& data,
                          const std::vector<BoundSample>& samples,
                          const std::vector<double>& t_values, int order);

// Deterministic interior phase-point sampling with a grazing margin
// |v.n(x_b)| >= margin |v|.
std::vector<BoundSample> sample_phase_points(std::size_t count, double speed_lo,
                                             double speed_hi, std::uint64_t seed,
                                             double margin = 0.05);

} // namespace diskflow::transport
