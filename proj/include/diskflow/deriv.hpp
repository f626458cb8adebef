#pragma once

#include "diskflow/flow.hpp"
#include "diskflow/geom.hpp"
#include "diskflow/types.hpp"

#include <functional>
#include <utility>

namespace diskflow::deriv {

// First derivatives of the backward flow at time 0.  Gradients of scalars are
// rows; dX_dx etc. are 2x2 blocks in the (x1,x2,v1,v2) coordinates.
struct JacobianBundle {
  Mat2 dX_dx = Mat2::Identity();
  Mat2 dX_dv = Mat2::Zero();
  Mat2 dV_dx = Mat2::Zero();
  Mat2 dV_dv = Mat2::Identity();
  Vec2 dX_dt = Vec2::Zero();
  Vec2 dV_dt = Vec2::Zero();
};

// 4x4 second-derivative matrices of X1, X2, V1, V2 in (x1,x2,v1,v2).
struct HessianBundle {
  Mat4 X1 = Mat4::Zero();
  Mat4 X2 = Mat4::Zero();
  Mat4 V1 = Mat4::Zero();
  Mat4 V2 = Mat4::Zero();
  double step = 0.0;
  double symmetry_defect = 0.0; // max |H - H^T| entry before symmetrization
};

struct ExitGradients {
  RowVec2 dtb_dx;
  RowVec2 dtb_dv;
  Mat2 dxb_dx;
  Mat2 dxb_dv;
};

// grad t_b = n(x_b)/(v.n(x_b)), grad_v t_b = -t_b grad_x t_b,
// grad_x x_b = I - v (x) n / (v.n), grad_v x_b = -t_b grad_x x_b.
ExitGradients grad_exit(const Vec2& x, const Vec2& v);

// Gradients of n(x_b(x,v)); in the unit disk these coincide with the x_b
// blocks of grad_exit.
std::pair<Mat2, Mat2> grad_normal(const Vec2& x, const Vec2& v);

// Gradients of the bounce angle.  Throws DegenerateAngleError within
// tol::theta_degenerate of theta = pi, except exactly on the radial tie where
// the sigma=+1 one-sided value is returned.
std::pair<RowVec2, RowVec2> grad_theta(const Vec2& x, const Vec2& v);

// Gradients of the last bounce time t_l.  Requires l >= 1 and t away from
// bounce instants.
std::pair<RowVec2, RowVec2> grad_t_l(double t, const Vec2& x, const Vec2& v,
                                     const flow::FlowState& state);

// Analytic Jacobian of (X(0), V(0)) in an open cell between bounce times.
JacobianBundle flow_jacobian(double t, const Vec2& x, const Vec2& v);

struct OneSidedJacobians {
  JacobianBundle before; // s -> 0+ limit (free streaming side)
  JacobianBundle after;  // s -> 0- limit (post-bounce side)
  double t_b = 0.0;
};

// Limit Jacobians when the first backward bounce lands exactly at time 0,
// i.e. t = t_b(x,v).
OneSidedJacobians one_sided_limit_jacobians(const Vec2& x, const Vec2& v);

// Central differences of the analytic Jacobian; one FD layer on top of one
// analytic layer.  h <= 0 selects the default cbrt(eps) scaling per
// coordinate, widened checks apply (margin 2h from bounce times).
HessianBundle flow_hessian_fd(double t, const Vec2& x, const Vec2& v,
                              double h = 0.0);

// --- finite-difference utilities -----------------------------------------

// Default central-difference step for a coordinate of the given magnitude.
double fd_step(double coordinate, double scale = 1.0);

// Central-difference Jacobian of flow_map itself (independent of
// flow_jacobian's code path; used by verification sweeps).
JacobianBundle fd_flow_jacobian(double t, const Vec2& x, const Vec2& v,
                                double h = 0.0);

// Central difference of a scalar function along coordinate k of (x,v).
double fd_partial(const std::function<double(const Vec2&, const Vec2&)>& f,
                  const Vec2& x, const Vec2& v, int k, double h = 0.0);

} // namespace diskflow::deriv
