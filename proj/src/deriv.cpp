#include "diskflow/deriv.hpp"

#include <cmath>
#include <limits>

namespace diskflow::deriv {

namespace {

const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());

// Shared geometry of the first backward bounce.
struct FirstBounce {
  Vec2 n;       // n(x^1) = x^1
  double vn;    // v.n(x^1) < 0
  double t_b;
  double theta;
  int sigma;
  double s;     // sin(theta/2)
  double c;     // cos(theta/2)
};

FirstBounce first_bounce(const Vec2& x, const Vec2& v) {
  FirstBounce fb;
  fb.t_b = flow::exit_time(x, v);
  fb.n = flow::exit_point(x, v).point;
  fb.vn = v.dot(fb.n);
  const flow::BounceAngle ba = flow::bounce_angle(x, v);
  fb.theta = ba.theta;
  fb.sigma = ba.sigma;
  fb.s = std::sin(0.5 * ba.theta);
  fb.c = std::cos(0.5 * ba.theta);
  return fb;
}

void require_open_cell(double t, const flow::FlowState& st) {
  const double margin = tol::bounce_margin(t);
  if (st.l == 0) {
    if (st.t_b - t < margin) {
      throw NotInOpenCellError("t within bounce margin of t_b");
    }
    return;
  }
  const double chord = 2.0 * std::sin(0.5 * st.theta) / st.V0.norm();
  if (st.t_l < margin || chord - st.t_l < margin) {
    throw NotInOpenCellError("t within bounce margin of a bounce time");
  }
}

// grad theta as a column; sigma and the radial tie handled as in grad_theta.
std::pair<Vec2, Vec2> theta_gradients(const Vec2& x, const Vec2& v,
                                      const FirstBounce& fb) {
  const double speed = v.norm();
  if (fb.theta > M_PI - tol::theta_degenerate) {
    const geom::BoundaryPoint bp{fb.n};
    const double tau_v = geom::tangent(bp).dot(v);
    if (std::abs(tau_v) > tol::radial_tie * speed) {
      throw DegenerateAngleError("grad_theta: theta within " +
                                 std::to_string(tol::theta_degenerate) +
                                 " of pi");
    }
    // exact radial chord: return the sigma=+1 one-sided value
  }
  const Mat2 q = geom::rotation_matrix(-0.5 * fb.sigma * fb.theta);
  const Vec2 g = q * fb.n;
  const Vec2 gx = -(2.0 / fb.s) * g;
  const Vec2 gv = 2.0 * (fb.t_b / fb.s - 1.0 / speed) * g;
  return {gx, gv};
}

} // namespace

ExitGradients grad_exit(const Vec2& x, const Vec2& v) {
  const FirstBounce fb = first_bounce(x, v);
  ExitGradients g;
  g.dtb_dx = fb.n.transpose() / fb.vn;
  g.dtb_dv = -fb.t_b * g.dtb_dx;
  g.dxb_dx = Mat2::Identity() - outer(v, fb.n) / fb.vn;
  g.dxb_dv = -fb.t_b * g.dxb_dx;
  return g;
}

std::pair<Mat2, Mat2> grad_normal(const Vec2& x, const Vec2& v) {
  const ExitGradients g = grad_exit(x, v);
  return {g.dxb_dx, g.dxb_dv};
}

std::pair<RowVec2, RowVec2> grad_theta(const Vec2& x, const Vec2& v) {
  const FirstBounce fb = first_bounce(x, v);
  const auto [gx, gv] = theta_gradients(x, v, fb);
  return {gx.transpose(), gv.transpose()};
}

std::pair<RowVec2, RowVec2> grad_t_l(double t, const Vec2& x, const Vec2& v,
                                     const flow::FlowState& state) {
  if (state.l < 1) {
    throw std::invalid_argument("grad_t_l: requires at least one bounce");
  }
  require_open_cell(t, state);
  const FirstBounce fb = first_bounce(x, v);
  const auto [gx, gv] = theta_gradients(x, v, fb);
  const double speed = v.norm();
  const double lm1 = static_cast<double>(state.l - 1);
  const RowVec2 n_row = fb.n.transpose();
  RowVec2 dx = n_row / (speed * fb.s) - (lm1 * fb.c / speed) * gx.transpose();
  RowVec2 dv = -fb.t_b * n_row / (speed * fb.s) +
               (2.0 * lm1 * fb.s / std::pow(speed, 3)) * v.transpose() -
               (lm1 * fb.c / speed) * gv.transpose();
  return {dx, dv};
}

JacobianBundle flow_jacobian(double t, const Vec2& x, const Vec2& v) {
  const flow::FlowState st = flow::flow_map(t, x, v);
  require_open_cell(t, st);

  JacobianBundle jb;
  if (st.l == 0) {
    jb.dX_dx = Mat2::Identity();
    jb.dX_dv = -t * Mat2::Identity();
    jb.dV_dx = Mat2::Zero();
    jb.dV_dv = Mat2::Identity();
    jb.dX_dt = -v;
    return jb;
  }

  const FirstBounce fb = first_bounce(x, v);
  const auto [gx, gv] = theta_gradients(x, v, fb);
  const double speed = v.norm();
  const double l = static_cast<double>(st.l);
  const double a = fb.sigma * fb.theta;

  const Mat2 Qlm1 = geom::rotation_matrix((l - 1.0) * a);
  const Mat2 Ql = geom::rotation_matrix(l * a);
  const Mat2 Qmid = geom::rotation_matrix(fb.sigma * (l * fb.theta - 0.5 * M_PI));
  const Mat2 Qcan =
      geom::rotation_matrix(fb.sigma * ((l - 0.5) * fb.theta - M_PI));

  const Mat2 P = Mat2::Identity() - outer(v, fb.n) / fb.vn;
  const Mat2 vn_outer = outer(v, fb.n);
  const double lm1_s = (l - 1.0) * fb.s; // = |v| (t - t_b - t_l) / 2

  jb.dX_dx = Qlm1 * P + st.t_l * l * Qmid * outer(v, gx) -
             Ql * vn_outer / (speed * fb.s) - lm1_s * Qcan * outer(fb.n, gx);
  jb.dX_dv = -fb.t_b * Qlm1 * P - st.t_l * Ql + st.t_l * l * Qmid * outer(v, gv) +
             fb.t_b * Ql * vn_outer / (speed * fb.s) -
             (2.0 * (l - 1.0) * fb.s / std::pow(speed, 3)) * Ql * outer(v, v) -
             lm1_s * Qcan * outer(fb.n, gv);
  jb.dV_dx = -l * Qmid * outer(v, gx);
  jb.dV_dv = Ql - l * Qmid * outer(v, gv);
  jb.dX_dt = -st.V0;
  jb.dV_dt = Vec2::Zero();
  return jb;
}

OneSidedJacobians one_sided_limit_jacobians(const Vec2& x, const Vec2& v) {
  OneSidedJacobians out;
  out.t_b = flow::exit_time(x, v);
  const double t = out.t_b;
  const geom::BoundaryPoint x1 = flow::exit_point(x, v);
  const Mat2 R = geom::reflection_matrix(x1);
  const Mat2 A = geom::a_matrix(v, x1);

  out.before.dX_dx = Mat2::Identity();
  out.before.dX_dv = -t * Mat2::Identity();
  out.before.dV_dx = Mat2::Zero();
  out.before.dV_dv = Mat2::Identity();
  out.before.dX_dt = -v;

  out.after.dX_dx = R;
  out.after.dX_dv = -t * R;
  out.after.dV_dx = -2.0 * A;
  out.after.dV_dv = R + 2.0 * t * A;
  out.after.dX_dt = -(R * v);
  return out;
}

double fd_step(double coordinate, double scale) {
  return cbrt_eps * std::max(std::abs(coordinate), 1.0) * scale;
}

namespace {

template <class F>
auto central_diff(const F& f, const Vec2& x, const Vec2& v, int k, double h) {
  Vec2 xp = x, xm = x, vp = v, vm = v;
  if (k < 2) {
    xp[k] += h;
    xm[k] -= h;
  } else {
    vp[k - 2] += h;
    vm[k - 2] -= h;
  }
  return ((f(xp, vp) - f(xm, vm)) / (2.0 * h)).eval();
}

double coord(const Vec2& x, const Vec2& v, int k) {
  return k < 2 ? x[k] : v[k - 2];
}

} // namespace

JacobianBundle fd_flow_jacobian(double t, const Vec2& x, const Vec2& v,
                                double h) {
  JacobianBundle jb;
  auto X0 = [t](const Vec2& xx, const Vec2& vv) {
    return flow::flow_map(t, xx, vv).X0;
  };
  auto V0 = [t](const Vec2& xx, const Vec2& vv) {
    return flow::flow_map(t, xx, vv).V0;
  };
  for (int k = 0; k < 4; ++k) {
    const double hk = h > 0.0 ? h : fd_step(coord(x, v, k));
    const Vec2 dX = central_diff(X0, x, v, k, hk);
    const Vec2 dV = central_diff(V0, x, v, k, hk);
    if (k < 2) {
      jb.dX_dx.col(k) = dX;
      jb.dV_dx.col(k) = dV;
    } else {
      jb.dX_dv.col(k - 2) = dX;
      jb.dV_dv.col(k - 2) = dV;
    }
  }
  const double ht = h > 0.0 ? h : fd_step(t);
  jb.dX_dt = (flow::flow_map(t + ht, x, v).X0 - flow::flow_map(t - ht, x, v).X0) /
             (2.0 * ht);
  jb.dV_dt = (flow::flow_map(t + ht, x, v).V0 - flow::flow_map(t - ht, x, v).V0) /
             (2.0 * ht);
  return jb;
}

double fd_partial(const std::function<double(const Vec2&, const Vec2&)>& f,
                  const Vec2& x, const Vec2& v, int k, double h) {
  const double hk = h > 0.0 ? h : fd_step(coord(x, v, k));
  Vec2 xp = x, xm = x, vp = v, vm = v;
  if (k < 2) {
    xp[k] += hk;
    xm[k] -= hk;
  } else {
    vp[k - 2] += hk;
    vm[k - 2] -= hk;
  }
  return (f(xp, vp) - f(xm, vm)) / (2.0 * hk);
}

HessianBundle flow_hessian_fd(double t, const Vec2& x, const Vec2& v, double h) {
  // wider separation from the bounce-time locus than flow_jacobian itself
  const flow::FlowState st = flow::flow_map(t, x, v);
  HessianBundle hb;
  if (st.l == 0 && st.t_b - t > 2.0 * tol::bounce_margin(t)) {
    hb.step = h > 0.0 ? h : cbrt_eps;
    return hb; // affine map, all second derivatives vanish
  }

  Mat4 Hs[4];
  for (auto& m : Hs) m.setZero();

  for (int k = 0; k < 4; ++k) {
    const double hk = h > 0.0 ? h : fd_step(coord(x, v, k));
    if (k == 0) hb.step = hk;
    Vec2 xp = x, xm = x, vp = v, vm = v;
    if (k < 2) {
      xp[k] += hk;
      xm[k] -= hk;
    } else {
      vp[k - 2] += hk;
      vm[k - 2] -= hk;
    }
    const JacobianBundle jp = flow_jacobian(t, xp, vp);
    const JacobianBundle jm = flow_jacobian(t, xm, vm);
    auto pack = [](const JacobianBundle& j) {
      Eigen::Matrix<double, 4, 4> m;
      m.block<2, 2>(0, 0) = j.dX_dx;
      m.block<2, 2>(0, 2) = j.dX_dv;
      m.block<2, 2>(2, 0) = j.dV_dx;
      m.block<2, 2>(2, 2) = j.dV_dv;
      return m;
    };
    const Eigen::Matrix<double, 4, 4> d = (pack(jp) - pack(jm)) / (2.0 * hk);
    // d(row i, col j) = d/dk [ d out_i / d coord_j ]
    for (int i = 0; i < 4; ++i) {
      Hs[i].col(k) = d.row(i).transpose();
    }
  }

  double defect = 0.0;
  for (auto& m : Hs) {
    defect = std::max(defect, (m - m.transpose()).cwiseAbs().maxCoeff());
    m = (0.5 * (m + m.transpose())).eval();
  }
  hb.symmetry_defect = defect;
  hb.X1 = Hs[0];
  hb.X2 = Hs[1];
  hb.V1 = Hs[2];
  hb.V2 = Hs[3];
  return hb;
}

} // namespace diskflow::deriv
