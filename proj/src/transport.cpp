#include "diskflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diskflow::transport {

double evaluate(const InitialData& data, double t, const Vec2& x, const Vec2& v) {
  const flow::FlowState st = flow::flow_map(t, x, v);
  return data.value(st.X0, st.V0);
}

Gradient gradient(const InitialData& data, double t, const Vec2& x,
                  const Vec2& v) {
  const flow::FlowState st = flow::flow_map(t, x, v);
  const deriv::JacobianBundle jb = deriv::flow_jacobian(t, x, v);
  const RowVec2 gx0 = data.grad_x(st.X0, st.V0);
  const RowVec2 gv0 = data.grad_v(st.X0, st.V0);

  Gradient g;
  g.df_dx = gx0 * jb.dX_dx + gv0 * jb.dV_dx;
  g.df_dv = gx0 * jb.dX_dv + gv0 * jb.dV_dv;
  g.df_dt = gx0.dot(jb.dX_dt); // = -grad_x f0 . V(0)
  return g;
}

double pde_residual(const InitialData& data, double t, const Vec2& x,
                    const Vec2& v, double h) {
  if (x.norm() >= 1.0 - 2.0 * h * v.norm()) {
    throw std::invalid_argument("pde_residual: x too close to the boundary "
                                "for the requested stencil");
  }
  const double ft = (evaluate(data, t + h, x, v) - evaluate(data, t - h, x, v)) /
                    (2.0 * h);
  RowVec2 fx;
  for (int k = 0; k < 2; ++k) {
    Vec2 xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    fx[k] = (evaluate(data, t, xp, v) - evaluate(data, t, xm, v)) / (2.0 * h);
  }
  return std::abs(ft + fx.dot(v));
}

double bc_residual(const InitialData& data, double t,
                   const geom::BoundaryPoint& p, const Vec2& v) {
  const Vec2 rv = geom::reflection_matrix(p) * v;
  return std::abs(evaluate(data, t, p.point, v) -
                  evaluate(data, t, p.point, rv));
}

double JumpReport::max_gap() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, std::abs(e.measured_gap));
  return m;
}

JumpReport jump_demo(const InitialData& data, const compat::GammaMinusPoint& p,
                     const std::vector<Vec2>& directions,
                     double chord_fraction) {
  const Vec2 xb = p.x.point;
  const Vec2& v = p.v;
  const Vec2 n = xb; // outward normal at the bounce point

  // forward chord from x_b along v stays inside the disk
  const double chord = -2.0 * xb.dot(v) / v.squaredNorm();
  const double t = chord_fraction * chord;
  const Vec2 x = xb + t * v;

  JumpReport rep;
  rep.t = t;
  rep.x = x;
  rep.v = v;

  std::vector<Vec2> dirs = directions;
  if (dirs.empty()) {
    // orthonormal pair with both components off the tangential tie, where a
    // perturbation would fall on the bounce branch from both sides
    const Vec2 tau(-n.y(), n.x());
    dirs.push_back(((n + tau) / std::sqrt(2.0)).eval());
    dirs.push_back(((n - tau) / std::sqrt(2.0)).eval());
  }

  const Mat2 R = geom::reflection_matrix(p.x);
  const Mat2 A = geom::a_matrix(v, p.x);
  const Vec2 X0 = xb;
  const Vec2 rv = R * v;
  const RowVec2 gx_v = data.grad_x(X0, v);
  const RowVec2 gv_v = data.grad_v(X0, v);
  const RowVec2 gx_r = data.grad_x(X0, rv);
  const RowVec2 gv_r = data.grad_v(X0, rv);

  // one-sided derivative values on the two sides of the bounce
  const RowVec2 no_bounce = -t * gx_v + gv_v;
  const RowVec2 bounce = -t * gx_r * R + gv_r * (R + 2.0 * t * A);

  // C1 defect mapped into the same frame as the gap (see check_c1)
  const RowVec2 cv_defect = gx_v - gx_r * R + 2.0 * gv_r * A;
  const RowVec2 compv_defect = gv_v - gv_r * R;

  for (Vec2 dir : dirs) {
    dir.normalize();
    // v-perturbations with r.n > 0 increase t_b (no bounce before time 0)
    if (dir.dot(n) < 0.0) dir = -dir;

    // base value of the branch the direction points into (they differ when
    // the datum violates the reflection condition)
    auto one_sided = [&](const Vec2& r) {
      const double h = deriv::fd_step(v.norm()) * 4.0;
      const double f0 =
          r.dot(n) > 0.0 ? data.value(X0, v) : data.value(X0, rv);
      const double f1 = evaluate(data, t, x, v + h * r);
      const double f2 = evaluate(data, t, x, v + 2.0 * h * r);
      return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    };

    JumpEntry e;
    e.direction = dir;
    // D(+dir) + D(-dir) = [no_bounce - bounce] . dir
    e.measured_gap = one_sided(dir) + one_sided(-dir);
    e.predicted_gap = (no_bounce - bounce).dot(dir);
    e.c1_contraction = (-t * cv_defect + compv_defect).dot(dir);
    rep.entries.push_back(e);
  }
  return rep;
}

namespace {

double envelope(int order, double t, const Vec2& v, double vn_b) {
  const double speed = v.norm();
  const double bracket = 1.0 + speed;
  if (order == 1) {
    return speed / (vn_b * vn_b) * bracket * bracket * (1.0 + speed * t);
  }
  const double vn2 = vn_b * vn_b;
  const double growth = 1.0 + speed * t;
  return speed * speed / (vn2 * vn2) * std::pow(bracket, 4) * growth * growth;
}

// largest derivative magnitude of f at (t,x,v) at the requested order
double measured_magnitude(const InitialData& data, int order, double t,
                          const Vec2& x, const Vec2& v) {
  if (order == 1) {
    const Gradient g = gradient(data, t, x, v);
    double m = std::abs(g.df_dt);
    m = std::max(m, g.df_dx.cwiseAbs().maxCoeff());
    m = std::max(m, g.df_dv.cwiseAbs().maxCoeff());
    return m;
  }
  // order 2: central FD of the analytic gradient in (t,x,v)
  double m = 0.0;
  auto pack = [&](double tt, const Vec2& xx, const Vec2& vv) {
    const Gradient g = gradient(data, tt, xx, vv);
    Eigen::Matrix<double, 5, 1> out;
    out << g.df_dt, g.df_dx.transpose(), g.df_dv.transpose();
    return out;
  };
  for (int k = 0; k < 5; ++k) {
    const double c = k == 0 ? t : (k <= 2 ? x[k - 1] : v[k - 3]);
    const double h = deriv::fd_step(c);
    double tp = t, tm = t;
    Vec2 xp = x, xm = x, vp = v, vm = v;
    if (k == 0) {
      tp += h;
      tm -= h;
    } else if (k <= 2) {
      xp[k - 1] += h;
      xm[k - 1] -= h;
    } else {
      vp[k - 3] += h;
      vm[k - 3] -= h;
    }
    const auto d = ((pack(tp, xp, vp) - pack(tm, xm, vm)) / (2.0 * h)).eval();
    m = std::max(m, d.cwiseAbs().maxCoeff());
  }
  return m;
}

} // namespace

bool BoundReport::finite() const {
  return std::isfinite(fitted_constant) && std::isfinite(max_measured);
}

bool BoundReport::stable() const {
  const double lo = std::min(fitted_first_half, fitted_second_half);
  const double hi = std::max(fitted_first_half, fitted_second_half);
  if (hi == 0.0) return true;
  return lo > 0.0 && hi / lo <= 2.0;
}

BoundReport bound_monitor(const InitialData& data,
                          const std::vector<BoundSample>& samples,
                          const std::vector<double>& t_values, int order) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("bound_monitor: order must be 1 or 2");
  }
  BoundReport rep;
  rep.order = order;
  const std::size_t half = samples.size() / 2;

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    for (double t : t_values) {
      double ratio = 0.0;
      try {
        const double vn_b = -flow::exit_point(s.x, s.v).point.dot(s.v);
        const double env = envelope(order, t, s.v, vn_b);
        const double mag = measured_magnitude(data, order, t, s.x, s.v);
        ratio = mag / env;
        if (ratio > rep.fitted_constant) {
          rep.fitted_constant = ratio;
          rep.max_measured = mag;
          rep.envelope_at_worst = env;
          rep.worst = s;
          rep.worst_t = t;
        }
        ++rep.used;
      } catch (const NotInOpenCellError&) {
        ++rep.skipped;
        continue;
      } catch (const DegenerateAngleError&) {
        ++rep.skipped;
        continue;
      } catch (const GrazingError&) {
        ++rep.skipped;
        continue;
      } catch (const std::invalid_argument&) {
        ++rep.skipped; // FD stencil left the disk
        continue;
      }
      auto& bucket = i < half ? rep.fitted_first_half : rep.fitted_second_half;
      bucket = std::max(bucket, ratio);
    }
  }
  return rep;
}

std::vector<BoundSample> sample_phase_points(std::size_t count, double speed_lo,
                                             double speed_hi, std::uint64_t seed,
                                             double margin) {
  std::vector<BoundSample> out;
  out.reserve(count);
  SplitMix64 rng(seed);
  while (out.size() < count) {
    const double r = std::sqrt(rng.uniform());
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 x(r * std::cos(phi), r * std::sin(phi));
    const double alpha = rng.uniform(0.0, 2.0 * M_PI);
    const double speed = rng.uniform(speed_lo, speed_hi);
    const Vec2 v = speed * Vec2(std::cos(alpha), std::sin(alpha));
    try {
      const Vec2 nb = flow::exit_point(x, v).point;
      if (std::abs(v.dot(nb)) < margin * speed) continue;
    } catch (const GrazingError&) {
      continue;
    } catch (const std::invalid_argument&) {
      continue;
    }
    out.push_back({x, v});
  }
  return out;
}

} // namespace diskflow::transport
