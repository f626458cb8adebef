#include "diskflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diskflow::flow {

namespace {

void check_inside(const Vec2& x) {
  if (x.norm() > 1.0 + tol::boundary) {
    throw std::invalid_argument("phase point outside the closed unit disk");
  }
}

// Discriminant of |x - s v|^2 = 1 in s; its square root equals |v.n(x_b)|.
double exit_discriminant(const Vec2& x, const Vec2& v) {
  const double xv = x.dot(v);
  return xv * xv - v.squaredNorm() * (x.squaredNorm() - 1.0);
}

} // namespace

double exit_time(const Vec2& x, const Vec2& v) {
  check_inside(x);
  const double vv = v.squaredNorm();
  if (vv == 0.0) {
    throw ZeroVelocityError("exit_time: v = 0 (t_b is infinite)");
  }
  const double disc = std::max(exit_discriminant(x, v), 0.0);
  const double root = std::sqrt(disc);
  if (root <= tol::graze * std::sqrt(vv)) {
    throw GrazingError("exit_time: tangential backward ray (gamma_0)");
  }
  const double xv = x.dot(v);
  // Larger quadratic root, evaluated on the cancellation-free branch.
  double s;
  if (xv >= 0.0) {
    s = (xv + root) / vv;
  } else {
    s = (1.0 - x.squaredNorm()) / (root - xv);
  }
  return std::max(s, 0.0);
}

geom::BoundaryPoint exit_point(const Vec2& x, const Vec2& v) {
  const double tb = exit_time(x, v);
  Vec2 p = x - tb * v;
  p /= p.norm();
  return geom::BoundaryPoint(p);
}

BounceAngle bounce_angle(const Vec2& x, const Vec2& v) {
  const geom::BoundaryPoint xb = exit_point(x, v);
  const Vec2 n = xb.point;
  const double speed = v.norm();
  const double s = std::clamp(-n.dot(v) / speed, 0.0, 1.0);
  const double theta = 2.0 * std::asin(s);
  const double tau_v = geom::tangent(xb).dot(v);
  const int sigma = (tau_v >= -tol::radial_tie * speed) ? +1 : -1;
  return {theta, sigma};
}

std::vector<BounceEvent> bounce_sequence(double t, const Vec2& x, const Vec2& v,
                                         long max_bounces) {
  std::vector<BounceEvent> events;
  if (v.squaredNorm() == 0.0) return events;

  Vec2 xk = x;
  Vec2 vk = v;
  double clock = t;
  for (long k = 1;; ++k) {
    const double tb = exit_time(xk, vk);
    const double tk = clock - tb;
    if (tk < 0.0) break;
    if (k > max_bounces) {
      throw BounceCapExceeded("bounce_sequence: more than " +
                                  std::to_string(max_bounces) + " bounces",
                              std::move(events));
    }
    Vec2 p = xk - tb * vk;
    const geom::BoundaryPoint bp(p / p.norm());
    vk = geom::reflection_matrix(bp) * vk;
    xk = bp.point;
    clock = tk;
    events.push_back({k, tk, xk, vk});
  }
  return events;
}

FlowState flow_map(double t, const Vec2& x, const Vec2& v, long max_bounces) {
  if (t < 0.0) throw std::invalid_argument("flow_map: t must be nonnegative");
  check_inside(x);

  FlowState st;
  if (v.squaredNorm() == 0.0) {
    st.X0 = x;
    st.V0 = v;
    st.theta = M_PI;
    st.t_b = std::numeric_limits<double>::infinity();
    st.t_l = t;
    return st;
  }

  const double tb = exit_time(x, v);
  st.t_b = tb;
  if (t < tb) {
    st.X0 = x - t * v;
    st.V0 = v;
    st.t_l = t;
    const BounceAngle ba = bounce_angle(x, v);
    st.theta = ba.theta;
    st.sigma = ba.sigma;
    return st;
  }

  const BounceAngle ba = bounce_angle(x, v);
  st.theta = ba.theta;
  st.sigma = ba.sigma;
  const double speed = v.norm();
  const double half_sin = std::sin(0.5 * ba.theta);
  const double chord = 2.0 * half_sin / speed;

  const Vec2 x1 = exit_point(x, v).point;
  const double t1 = t - tb;
  long l = 1 + static_cast<long>(std::floor(t1 / chord));
  double tl = t1 - static_cast<double>(l - 1) * chord;
  if (tl < 0.0) { // floor/rounding edge
    tl += chord;
    l -= 1;
  }
  if (l > max_bounces) {
    throw BounceCapExceeded("flow_map: more than " + std::to_string(max_bounces) +
                                " bounces",
                            {});
  }
  st.l = l;
  st.t_l = tl;

  const double a = ba.sigma * ba.theta;
  st.V0 = geom::rotation_matrix(static_cast<double>(l) * a) * v;
  const Vec2 xl = geom::rotation_matrix(static_cast<double>(l - 1) * a) * x1;
  st.X0 = xl - tl * st.V0;

  // Iterative reflection product as an independent route; disagreement means
  // the closed form and the bounce geometry drifted apart.
  Vec2 xk = x;
  Vec2 vk = v;
  double clock = t;
  for (long k = 1; k <= l; ++k) {
    const double tbk = exit_time(xk, vk);
    Vec2 p = xk - tbk * vk;
    const geom::BoundaryPoint bp(p / p.norm());
    clock -= tbk;
    vk = geom::reflection_matrix(bp) * vk;
    xk = bp.point;
    if (st.events.size() < events_cap) {
      st.events.push_back({k, clock, xk, vk});
    } else {
      st.events_truncated = true;
    }
  }
  const double tol_iter =
      (1e-10 + 2e-13 * static_cast<double>(l)) * std::max(1.0, speed);
  if ((vk - st.V0).norm() > tol_iter * std::max(1.0, speed) ||
      (xk - xl).norm() > tol_iter) {
    throw std::logic_error("flow_map: closed-form rotation disagrees with the "
                           "iterative reflection product");
  }
  return st;
}

std::pair<Vec2, Vec2> flow_at(double s, double t, const Vec2& x, const Vec2& v,
                              long max_bounces) {
  if (s < 0.0 || s > t) {
    throw std::invalid_argument("flow_at: require 0 <= s <= t");
  }
  if (v.squaredNorm() == 0.0) return {x, v};

  const double tb = exit_time(x, v);
  const double t1 = t - tb;
  if (s > t1) return {x - (t - s) * v, v};

  const BounceAngle ba = bounce_angle(x, v);
  const double speed = v.norm();
  const double chord = 2.0 * std::sin(0.5 * ba.theta) / speed;
  long k = 1 + static_cast<long>(std::floor((t1 - s) / chord));
  double tk = t1 - static_cast<double>(k - 1) * chord;
  if (tk < s) { // rounding edge: s fell just below cell k
    tk += chord;
    k -= 1;
  }
  if (k > max_bounces) {
    throw BounceCapExceeded("flow_at: more than " + std::to_string(max_bounces) +
                                " bounces",
                            {});
  }
  const double a = ba.sigma * ba.theta;
  const Vec2 x1 = exit_point(x, v).point;
  const Vec2 xk = geom::rotation_matrix(static_cast<double>(k - 1) * a) * x1;
  const Vec2 vk = geom::rotation_matrix(static_cast<double>(k) * a) * v;
  return {xk - (tk - s) * vk, vk};
}

} // namespace diskflow::flow
