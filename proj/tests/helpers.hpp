#pragma once

#include "diskflow/compat.hpp"
#include "diskflow/deriv.hpp"
#include "diskflow/flow.hpp"
#include "diskflow/geom.hpp"
#include "diskflow/transport.hpp"

#include <cmath>

namespace testutil {

using namespace diskflow;

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

inline double rel_defect(const Mat2& lhs, const Mat2& rhs) {
  const double scale = std::max(max_abs(lhs), max_abs(rhs));
  return max_abs(Mat2(lhs - rhs)) / (scale + 1e-30);
}

// Interior phase point with a margin away from gamma_0, drawn from rng.
inline flow::PhasePoint random_state(SplitMix64& rng, double margin = 0.05,
                                     double speed_lo = 0.3,
                                     double speed_hi = 3.0) {
  for (;;) {
    const double r = std::sqrt(rng.uniform()) * 0.999;
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 x(r * std::cos(phi), r * std::sin(phi));
    const double alpha = rng.uniform(0.0, 2.0 * M_PI);
    const double speed = rng.uniform(speed_lo, speed_hi);
    const Vec2 v = speed * Vec2(std::cos(alpha), std::sin(alpha));
    try {
      const Vec2 nb = flow::exit_point(x, v).point;
      if (std::abs(v.dot(nb)) < margin * speed) continue;
      const flow::BounceAngle ba = flow::bounce_angle(x, v);
      if (ba.theta > M_PI - 1e-4) continue; // keep clear of the radial tie
    } catch (const GrazingError&) {
      continue;
    }
    return {x, v};
  }
}

// A time inside an open cell of the state (t strictly between bounce times),
// reachable with l bounces when requested.
inline double open_cell_time(const flow::PhasePoint& s, SplitMix64& rng,
                             long bounces) {
  const double tb = flow::exit_time(s.x, s.v);
  const flow::BounceAngle ba = flow::bounce_angle(s.x, s.v);
  const double chord = 2.0 * std::sin(0.5 * ba.theta) / s.v.norm();
  if (bounces == 0) return tb * rng.uniform(0.2, 0.8);
  return tb + (bounces - 1) * chord + chord * rng.uniform(0.2, 0.8);
}

// Generic polynomial datum exercising every derivative block.
inline transport::InitialData generic_poly() {
  return transport::make_polynomial(
      "generic_poly", {
                          {0.7, 1, 1, 1, 0, true},
                          {-0.4, 2, 0, 0, 1, true},
                          {0.9, 0, 1, 2, 1, true},
                          {0.3, 1, 0, 0, 0, true},
                          {-0.6, 0, 0, 1, 2, true},
                          {0.25, 2, 1, 1, 1, true},
                      });
}

} // namespace testutil
