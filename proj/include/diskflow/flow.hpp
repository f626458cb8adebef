#pragma once

#include "diskflow/geom.hpp"
#include "diskflow/types.hpp"

#include <utility>
#include <vector>

namespace diskflow::flow {

struct PhasePoint {
  Vec2 x;
  Vec2 v;
};

// One backward bounce.  t_k is the clock time at which the k-th bounce
// happens (bounce times decrease with k), v_k is the post-bounce backward
// velocity R_{x_k} v_{k-1}.
struct BounceEvent {
  long k = 0;
  double t_k = 0.0;
  Vec2 x_k = Vec2::Zero();
  Vec2 v_k = Vec2::Zero();
};

struct BounceCapExceeded : std::runtime_error {
  std::vector<BounceEvent> partial;

  BounceCapExceeded(const std::string& what, std::vector<BounceEvent> events)
      : std::runtime_error(what), partial(std::move(events)) {}
};

// Result of tracing the backward characteristic down to time 0.
//
//   X0, V0   position / velocity at time 0
//   l        number of bounces on [0, t]
//   theta    central angle between consecutive bounce points, in (0, pi]
//   sigma    circulation sense: +1 counterclockwise, -1 clockwise
//   t_b      backward exit time from the starting point
//   t_l      clock time of the last bounce (t_l = t when l = 0)
//   events   bounce list, truncated at events_cap entries
struct FlowState {
  Vec2 X0 = Vec2::Zero();
  Vec2 V0 = Vec2::Zero();
  long l = 0;
  double theta = 0.0;
  int sigma = 1;
  double t_b = 0.0;
  double t_l = 0.0;
  std::vector<BounceEvent> events;
  bool events_truncated = false;
};

inline constexpr std::size_t events_cap = 1024;

// Backward exit time: the positive root of |x - s v| = 1.  For boundary
// starting points this is 0 on gamma_- and the full chord on gamma_+.
// Throws ZeroVelocityError when v = 0 and GrazingError near gamma_0.
double exit_time(const Vec2& x, const Vec2& v);

// x - exit_time(x,v) * v, renormalized onto the circle.
geom::BoundaryPoint exit_point(const Vec2& x, const Vec2& v);

struct BounceAngle {
  double theta;  // in (0, pi]
  int sigma;     // +1 CCW, -1 CW; +1 on the radial-chord tie
};

// sin(theta/2) = -n(x_b).v / |v|; sigma from the tangential sign of v at the
// first bounce point (tie -> +1).
BounceAngle bounce_angle(const Vec2& x, const Vec2& v);

// Iterative backward bounce list on [0, t]; stops once the next bounce time
// would be negative.  Throws BounceCapExceeded (with partial list) beyond
// max_bounces.
std::vector<BounceEvent> bounce_sequence(double t, const Vec2& x, const Vec2& v,
                                         long max_bounces = max_bounces_default);

// Full backward flow to time 0.  Uses the closed-form rotation representation
// and cross-checks it against the iterative reflection product.
FlowState flow_map(double t, const Vec2& x, const Vec2& v,
                   long max_bounces = max_bounces_default);

// Position/velocity at intermediate time s in [0, t].  At a bounce instant the
// post-bounce (backward) velocity is reported.
std::pair<Vec2, Vec2> flow_at(double s, double t, const Vec2& x, const Vec2& v,
                              long max_bounces = max_bounces_default);

} // namespace diskflow::flow
