#pragma once

#include "diskflow/types.hpp"

namespace diskflow::geom {

// A point on the unit circle.  The constructor renormalizes inputs that are
// within tol::boundary of the circle and rejects anything further away.
struct BoundaryPoint {
  Vec2 point;

  explicit BoundaryPoint(const Vec2& p);

  const Vec2& operator*() const { return point; }
};

// Outward unit normal; on the unit circle this is the point itself.
Vec2 unit_normal(const BoundaryPoint& p);

// Clockwise unit tangent Q_{-pi/2} n(p).
Vec2 tangent(const BoundaryPoint& p);

// R_p = I - 2 n(p) (x) n(p).  Symmetric, orthogonal, involutive.
Mat2 reflection_matrix(const BoundaryPoint& p);

// Counterclockwise rotation by `angle` radians.
Mat2 rotation_matrix(double angle);

// Q_{pi/2}
Mat2 quarter_turn();

// A_{v,p} = ((v.n) I + n (x) v)(I - v (x) n / (v.n)).
// Throws GrazingError when |v.n| <= tol::graze * |v|.
Mat2 a_matrix(const Vec2& v, const BoundaryPoint& p);

} // namespace diskflow::geom
