#include "diskflow/geom.hpp"

#include <cmath>

namespace diskflow::geom {

BoundaryPoint::BoundaryPoint(const Vec2& p) : point(p) {
  const double r = p.norm();
  if (std::abs(r - 1.0) > tol::boundary) {
    throw std::invalid_argument("BoundaryPoint: |p| = " + std::to_string(r) +
                                " is not on the unit circle");
  }
  point /= r;
}

Vec2 unit_normal(const BoundaryPoint& p) { return p.point; }

Vec2 tangent(const BoundaryPoint& p) {
  return Vec2(p.point.y(), -p.point.x());
}

Mat2 reflection_matrix(const BoundaryPoint& p) {
  return Mat2::Identity() - 2.0 * outer(p.point, p.point);
}

Mat2 rotation_matrix(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat2 q;
  q << c, -s, s, c;
  return q;
}

Mat2 quarter_turn() {
  Mat2 q;
  q << 0.0, -1.0, 1.0, 0.0;
  return q;
}

Mat2 a_matrix(const Vec2& v, const BoundaryPoint& p) {
  const Vec2 n = p.point;
  const double vn = v.dot(n);
  if (std::abs(vn) <= tol::graze * v.norm()) {
    throw GrazingError("a_matrix: v.n(p) vanishes (gamma_0 neighborhood)");
  }
  const Mat2 left = vn * Mat2::Identity() + outer(n, v);
  const Mat2 right = Mat2::Identity() - outer(v, n) / vn;
  return left * right;
}

} // namespace diskflow::geom
