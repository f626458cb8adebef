#include "diskflow/compat.hpp"

#include <cmath>

namespace diskflow::compat {

namespace {

constexpr double norm_floor = 1e-30;

double rel(double defect, double scale) { return defect / (scale + norm_floor); }

void require_nongrazing(const Vec2& n, const Vec2& v, const char* who) {
  if (std::abs(v.dot(n)) <= tol::graze * v.norm()) {
    throw GrazingError(std::string(who) + ": v.n vanishes (gamma_0)");
  }
}

// (Qw)(x)(Qw) / (w.n) -- the symmetric rank-1 form appearing in the
// symmetrized conditions.
Mat2 q_outer(const Vec2& w, const Vec2& n) {
  const Vec2 qw(-w.y(), w.x());
  return outer(qw, qw) / w.dot(n);
}

// Stack of two row-vector products into a 2x2 (row i = g * M_i).
Mat2 row_stack(const RowVec2& g, const Mat2& m1, const Mat2& m2) {
  Mat2 s;
  s.row(0) = g * m1;
  s.row(1) = g * m2;
  return s;
}

double max_norm(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

GammaMinusPoint::GammaMinusPoint(const geom::BoundaryPoint& p, const Vec2& vel)
    : x(p), v(vel) {
  const double vn = vel.dot(p.point);
  const double speed = vel.norm();
  if (std::abs(vn) <= tol::graze * speed) {
    throw GrazingError("GammaMinusPoint: grazing velocity");
  }
  if (vn > 0.0) {
    // gamma_+ input: fold onto the incoming representative (x, R_x v)
    v = geom::reflection_matrix(p) * vel;
  }
}

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::C1: return "C1";
    case Condition::C2_PARALLEL_X: return "C2_PARALLEL_X";
    case Condition::C2_PARALLEL_V: return "C2_PARALLEL_V";
    case Condition::C2_MIXED: return "C2_MIXED";
    case Condition::C2_XX: return "C2_XX";
    case Condition::C2_NECESSARY: return "C2_NECESSARY";
  }
  return "?";
}

std::pair<Mat2, Mat2> grad_R_columns(const Vec2& n1, const Vec2& v) {
  require_nongrazing(n1, v, "grad_R_columns");
  const double d = v.dot(n1);
  const double v1 = v.x(), v2 = v.y(), a = n1.x(), b = n1.y();
  const double w = b * b - a * a;
  Mat2 r1, r2;
  r1 << -4.0 * v2 * a * b, 4.0 * v1 * a * b,
        -2.0 * v2 * w, 2.0 * v1 * w;
  r2 << -2.0 * v2 * w, 2.0 * v1 * w,
        4.0 * v2 * a * b, -4.0 * v1 * a * b;
  return {r1 / d, r2 / d};
}

std::pair<Mat2, Mat2> grad_v_neg2A_columns(const Vec2& n1, const Vec2& v) {
  require_nongrazing(n1, v, "grad_v_neg2A_columns");
  const double d = v.dot(n1);
  const double d2 = d * d;
  const double v1 = v.x(), v2 = v.y(), a = n1.x(), b = n1.y();
  Mat2 c1, c2;
  c1(0, 0) = -2.0 * v2 * v2 * a / d2;
  c1(0, 1) = -2.0 * b - 2.0 * v1 * v1 * a * a * b / d2 +
             4.0 * v1 * v2 * a * a * a / d2 + 2.0 * v2 * v2 * a * a * b / d2;
  c1(1, 0) = -2.0 * v2 * v2 * b / d2;
  c1(1, 1) = 2.0 * a - 2.0 * v1 * v1 * a * b * b / d2 +
             4.0 * v1 * v2 * a * a * b / d2 + 2.0 * v2 * v2 * a * b * b / d2;

  c2(0, 0) = 2.0 * b + 2.0 * v1 * v1 * a * a * b / d2 +
             4.0 * v1 * v2 * a * b * b / d2 - 2.0 * v2 * v2 * a * a * b / d2;
  c2(0, 1) = -2.0 * v1 * v1 * a / d2;
  c2(1, 0) = -2.0 * a - 2.0 * v2 * v2 * a * b * b / d2 +
             4.0 * v1 * v2 * b * b * b / d2 + 2.0 * v1 * v1 * a * b * b / d2;
  c2(1, 1) = -2.0 * v1 * v1 * b / d2;
  return {c1, c2};
}

std::pair<Mat2, Mat2> grad_x_neg2A_columns(const Vec2& n1, const Vec2& v) {
  require_nongrazing(n1, v, "grad_x_neg2A_columns");
  const double d = v.dot(n1);
  const double d3 = d * d * d;
  const double v1 = v.x(), v2 = v.y(), a = n1.x(), b = n1.y();
  const double a3 = a * a * a, b3 = b * b * b;
  const double aab = a * a * b, abb = a * b * b;
  Mat2 c1, c2;
  c1(0, 0) = 4.0 * v1 * v1 * v2 * v2 * a3 +
             2.0 * v1 * v2 * v2 * v2 * (3.0 * aab - b3) +
             2.0 * v2 * v2 * v2 * v2 * (3.0 * abb + a3);
  c1(0, 1) = -4.0 * v1 * v1 * v1 * v2 * a3 -
             2.0 * v1 * v1 * v2 * v2 * (3.0 * aab - b3) -
             2.0 * v1 * v2 * v2 * v2 * (3.0 * abb + a3);
  c1(1, 0) = 4.0 * v2 * v2 * v2 * v2 * b3 +
             2.0 * v1 * v2 * v2 * v2 * (3.0 * abb - a3) +
             2.0 * v1 * v1 * v2 * v2 * (3.0 * aab + b3);
  c1(1, 1) = -4.0 * v1 * v2 * v2 * v2 * b3 -
             2.0 * v1 * v1 * v2 * v2 * (3.0 * abb - a3) -
             2.0 * v1 * v1 * v1 * v2 * (3.0 * aab + b3);

  c2(0, 0) = -4.0 * v1 * v1 * v1 * v2 * a3 -
             2.0 * v1 * v2 * v2 * v2 * (3.0 * abb + a3) -
             2.0 * v1 * v1 * v2 * v2 * (3.0 * aab - b3);
  c2(0, 1) = 4.0 * v1 * v1 * v1 * v1 * a3 +
             2.0 * v1 * v1 * v2 * v2 * (3.0 * abb + a3) +
             2.0 * v1 * v1 * v1 * v2 * (3.0 * aab - b3);
  c2(1, 0) = -4.0 * v1 * v2 * v2 * v2 * b3 -
             2.0 * v1 * v1 * v1 * v2 * (3.0 * aab + b3) -
             2.0 * v1 * v1 * v2 * v2 * (3.0 * abb - a3);
  c2(1, 1) = 4.0 * v1 * v1 * v2 * v2 * b3 +
             2.0 * v1 * v1 * v1 * v1 * (3.0 * aab + b3) +
             2.0 * v1 * v1 * v1 * v2 * (3.0 * abb - a3);
  return {c1 / d3, c2 / d3};
}

JKMatrices jk_matrices(const GammaMinusPoint& p) {
  const double x1 = p.x.point.x(), x2 = p.x.point.y();
  const double v1 = p.v.x(), v2 = p.v.y();
  const double d = p.v.dot(p.x.point);
  const double d3 = d * d * d;
  const double w = x2 * x2 - x1 * x1;
  const double x13 = x1 * x1 * x1, x23 = x2 * x2 * x2;
  const double xxy = x1 * x1 * x2, xyy = x1 * x2 * x2;

  JKMatrices jk;
  jk.J1 << -4.0 * v2 * x1 * x2, 4.0 * v1 * x1 * x2,
           -2.0 * v2 * w, 2.0 * v1 * w;
  jk.J1 /= d;
  jk.J2 << -2.0 * v2 * w, 2.0 * v1 * w,
           4.0 * v2 * x1 * x2, -4.0 * v1 * x1 * x2;
  jk.J2 /= d;

  jk.K1(0, 0) = 4.0 * v1 * v1 * v2 * v2 * x13 +
                2.0 * v1 * v2 * v2 * v2 * (3.0 * xxy - x23) +
                2.0 * v2 * v2 * v2 * v2 * (3.0 * xyy + x13);
  jk.K1(0, 1) = -4.0 * v1 * v1 * v1 * v2 * x13 -
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xxy - x23) -
                2.0 * v1 * v2 * v2 * v2 * (3.0 * xyy + x13);
  jk.K1(1, 0) = 4.0 * v2 * v2 * v2 * v2 * x23 +
                2.0 * v1 * v2 * v2 * v2 * (3.0 * xyy - x13) +
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xxy + x23);
  jk.K1(1, 1) = -4.0 * v1 * v2 * v2 * v2 * x23 -
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xyy - x13) -
                2.0 * v1 * v1 * v1 * v2 * (3.0 * xxy + x23);
  jk.K1 /= d3;

  jk.K2(0, 0) = -4.0 * v1 * v1 * v1 * v2 * x13 -
                2.0 * v1 * v2 * v2 * v2 * (3.0 * xyy + x13) -
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xxy - x23);
  jk.K2(0, 1) = 4.0 * v1 * v1 * v1 * v1 * x13 +
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xyy + x13) +
                2.0 * v1 * v1 * v1 * v2 * (3.0 * xxy - x23);
  jk.K2(1, 0) = -4.0 * v1 * v2 * v2 * v2 * x23 -
                2.0 * v1 * v1 * v1 * v2 * (3.0 * xxy + x23) -
                2.0 * v1 * v1 * v2 * v2 * (3.0 * xyy - x13);
  jk.K2(1, 1) = 4.0 * v1 * v1 * v2 * v2 * x23 +
                2.0 * v1 * v1 * v1 * v1 * (3.0 * xxy + x23) +
                2.0 * v1 * v1 * v1 * v2 * (3.0 * xyy - x13);
  jk.K2 /= d3;
  return jk;
}

CompatReport check_c1(const transport::InitialData& data,
                      const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * v;

  const RowVec2 gx_v = data.grad_x(x, v);
  const RowVec2 gv_v = data.grad_v(x, v);
  const RowVec2 gx_r = data.grad_x(x, rv);
  const RowVec2 gv_r = data.grad_v(x, rv);

  const RowVec2 lhs = (gx_v + gv_v * q_outer(v, x)) * R;
  const RowVec2 rhs = gx_r + gv_r * q_outer(rv, x);

  CompatReport rep;
  rep.condition = Condition::C1;
  rep.x = x;
  rep.v = v;
  rep.lhs.row(0) = lhs;
  rep.rhs.row(0) = rhs;
  const RowVec2 defect = lhs - rhs;
  rep.residual = defect.cwiseAbs().maxCoeff();
  const double scale =
      std::max(lhs.cwiseAbs().maxCoeff(), rhs.cwiseAbs().maxCoeff());
  rep.relative_residual = rel(rep.residual, scale);

  // unsymmetrized form and the exact bridge between the two
  const Mat2 A = geom::a_matrix(v, p.x);
  const RowVec2 cv_defect = gx_v - gx_r * R + 2.0 * gv_r * A;
  const RowVec2 compv_defect = gv_v - gv_r * R;
  rep.alt_residual = cv_defect.cwiseAbs().maxCoeff();
  const RowVec2 bridge = defect * R - cv_defect - compv_defect * R * A;
  rep.form_agreement = rel(bridge.cwiseAbs().maxCoeff(), scale);
  return rep;
}

std::pair<CompatReport, CompatReport> check_c2_parallel(
    const transport::InitialData& data, const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * p.v;
  const Vec2 q_rv(-rv.y(), rv.x());
  const double speed = rv.norm();

  auto make = [&](Condition c, const RowVec2& g) {
    CompatReport rep;
    rep.condition = c;
    rep.x = x;
    rep.v = p.v;
    rep.lhs.row(0) = g;
    rep.rhs.row(0) = rv.transpose();
    // normalized perpendicular component; the unit floor keeps vanishing
    // gradients (parallel by convention) from amplifying roundoff
    const double perp = std::abs(g.dot(q_rv));
    rep.residual = perp / std::max(g.norm() * speed, 1.0);
    rep.relative_residual = rep.residual;
    rep.alt_residual = perp / (g.norm() * speed + norm_floor);
    return rep;
  };
  return {make(Condition::C2_PARALLEL_X, data.grad_x(x, rv)),
          make(Condition::C2_PARALLEL_V, data.grad_v(x, rv))};
}

BlockDefects block_defects(const transport::InitialData& data,
                           const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * v;
  const Mat2 A = geom::a_matrix(v, p.x);

  const transport::SecondDerivs Hv = data.hess(x, v);
  const transport::SecondDerivs Hr = data.hess(x, rv);
  const RowVec2 gx_r = data.grad_x(x, rv);
  const RowVec2 gv_r = data.grad_v(x, rv);

  const auto [dR1, dR2] = grad_R_columns(x, v);
  const auto [dvA1, dvA2] = grad_v_neg2A_columns(x, v);
  const auto [dxA1, dxA2] = grad_x_neg2A_columns(x, v);

  const Mat2 dR_stack = row_stack(gv_r, dR1, dR2);
  const Mat2 w_stack = row_stack(gv_r, dvA1, dvA2);
  const Mat2 k_stack = row_stack(gv_r, dxA1, dxA2);
  const Mat2 dRx_stack = row_stack(gx_r, dR1, dR2);

  BlockDefects d;
  d.D1 = Hv.xv - R * Hr.xv * R + 2.0 * R * Hr.vv * A - dR_stack;
  d.D2 = Hv.xx - R * Hr.xx * R + 2.0 * R * Hr.vx * A +
         2.0 * A.transpose() * Hr.xv * R -
         4.0 * A.transpose() * Hr.vv * A - dRx_stack - k_stack;
  d.D3 = Hv.vv - R * Hr.vv * R;
  d.D4 = Hv.vx - R * Hr.vx * R + 2.0 * A.transpose() * Hr.vv * R - w_stack;
  return d;
}

CompatReport check_c2_mixed(const transport::InitialData& data,
                            const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * v;
  const Mat2 A = geom::a_matrix(v, p.x);
  const Mat2 B = q_outer(v, x);
  const Mat2 Bp = q_outer(rv, x);

  const transport::SecondDerivs Hv = data.hess(x, v);
  const transport::SecondDerivs Hr = data.hess(x, rv);
  const RowVec2 gv_r = data.grad_v(x, rv);
  const JKMatrices jk = jk_matrices(p);
  const Mat2 j_stack = row_stack(gv_r, jk.J1, jk.J2);

  const Mat2 lhs = R * (Hv.xv + Hv.vv * B) * R;
  const Mat2 rhs = Hr.xv + Hr.vv * Bp + R * j_stack * R;

  CompatReport rep;
  rep.condition = Condition::C2_MIXED;
  rep.x = x;
  rep.v = v;
  rep.lhs = lhs;
  rep.rhs = rhs;
  const Mat2 defect = lhs - rhs;
  rep.residual = max_norm(defect);
  const double scale = std::max(max_norm(lhs), max_norm(rhs));
  rep.relative_residual = rel(rep.residual, scale);

  const BlockDefects d = block_defects(data, p);
  rep.alt_residual = max_norm(d.D1);
  const Mat2 bridge = defect - (R * d.D1 * R + R * d.D3 * B * R);
  rep.form_agreement = rel(max_norm(bridge), scale);
  return rep;
}

CompatReport check_c2_xx(const transport::InitialData& data,
                         const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * v;
  const Mat2 A = geom::a_matrix(v, p.x);
  const Mat2 B = q_outer(v, x);
  const Mat2 Bp = q_outer(rv, x);

  const transport::SecondDerivs Hv = data.hess(x, v);
  const transport::SecondDerivs Hr = data.hess(x, rv);
  const RowVec2 gx_r = data.grad_x(x, rv);
  const RowVec2 gv_r = data.grad_v(x, rv);

  const JKMatrices jk = jk_matrices(p);
  const auto [dvA1, dvA2] = grad_v_neg2A_columns(x, v);
  const Mat2 j_stack = row_stack(gv_r, jk.J1, jk.J2);
  const Mat2 k_stack = row_stack(gv_r, jk.K1, jk.K2);
  const Mat2 w_stack = row_stack(gv_r, dvA1, dvA2);

  const Mat2 lhs = R * (Hv.xx + Hv.vx * B + B * Hv.xv) * R;
  // The printed K matrices already carry the -2 of the A-column derivative,
  // so the K correction enters with coefficient +1; the bridge below and the
  // one-sided FD jump pin this down.
  const Mat2 rhs = Hr.xx + Hr.vx * Bp + Bp * Hr.xv + R * w_stack * R * A * R +
                   A * j_stack * R + R * k_stack * R;

  CompatReport rep;
  rep.condition = Condition::C2_XX;
  rep.x = x;
  rep.v = v;
  rep.lhs = lhs;
  rep.rhs = rhs;
  const Mat2 defect = lhs - rhs;
  rep.residual = max_norm(defect);
  const double scale = std::max(max_norm(lhs), max_norm(rhs));
  rep.relative_residual = rel(rep.residual, scale);

  const BlockDefects d = block_defects(data, p);
  rep.alt_residual = max_norm(d.D2);
  const Mat2 dRx_stack = row_stack(gx_r, jk.J1, jk.J2); // grad_R columns at n=x
  const Mat2 bridge =
      defect - (R * d.D2 * R + R * d.D4 * B * R + A * d.D1 * R + R * dRx_stack * R);
  rep.form_agreement = rel(max_norm(bridge), scale);
  return rep;
}

std::pair<double, double> check_c2_necessary(const transport::InitialData& data,
                                             const GammaMinusPoint& p) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const Mat2 R = geom::reflection_matrix(p.x);
  const Vec2 rv = R * v;
  const Mat2 B = q_outer(v, x);
  const Mat2 Bp = q_outer(rv, x);

  const transport::SecondDerivs Hv = data.hess(x, v);
  const transport::SecondDerivs Hr = data.hess(x, rv);

  const double mixed =
      v.dot((Hv.xv + Hv.vv * B) * v) - rv.dot((Hr.xv + Hr.vv * Bp) * rv);
  const double xx = v.dot((Hv.xx + Hv.vx * B + B * Hv.xv) * v) -
                    rv.dot((Hr.xx + Hr.vx * Bp + Bp * Hr.xv) * rv);
  return {std::abs(mixed), std::abs(xx)};
}

double IdentityReport::max_relative() const {
  double m = 0.0;
  for (const auto& e : entries) m = std::max(m, e.relative);
  return m;
}

IdentityReport verify_identities(const GammaMinusPoint& p, FaultInjection fault) {
  const Vec2& x = p.x.point;
  const Vec2& v = p.v;
  const double speed = v.norm();
  const Mat2 R = geom::reflection_matrix(p.x);
  const Mat2 Q = geom::quarter_turn();
  const Vec2 rv = R * v;
  const Mat2 A = geom::a_matrix(v, p.x);
  const Mat2 B = q_outer(v, x);
  const Mat2 Bp = q_outer(rv, x);

  IdentityReport rep;
  auto push = [&rep](const std::string& name, double defect, double scale) {
    rep.entries.push_back({name, defect, rel(defect, scale)});
  };

  {
    const double sign = fault == FaultInjection::flip_ra_sign ? -1.0 : 1.0;
    const Mat2 d = R * A - sign * B;
    push("RA_left", max_norm(d), max_norm(B));
  }
  push("RA_right", max_norm(Mat2(A * R + Bp)), max_norm(Bp));
  {
    const Mat2 lhs = A * A;
    const Mat2 rhs = outer(Q * rv, Q * rv) * outer(Q * v, Q * v) /
                     (v.dot(x) * v.dot(x));
    push("A_squared", max_norm(Mat2(lhs - rhs)),
         std::max(max_norm(lhs), max_norm(rhs)));
  }
  push("A_annihilates_v", (A * v).norm(), max_norm(A) * speed);
  push("QtRQ_equals_minus_R", max_norm(Mat2(Q.transpose() * R * Q + R)), 1.0);

  const auto [dR1, dR2] = grad_R_columns(x, v);
  const auto [dvA1, dvA2] = grad_v_neg2A_columns(x, v);
  const auto [dxA1, dxA2] = grad_x_neg2A_columns(x, v);

  push("grad_R_annihilates_v",
       std::max((dR1 * v).norm(), (dR2 * v).norm()),
       std::max(max_norm(dR1), max_norm(dR2)) * speed);
  push("grad_x_neg2A_annihilates_v",
       std::max((dxA1 * v).norm(), (dxA2 * v).norm()),
       std::max(max_norm(dxA1), max_norm(dxA2)) * speed);
  push("column_swap_symmetry",
       (dxA1.col(1) - dxA2.col(0)).norm(),
       std::max(max_norm(dxA1), max_norm(dxA2)));

  const Vec2 K[4] = {dR1.col(0) - dvA1.col(0), dR1.col(1) - dvA2.col(0),
                     dR2.col(0) - dvA1.col(1), dR2.col(1) - dvA2.col(1)};
  {
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        Mat2 m;
        m.col(0) = K[i];
        m.col(1) = K[j];
        const double det = std::abs(m.determinant());
        worst = std::max(worst, det / (K[i].norm() * K[j].norm() + norm_floor));
      }
    }
    rep.entries.push_back({"K_pair_determinants", worst, worst});
  }
  {
    double worst = 0.0, scale = 0.0;
    for (const auto& k : K) {
      worst = std::max(worst, std::abs(rv.dot(k)));
      scale = std::max(scale, rv.norm() * k.norm());
    }
    push("Rv_annihilates_K", worst, scale);
  }

  const JKMatrices jk = jk_matrices(p);
  {
    double worst = 0.0, scale = 0.0;
    for (const Mat2* m : {&jk.J1, &jk.J2, &jk.K1, &jk.K2}) {
      worst = std::max(worst, (*m * v).norm());
      scale = std::max(scale, max_norm(*m) * speed);
    }
    push("JK_null_space", worst, scale);
  }
  {
    const Mat2 a_rv = geom::a_matrix(rv, p.x);
    const Mat2 d = R * A * R + a_rv;
    push("RAR_equals_minus_A_reflected", max_norm(d), max_norm(a_rv));
  }
  return rep;
}

std::vector<GammaMinusPoint> sample_gamma_minus(std::size_t count,
                                                double speed_lo, double speed_hi,
                                                std::uint64_t seed,
                                                double margin) {
  if (margin <= 0.0 || margin >= 1.0) {
    throw std::invalid_argument("sample_gamma_minus: margin must be in (0,1)");
  }
  if (speed_lo <= 0.0 || speed_hi < speed_lo) {
    throw std::invalid_argument("sample_gamma_minus: bad speed range");
  }
  std::vector<GammaMinusPoint> out;
  out.reserve(count);
  SplitMix64 rng(seed);
  const double psi_max = std::acos(margin) * (1.0 - 1e-9);
  for (std::size_t i = 0; i < count; ++i) {
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const Vec2 n(std::cos(phi), std::sin(phi));
    const double psi = rng.uniform(-psi_max, psi_max);
    const Vec2 dir = geom::rotation_matrix(psi) * (-n);
    const double speed = rng.uniform(speed_lo, speed_hi);
    out.emplace_back(geom::BoundaryPoint(n), speed * dir);
  }
  return out;
}

} // namespace diskflow::compat
