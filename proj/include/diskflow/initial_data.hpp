#pragma once

#include "diskflow/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace diskflow::transport {

// Second derivatives of a scalar of (x,v), stored blockwise.
//   xv(i,j) = d^2 f / dv_i dx_j   (rows follow the v-gradient components)
//   vx(i,j) = d^2 f / dx_i dv_j
struct SecondDerivs {
  Mat2 xx = Mat2::Zero();
  Mat2 xv = Mat2::Zero();
  Mat2 vx = Mat2::Zero();
  Mat2 vv = Mat2::Zero();

  // 4x4 matrix in (x1,x2,v1,v2) ordering.
  Mat4 as_matrix() const;
};

// Evaluatable initial datum f0 with gradients and Hessians.  Missing
// derivative orders (analytic_order < 2) are served by central finite
// differences of value; grad_is_fd()/hess_is_fd() report the provenance.
class InitialData {
 public:
  using ValueFn = std::function<double(const Vec2&, const Vec2&)>;
  using GradFn = std::function<RowVec2(const Vec2&, const Vec2&)>;
  using HessFn = std::function<SecondDerivs(const Vec2&, const Vec2&)>;

  InitialData() = default;
  InitialData(std::string name, ValueFn value);
  InitialData(std::string name, ValueFn value, GradFn gx, GradFn gv);
  InitialData(std::string name, ValueFn value, GradFn gx, GradFn gv, HessFn h);

  const std::string& name() const { return name_; }
  int analytic_order() const { return analytic_order_; }
  bool grad_is_fd() const { return analytic_order_ < 1; }
  bool hess_is_fd() const { return analytic_order_ < 2; }

  double value(const Vec2& x, const Vec2& v) const;
  RowVec2 grad_x(const Vec2& x, const Vec2& v) const;
  RowVec2 grad_v(const Vec2& x, const Vec2& v) const;
  SecondDerivs hess(const Vec2& x, const Vec2& v) const;

 private:
  std::string name_;
  int analytic_order_ = 0;
  ValueFn value_;
  GradFn grad_x_, grad_v_;
  HessFn hess_;
};

// One term coef * x1^px1 * x2^px2 * v1^pv1 * v2^pv2, optionally times
// exp(-|v|^2).  Exponents up to 4 are supported by the spec'd CLI surface;
// the engine itself has no such limit.
struct PolyTerm {
  double coef = 0.0;
  int px1 = 0, px2 = 0, pv1 = 0, pv2 = 0;
  bool gauss = true;
};

// Polynomial-times-Gaussian family with closed-form derivatives to order 2.
InitialData make_polynomial(std::string name, std::vector<PolyTerm> terms);

// Built-in families:
//   radial_gauss        exp(-|v|^2)
//   bump_radial_gauss   (1-|x|^2)^2 exp(-|v|^2)
//   linear_v            v1
//   linear_x            x1
// Throws UnknownFamilyError otherwise.
InitialData builtin(const std::string& name);

// Strips the analytic derivatives from `data`, leaving the finite-difference
// fallback in charge.
InitialData value_only(const InitialData& data);

} // namespace diskflow::transport
