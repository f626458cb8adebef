#include "diskflow/initial_data.hpp"

#include "diskflow/deriv.hpp"

#include <array>
#include <cmath>
#include <utility>

namespace diskflow::transport {

Mat4 SecondDerivs::as_matrix() const {
  Mat4 m;
  m.block<2, 2>(0, 0) = xx;
  m.block<2, 2>(0, 2) = vx;
  m.block<2, 2>(2, 0) = xv;
  m.block<2, 2>(2, 2) = vv;
  return m;
}

InitialData::InitialData(std::string name, ValueFn value)
    : name_(std::move(name)), analytic_order_(0), value_(std::move(value)) {}

InitialData::InitialData(std::string name, ValueFn value, GradFn gx, GradFn gv)
    : name_(std::move(name)),
      analytic_order_(1),
      value_(std::move(value)),
      grad_x_(std::move(gx)),
      grad_v_(std::move(gv)) {}

InitialData::InitialData(std::string name, ValueFn value, GradFn gx, GradFn gv,
                         HessFn h)
    : name_(std::move(name)),
      analytic_order_(2),
      value_(std::move(value)),
      grad_x_(std::move(gx)),
      grad_v_(std::move(gv)),
      hess_(std::move(h)) {}

double InitialData::value(const Vec2& x, const Vec2& v) const {
  if (!value_) throw MissingDerivativeError("InitialData: no value function");
  return value_(x, v);
}

RowVec2 InitialData::grad_x(const Vec2& x, const Vec2& v) const {
  if (grad_x_) return grad_x_(x, v);
  RowVec2 g;
  for (int k = 0; k < 2; ++k) {
    g[k] = deriv::fd_partial(
        [this](const Vec2& xx, const Vec2& vv) { return value(xx, vv); }, x, v,
        k);
  }
  return g;
}

RowVec2 InitialData::grad_v(const Vec2& x, const Vec2& v) const {
  if (grad_v_) return grad_v_(x, v);
  RowVec2 g;
  for (int k = 0; k < 2; ++k) {
    g[k] = deriv::fd_partial(
        [this](const Vec2& xx, const Vec2& vv) { return value(xx, vv); }, x, v,
        k + 2);
  }
  return g;
}

SecondDerivs InitialData::hess(const Vec2& x, const Vec2& v) const {
  if (hess_) return hess_(x, v);
  // FD of the (possibly analytic) first derivatives; symmetrized.
  Mat4 H;
  for (int k = 0; k < 4; ++k) {
    const double c = k < 2 ? x[k] : v[k - 2];
    const double h = deriv::fd_step(c);
    Vec2 xp = x, xm = x, vp = v, vm = v;
    if (k < 2) {
      xp[k] += h;
      xm[k] -= h;
    } else {
      vp[k - 2] += h;
      vm[k - 2] -= h;
    }
    Eigen::Vector4d gp, gm;
    gp << grad_x(xp, vp).transpose(), grad_v(xp, vp).transpose();
    gm << grad_x(xm, vm).transpose(), grad_v(xm, vm).transpose();
    H.col(k) = (gp - gm) / (2.0 * h);
  }
  H = (0.5 * (H + H.transpose())).eval();
  SecondDerivs sd;
  sd.xx = H.block<2, 2>(0, 0);
  sd.vx = H.block<2, 2>(0, 2);
  sd.xv = H.block<2, 2>(2, 0);
  sd.vv = H.block<2, 2>(2, 2);
  return sd;
}

namespace {

double ipow(double u, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= u;
  return r;
}

// u^p (guarding negative powers, which only appear with zero coefficients)
double pw(double u, int p) { return p < 0 ? 0.0 : ipow(u, p); }

// Factor value and first two derivatives of u^p, optionally times exp(-u^2).
struct Factor {
  double f, d1, d2;
};

Factor factor_plain(double u, int p) {
  Factor r;
  r.f = pw(u, p);
  r.d1 = p * pw(u, p - 1);
  r.d2 = static_cast<double>(p) * (p - 1) * pw(u, p - 2);
  return r;
}

Factor factor_gauss(double u, int p) {
  const double e = std::exp(-u * u);
  Factor r;
  r.f = pw(u, p) * e;
  r.d1 = (p * pw(u, p - 1) - 2.0 * pw(u, p + 1)) * e;
  r.d2 = (static_cast<double>(p) * (p - 1) * pw(u, p - 2) -
          (4.0 * p + 2.0) * pw(u, p) + 4.0 * pw(u, p + 2)) *
         e;
  return r;
}

} // namespace

InitialData make_polynomial(std::string name, std::vector<PolyTerm> terms) {
  auto factors = [](const PolyTerm& t, const Vec2& x, const Vec2& v) {
    return std::array<Factor, 4>{
        factor_plain(x[0], t.px1), factor_plain(x[1], t.px2),
        t.gauss ? factor_gauss(v[0], t.pv1) : factor_plain(v[0], t.pv1),
        t.gauss ? factor_gauss(v[1], t.pv2) : factor_plain(v[1], t.pv2)};
  };

  auto value = [terms, factors](const Vec2& x, const Vec2& v) {
    double acc = 0.0;
    for (const auto& t : terms) {
      const auto f = factors(t, x, v);
      acc += t.coef * f[0].f * f[1].f * f[2].f * f[3].f;
    }
    return acc;
  };
  auto gx = [terms, factors](const Vec2& x, const Vec2& v) {
    RowVec2 g = RowVec2::Zero();
    for (const auto& t : terms) {
      const auto f = factors(t, x, v);
      g[0] += t.coef * f[0].d1 * f[1].f * f[2].f * f[3].f;
      g[1] += t.coef * f[0].f * f[1].d1 * f[2].f * f[3].f;
    }
    return g;
  };
  auto gv = [terms, factors](const Vec2& x, const Vec2& v) {
    RowVec2 g = RowVec2::Zero();
    for (const auto& t : terms) {
      const auto f = factors(t, x, v);
      g[0] += t.coef * f[0].f * f[1].f * f[2].d1 * f[3].f;
      g[1] += t.coef * f[0].f * f[1].f * f[2].f * f[3].d1;
    }
    return g;
  };
  auto hess = [terms, factors](const Vec2& x, const Vec2& v) {
    SecondDerivs sd;
    for (const auto& t : terms) {
      const auto f = factors(t, x, v);
      const double c = t.coef;
      sd.xx(0, 0) += c * f[0].d2 * f[1].f * f[2].f * f[3].f;
      sd.xx(0, 1) += c * f[0].d1 * f[1].d1 * f[2].f * f[3].f;
      sd.xx(1, 1) += c * f[0].f * f[1].d2 * f[2].f * f[3].f;
      sd.vv(0, 0) += c * f[0].f * f[1].f * f[2].d2 * f[3].f;
      sd.vv(0, 1) += c * f[0].f * f[1].f * f[2].d1 * f[3].d1;
      sd.vv(1, 1) += c * f[0].f * f[1].f * f[2].f * f[3].d2;
      // xv(i,j) = d/dv_i d/dx_j
      sd.xv(0, 0) += c * f[0].d1 * f[1].f * f[2].d1 * f[3].f;
      sd.xv(0, 1) += c * f[0].f * f[1].d1 * f[2].d1 * f[3].f;
      sd.xv(1, 0) += c * f[0].d1 * f[1].f * f[2].f * f[3].d1;
      sd.xv(1, 1) += c * f[0].f * f[1].d1 * f[2].f * f[3].d1;
    }
    sd.xx(1, 0) = sd.xx(0, 1);
    sd.vv(1, 0) = sd.vv(0, 1);
    sd.vx = sd.xv.transpose();
    return sd;
  };
  return InitialData(std::move(name), value, gx, gv, hess);
}

InitialData builtin(const std::string& name) {
  if (name == "radial_gauss") {
    return make_polynomial(name, {{1.0, 0, 0, 0, 0, true}});
  }
  if (name == "bump_radial_gauss") {
    // (1 - x1^2 - x2^2)^2 exp(-|v|^2)
    return make_polynomial(name, {
                                     {1.0, 0, 0, 0, 0, true},
                                     {-2.0, 2, 0, 0, 0, true},
                                     {-2.0, 0, 2, 0, 0, true},
                                     {1.0, 4, 0, 0, 0, true},
                                     {2.0, 2, 2, 0, 0, true},
                                     {1.0, 0, 4, 0, 0, true},
                                 });
  }
  if (name == "linear_v") {
    return make_polynomial(name, {{1.0, 0, 0, 1, 0, false}});
  }
  if (name == "linear_x") {
    return make_polynomial(name, {{1.0, 1, 0, 0, 0, false}});
  }
  throw UnknownFamilyError("unknown initial-data family '" + name + "'");
}

InitialData value_only(const InitialData& data) {
  return InitialData(data.name() + "_value_only",
                     [data](const Vec2& x, const Vec2& v) {
                       return data.value(x, v);
                     });
}

} // namespace diskflow::transport
