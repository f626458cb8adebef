#include "doctest.h"
#include "helpers.hpp"

using namespace diskflow;
using testutil::open_cell_time;
using testutil::random_state;

namespace {

double rel_err(const Mat2& analytic, const Mat2& fd) {
  const double scale =
      std::max({testutil::max_abs(analytic), testutil::max_abs(fd), 1.0});
  return testutil::max_abs(Mat2(analytic - fd)) / scale;
}

double rel_err(const RowVec2& analytic, const RowVec2& fd) {
  const double scale =
      std::max({analytic.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1.0});
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

RowVec2 fd_scalar_grad(const std::function<double(const Vec2&, const Vec2&)>& f,
                       const Vec2& x, const Vec2& v, bool wrt_v) {
  RowVec2 g;
  for (int k = 0; k < 2; ++k) {
    g[k] = deriv::fd_partial(f, x, v, wrt_v ? k + 2 : k);
  }
  return g;
}

} // namespace

TEST_CASE("grad_exit worked values at the center") {
  const auto g = deriv::grad_exit(Vec2(0, 0), Vec2(1, 0));
  CHECK((g.dtb_dx - RowVec2(1, 0)).norm() < 1e-14);
  CHECK((g.dtb_dv - RowVec2(-1, 0)).norm() < 1e-14);
  Mat2 expect;
  expect << 0, 0, 0, 1;
  CHECK(testutil::max_abs(Mat2(g.dxb_dx - expect)) < 1e-14);
  CHECK(testutil::max_abs(Mat2(g.dxb_dv + expect)) < 1e-14);
}

TEST_CASE("grad_exit matches finite differences") {
  SplitMix64 rng(11);
  auto tb = [](const Vec2& x, const Vec2& v) { return flow::exit_time(x, v); };
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_state(rng);
    const auto g = deriv::grad_exit(s.x, s.v);
    CHECK(rel_err(g.dtb_dx, fd_scalar_grad(tb, s.x, s.v, false)) <= 1e-6);
    CHECK(rel_err(g.dtb_dv, fd_scalar_grad(tb, s.x, s.v, true)) <= 1e-6);

    Mat2 fd_x, fd_v;
    for (int k = 0; k < 2; ++k) {
      auto comp = [k](const Vec2& x, const Vec2& v) {
        return flow::exit_point(x, v).point[k];
      };
      fd_x.row(k) = fd_scalar_grad(comp, s.x, s.v, false);
      fd_v.row(k) = fd_scalar_grad(comp, s.x, s.v, true);
    }
    CHECK(rel_err(g.dxb_dx, fd_x) <= 1e-6);
    CHECK(rel_err(g.dxb_dv, fd_v) <= 1e-6);
  }
}

TEST_CASE("grad_normal equals the exit-point blocks") {
  const auto [nx, nv] = deriv::grad_normal(Vec2(0, 0), Vec2(1, 0));
  Mat2 expect;
  expect << 0, 0, 0, 1;
  CHECK(testutil::max_abs(Mat2(nx - expect)) < 1e-14);
  CHECK(testutil::max_abs(Mat2(nv + expect)) < 1e-14);

  SplitMix64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_state(rng);
    const auto g = deriv::grad_exit(s.x, s.v);
    const auto [gx, gv] = deriv::grad_normal(s.x, s.v);
    CHECK(testutil::max_abs(Mat2(gx - g.dxb_dx)) == 0.0);
    CHECK(testutil::max_abs(Mat2(gv - g.dxb_dv)) == 0.0);
  }
}

TEST_CASE("grad_theta on the radial tie returns the one-sided value") {
  const auto [gx, gv] = deriv::grad_theta(Vec2(0, 0), Vec2(1, 0));
  CHECK((gx - RowVec2(0, -2)).norm() < 1e-14);
  CHECK((gv - RowVec2(0, 0)).norm() < 1e-14);

  // one-sided FD in the +x2 direction reproduces the -2 slope
  auto theta_of = [](const Vec2& x, const Vec2& v) {
    return flow::bounce_angle(x, v).theta;
  };
  const double h = 1e-5;
  const double slope =
      (theta_of(Vec2(0, h), Vec2(1, 0)) - theta_of(Vec2(0, 0), Vec2(1, 0))) / h;
  CHECK(slope == doctest::Approx(-2.0).epsilon(1e-4));
}

TEST_CASE("grad_theta refuses near-degenerate angles off the tie") {
  // nearly radial chord: theta = pi - O(4e-7), within the degenerate band
  CHECK_THROWS_AS(deriv::grad_theta(Vec2(0, 4e-7), Vec2(1, 0)),
                  DegenerateAngleError);
}

TEST_CASE("grad_theta matches finite differences") {
  SplitMix64 rng(13);
  auto theta_of = [](const Vec2& x, const Vec2& v) {
    return flow::bounce_angle(x, v).theta;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_state(rng);
    const double theta = flow::bounce_angle(s.x, s.v).theta;
    if (theta < 0.1 || theta > 3.0) continue;
    const auto [gx, gv] = deriv::grad_theta(s.x, s.v);
    CHECK(rel_err(gx, fd_scalar_grad(theta_of, s.x, s.v, false)) <= 1e-6);
    CHECK(rel_err(gv, fd_scalar_grad(theta_of, s.x, s.v, true)) <= 1e-6);
  }
}

TEST_CASE("grad_t_l reduces to the exit-time gradients when l = 1") {
  SplitMix64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_state(rng);
    const double t = open_cell_time(s, rng, 1);
    const auto st = flow::flow_map(t, s.x, s.v);
    REQUIRE(st.l == 1);
    const auto [dx, dv] = deriv::grad_t_l(t, s.x, s.v, st);
    const auto g = deriv::grad_exit(s.x, s.v);
    CHECK((dx + g.dtb_dx).norm() <= 1e-12 * (1.0 + dx.norm()));
    CHECK((dv + g.dtb_dv).norm() <= 1e-12 * (1.0 + dv.norm()));
  }
}

TEST_CASE("grad_t_l matches finite differences for multi-bounce states") {
  SplitMix64 rng(15);
  int done = 0;
  for (int i = 0; done < 200 && i < 2000; ++i) {
    const auto s = random_state(rng);
    const long l = 2 + static_cast<long>(rng.uniform() * 9);
    const double t = open_cell_time(s, rng, l);
    const auto st = flow::flow_map(t, s.x, s.v);
    REQUIRE(st.l == l);
    const auto [dx, dv] = deriv::grad_t_l(t, s.x, s.v, st);
    auto tl_of = [t](const Vec2& x, const Vec2& v) {
      return flow::flow_map(t, x, v).t_l;
    };
    CHECK(rel_err(dx, fd_scalar_grad(tl_of, s.x, s.v, false)) <= 1e-5);
    CHECK(rel_err(dv, fd_scalar_grad(tl_of, s.x, s.v, true)) <= 1e-5);
    ++done;
  }
  CHECK(done == 200);
}

TEST_CASE("grad_t_l on the diameter state, smooth directions") {
  const Vec2 x(0, 0), v(1, 0);
  const auto st = flow::flow_map(3.5, x, v);
  REQUIRE(st.l == 2);
  const auto [dx, dv] = deriv::grad_t_l(3.5, x, v, st);
  // theta = pi: the (l-1)cos(theta/2) terms vanish, leaving the exit parts
  CHECK(dx[0] == doctest::Approx(-1.0));
  CHECK(dv[0] == doctest::Approx(3.0));
  auto tl_of = [](const Vec2& xx, const Vec2& vv) {
    return flow::flow_map(3.5, xx, vv).t_l;
  };
  CHECK(deriv::fd_partial(tl_of, x, v, 0) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(deriv::fd_partial(tl_of, x, v, 2) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("flow_jacobian free-streaming bundle") {
  const auto jb = deriv::flow_jacobian(0.25, Vec2(0, 0), Vec2(2, 0));
  CHECK(testutil::max_abs(Mat2(jb.dX_dx - Mat2::Identity())) == 0.0);
  CHECK(testutil::max_abs(Mat2(jb.dX_dv + 0.25 * Mat2::Identity())) == 0.0);
  CHECK(testutil::max_abs(jb.dV_dx) == 0.0);
  CHECK(testutil::max_abs(Mat2(jb.dV_dv - Mat2::Identity())) == 0.0);
  CHECK((jb.dX_dt + Vec2(2, 0)).norm() == 0.0);
}

TEST_CASE("flow_jacobian matches the finite-difference oracle") {
  SplitMix64 rng(16);
  double worst = 0.0;
  for (int i = 0; i < 400; ++i) {
    const auto s = random_state(rng);
    const double t = open_cell_time(s, rng, static_cast<long>(rng.uniform() * 5));
    const auto jb = deriv::flow_jacobian(t, s.x, s.v);
    const auto fd = deriv::fd_flow_jacobian(t, s.x, s.v);
    worst = std::max({worst, rel_err(jb.dX_dx, fd.dX_dx),
                      rel_err(jb.dX_dv, fd.dX_dv), rel_err(jb.dV_dx, fd.dV_dx),
                      rel_err(jb.dV_dv, fd.dV_dv)});
    CHECK((jb.dX_dt - fd.dX_dt).norm() <= 1e-5 * (1.0 + fd.dX_dt.norm()));
    CHECK(jb.dV_dt.norm() == 0.0);
  }
  CHECK(worst <= 1e-5);
  MESSAGE("worst relative block error vs FD: ", worst);
}

TEST_CASE("flow Jacobian has unit determinant") {
  SplitMix64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const auto s = random_state(rng);
    const double t = open_cell_time(s, rng, static_cast<long>(rng.uniform() * 5));
    const auto jb = deriv::flow_jacobian(t, s.x, s.v);
    Mat4 full;
    full.block<2, 2>(0, 0) = jb.dX_dx;
    full.block<2, 2>(0, 2) = jb.dX_dv;
    full.block<2, 2>(2, 0) = jb.dV_dx;
    full.block<2, 2>(2, 2) = jb.dV_dv;
    CHECK(std::abs(full.determinant() - 1.0) <= 1e-8);
  }
}

TEST_CASE("flow_jacobian refuses bounce-adjacent times") {
  const double tb = flow::exit_time(Vec2(0, 0), Vec2(1, 0));
  CHECK_THROWS_AS(deriv::flow_jacobian(tb + 1e-12, Vec2(0, 0), Vec2(1, 0)),
                  NotInOpenCellError);
  CHECK_THROWS_AS(deriv::flow_jacobian(tb - 1e-12, Vec2(0, 0), Vec2(1, 0)),
                  NotInOpenCellError);
}

TEST_CASE("one-sided limit bundles") {
  // worked configuration from the A-matrix example
  const Vec2 x1(0, 1);
  const Vec2 v(1, -1);
  const double chord = -2.0 * x1.dot(v) / v.squaredNorm(); // forward chord
  const Vec2 x = x1 + 0.5 * chord * v;
  const auto osj = deriv::one_sided_limit_jacobians(x, v);
  const double t = osj.t_b;

  Mat2 a_expect;
  a_expect << -1, -1, 1, 1;
  CHECK(testutil::max_abs(Mat2(osj.after.dV_dx + 2.0 * a_expect)) <= 1e-12);

  const Mat2 r = geom::reflection_matrix(geom::BoundaryPoint(x1));
  CHECK(testutil::max_abs(Mat2(osj.after.dX_dv + t * r)) <= 1e-12);
  CHECK(testutil::max_abs(Mat2(osj.after.dX_dx - r)) <= 1e-12);
  CHECK(testutil::max_abs(
            Mat2(osj.after.dV_dv - r - 2.0 * t * a_expect)) <= 1e-12);
  CHECK(testutil::max_abs(Mat2(osj.before.dX_dx - Mat2::Identity())) == 0.0);
  CHECK(testutil::max_abs(Mat2(osj.before.dX_dv + t * Mat2::Identity())) == 0.0);

  CHECK((osj.after.dV_dx * v).norm() <= 1e-12);
  CHECK(testutil::max_abs(Mat2(r * r - Mat2::Identity())) <= 1e-14);
}

TEST_CASE("flow_jacobian converges to the one-sided bundles") {
  const double delta = 1e-6;
  for (int i = 0; i < 30; ++i) {
    const auto p = compat::sample_gamma_minus(1, 0.5, 2.0, 1000 + i)[0];
    const double chord = -2.0 * p.x.point.dot(p.v) / p.v.squaredNorm();
    const Vec2 x = p.x.point + 0.45 * chord * p.v;
    const auto osj = deriv::one_sided_limit_jacobians(x, p.v);
    const double tb = osj.t_b;

    const auto before = deriv::flow_jacobian(tb - delta, x, p.v);
    const auto after = deriv::flow_jacobian(tb + delta, x, p.v);

    auto close = [&](const Mat2& got, const Mat2& want) {
      const double scale = std::max(1.0, testutil::max_abs(want));
      CHECK(testutil::max_abs(Mat2(got - want)) <= 1e-4 * scale);
    };
    close(before.dX_dx, osj.before.dX_dx);
    close(before.dX_dv, osj.before.dX_dv);
    close(before.dV_dx, osj.before.dV_dx);
    close(before.dV_dv, osj.before.dV_dv);
    close(after.dX_dx, osj.after.dX_dx);
    close(after.dX_dv, osj.after.dX_dv);
    close(after.dV_dx, osj.after.dV_dx);
    close(after.dV_dv, osj.after.dV_dv);
  }
}

TEST_CASE("flow_hessian_fd vanishes for free streaming") {
  const auto hb = deriv::flow_hessian_fd(0.25, Vec2(0, 0), Vec2(2, 0));
  CHECK(hb.X1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(hb.V2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("flow_hessian_fd symmetry and value-level cross-check") {
  SplitMix64 rng(19);
  for (int i = 0; i < 40; ++i) {
    const auto s = random_state(rng, 0.15);
    const double t = open_cell_time(s, rng, 2);
    const auto hb = deriv::flow_hessian_fd(t, s.x, s.v);
    CHECK(hb.symmetry_defect <=
          1e-4 * std::max(1.0, hb.V1.cwiseAbs().maxCoeff()));

    // d^2 X_1 / dx1 dv1 via second differences of the flow itself
    const double h = 1e-4;
    auto x1_of = [&](double a, double b) {
      Vec2 x = s.x, v = s.v;
      x[0] += a;
      v[0] += b;
      return flow::flow_map(t, x, v).X0[0];
    };
    const double mixed = (x1_of(h, h) - x1_of(h, -h) - x1_of(-h, h) +
                          x1_of(-h, -h)) /
                         (4.0 * h * h);
    const double scale = std::max(1.0, std::abs(mixed));
    CHECK(std::abs(hb.X1(0, 2) - mixed) <= 2e-3 * scale);
  }
}

TEST_CASE("first-derivative magnitudes respect the singular envelopes") {
  SplitMix64 rng(20);
  double fitted[4] = {0, 0, 0, 0};
  for (int i = 0; i < 2000; ++i) {
    const auto s = random_state(rng);
    const double t = open_cell_time(s, rng, static_cast<long>(rng.uniform() * 6));
    const auto jb = deriv::flow_jacobian(t, s.x, s.v);
    const double speed = s.v.norm();
    const double vn = std::abs(flow::exit_point(s.x, s.v).point.dot(s.v));
    const double growth = 1.0 + speed * t;
    const double env[4] = {speed / vn * growth, growth / speed,
                           std::pow(speed, 3) / (vn * vn) * growth,
                           speed / vn * growth};
    const Mat2* blocks[4] = {&jb.dX_dx, &jb.dX_dv, &jb.dV_dx, &jb.dV_dv};
    for (int b = 0; b < 4; ++b) {
      fitted[b] = std::max(fitted[b], testutil::max_abs(*blocks[b]) / env[b]);
    }
  }
  for (int b = 0; b < 4; ++b) {
    CHECK(std::isfinite(fitted[b]));
    CHECK(fitted[b] > 0.0);
    MESSAGE("fitted envelope constant, block ", b, ": ", fitted[b]);
  }
}

TEST_CASE("second-derivative magnitudes respect the singular envelopes") {
  SplitMix64 rng(21);
  double fitted = 0.0;
  for (int i = 0; i < 60; ++i) {
    const auto s = random_state(rng, 0.1);
    const double t = open_cell_time(s, rng, 3);
    const auto hb = deriv::flow_hessian_fd(t, s.x, s.v);
    const double speed = s.v.norm();
    const double vn = std::abs(flow::exit_point(s.x, s.v).point.dot(s.v));
    const double growth2 = 1.0 + speed * t * speed * t;
    // coarsest of the second-derivative envelopes
    const double env = std::pow(speed, 5) / std::pow(vn, 4) * growth2;
    for (const Mat4* m : {&hb.X1, &hb.X2, &hb.V1, &hb.V2}) {
      fitted = std::max(fitted, m->cwiseAbs().maxCoeff() / env);
    }
  }
  CHECK(std::isfinite(fitted));
  MESSAGE("fitted second-derivative envelope constant: ", fitted);
}
