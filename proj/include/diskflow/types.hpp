#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace diskflow {

using Vec2 = Eigen::Vector2d;
using RowVec2 = Eigen::RowVector2d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

// Tolerances shared across the library.  All are dimensionless except
// bounce_margin which scales with the elapsed time.
namespace tol {
inline constexpr double boundary = 1e-12;        // |x|-1 tolerance for boundary membership
inline constexpr double graze = 1e-10;           // |v.n| / |v| threshold excluding gamma_0
inline constexpr double theta_degenerate = 1e-6; // distance from theta = pi where grad_theta refuses
inline constexpr double radial_tie = 1e-14;      // |tau.v| / |v| treated as an exact radial chord

inline double bounce_margin(double t) { return 1e-7 * (1.0 + t); }
} // namespace tol

inline constexpr long max_bounces_default = 1'000'000;

struct GrazingError : std::runtime_error {
  explicit GrazingError(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroVelocityError : std::runtime_error {
  explicit ZeroVelocityError(const std::string& what) : std::runtime_error(what) {}
};

struct NotInOpenCellError : std::runtime_error {
  explicit NotInOpenCellError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateAngleError : std::runtime_error {
  explicit DegenerateAngleError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingDerivativeError : std::runtime_error {
  explicit MissingDerivativeError(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownFamilyError : std::runtime_error {
  explicit UnknownFamilyError(const std::string& what) : std::runtime_error(what) {}
};

inline Mat2 outer(const Vec2& a, const Vec2& b) { return a * b.transpose(); }

// Deterministic, platform-independent generator for sampling campaigns.
// std::uniform_real_distribution is implementation-defined, so we roll the
// uniform ourselves on top of splitmix64.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

} // namespace diskflow
