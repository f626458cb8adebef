#pragma once

#include "diskflow/geom.hpp"
#include "diskflow/initial_data.hpp"
#include "diskflow/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace diskflow::compat {

// Boundary phase point with strictly incoming velocity (v.n(x) < 0).
struct GammaMinusPoint {
  geom::BoundaryPoint x;
  Vec2 v;

  GammaMinusPoint(const geom::BoundaryPoint& p, const Vec2& vel);
};

enum class Condition {
  C1,
  C2_PARALLEL_X,
  C2_PARALLEL_V,
  C2_MIXED,
  C2_XX,
  C2_NECESSARY,
};

std::string condition_name(Condition c);

// Evaluated compatibility condition at one gamma_- point.  For row-vector
// conditions the sides occupy row 0 of lhs/rhs.  alt_residual is the
// unsymmetrized form of the same condition and form_agreement the defect of
// the algebraic bridge between the two forms (should sit at roundoff level).
struct CompatReport {
  Condition condition;
  double residual = 0.0;          // ||lhs - rhs||_inf
  double relative_residual = 0.0; // residual / (max side norm + 1e-30)
  Mat2 lhs = Mat2::Zero();
  Mat2 rhs = Mat2::Zero();
  Vec2 x = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  double alt_residual = 0.0;
  double form_agreement = 0.0;
};

// --- closed-form first-order matrices --------------------------------------
//
// All take the unit normal n1 = n(x^1) at the first backward bounce and the
// pre-bounce velocity v; they require v.n1 != 0.

// Columns of the reflection matrix differentiated through the flow geometry:
// {grad_x R^1_{x^1(x,v)}, grad_x R^2_{x^1(x,v)}}.  Each annihilates v.
std::pair<Mat2, Mat2> grad_R_columns(const Vec2& n1, const Vec2& v);

// v-derivatives of the columns of -2A at a fixed boundary point:
// {grad_v(-2A^1_{v,x^1}), grad_v(-2A^2_{v,x^1})}.
std::pair<Mat2, Mat2> grad_v_neg2A_columns(const Vec2& n1, const Vec2& v);

// x-derivatives of the columns of -2A through the flow geometry:
// {grad_x(-2A^1_{v,x^1(x,v)}), grad_x(-2A^2_{v,x^1(x,v)})}.  Each
// annihilates v and satisfies the column-swap symmetry
// d/dx2 (-2A^1) = d/dx1 (-2A^2).
std::pair<Mat2, Mat2> grad_x_neg2A_columns(const Vec2& n1, const Vec2& v);

struct JKMatrices {
  Mat2 J1, J2, K1, K2;
};

// The first-order correction matrices of the C2 conditions, transcribed in
// boundary coordinates (n(x) = x).  Null spaces are spanned by v.
JKMatrices jk_matrices(const GammaMinusPoint& p);

// --- condition checkers -----------------------------------------------------
//
// All checkers accept gamma_+ inputs as well by mapping (x,v) -> (x, R_x v)
// first; the reports always refer to the gamma_- representative.

// C1 compatibility: [grad_x f0(x,v) + grad_v f0(x,v) (Qv)(x)(Qv)/(v.n)] R_x
//                   = grad_x f0(x,Rv) + grad_v f0(x,Rv) (QRv)(x)(QRv)/(Rv.n).
CompatReport check_c1(const transport::InitialData& data,
                      const GammaMinusPoint& p);

// Parallelism conditions grad_x f0(x,Rv) || (Rv)^T and
// grad_v f0(x,Rv) || (Rv)^T, reported as the normalized perpendicular
// component (first = x, second = v).
std::pair<CompatReport, CompatReport> check_c2_parallel(
    const transport::InitialData& data, const GammaMinusPoint& p);

// Mixed second-derivative condition (the xv block with J corrections).
CompatReport check_c2_mixed(const transport::InitialData& data,
                            const GammaMinusPoint& p);

// Spatial second-derivative condition (the xx block with A, J, K corrections).
CompatReport check_c2_xx(const transport::InitialData& data,
                         const GammaMinusPoint& p);

// The two scalar sandwich residuals necessary for C2 regularity; the second
// one reduces exactly to the time-derivative condition
// v^T grad_xx f0(x,v) v = (Rv)^T grad_xx f0(x,Rv) (Rv).
std::pair<double, double> check_c2_necessary(const transport::InitialData& data,
                                             const GammaMinusPoint& p);

// Unsymmetrized per-block defects (left minus right of the four raw
// conditions).  Exposed for cross-checks between the condition forms.
struct BlockDefects {
  Mat2 D1; // xv block
  Mat2 D2; // xx block
  Mat2 D3; // vv block
  Mat2 D4; // vx block
};

BlockDefects block_defects(const transport::InitialData& data,
                           const GammaMinusPoint& p);

// --- exact-identity suite ----------------------------------------------------

enum class FaultInjection { none, flip_ra_sign };

struct IdentityReport {
  struct Entry {
    std::string name;
    double residual;
    double relative;
  };
  std::vector<Entry> entries;

  double max_relative() const;
};

// Batch verification of the matrix identities at one gamma_- point:
// RA, A^2, Av=0, v-annihilation of the rank-1 matrices, column-swap symmetry,
// the six K-vector determinants, J/K null spaces, the (Rv)^T left annihilator
// and the RAR sign identity.  The fault hook deliberately flips one sign so
// negative controls exercise the failure path.
IdentityReport verify_identities(const GammaMinusPoint& p,
                                 FaultInjection fault = FaultInjection::none);

// Deterministic gamma_- sampling: uniform boundary angle, uniform incoming
// direction with |v.n| >= margin |v|, uniform speed.
std::vector<GammaMinusPoint> sample_gamma_minus(std::size_t count,
                                                double speed_lo, double speed_hi,
                                                std::uint64_t seed,
                                                double margin = 0.05);

} // namespace diskflow::compat
