#pragma once

#include <array>
#include <string>
#include <vector>

#include "tdl/continuation.hpp"
#include "tdl/model.hpp"

namespace tdl {

// Characteristic polynomial det(lambda I - J) = lambda^3 + c[2] lambda^2 + c[1] lambda + c[0].
std::array<real, 3> char_poly(const Mat3& J);

struct Multipliers {
  std::array<CxR, 3> lambda;
  real poly_residual{0};  // max |p(lambda_i)|
};

// Roots of the cubic, each polished by complex Newton. Sorted by decreasing modulus.
Multipliers multipliers(const Mat3& J);

// Second compound matrix (2x2 minors); its eigenvalues are lambda_i lambda_j.
Mat3 second_compound(const Mat3& J);

// det(C2(J) - I): vanishes on Neimark-Sacker points and on neutral saddles.
real ns_test(const Mat3& J);

// 3D unknowns u = (x1, x3, theta, mu1, s), x4 = exp(-beta (2 pi n + theta)), mu2 = s horn_scale(n).
struct FixedPoint3D {
  int n{0};
  StateS state;
  Mu mu;
  real theta{0};
  Multipliers mult;
  real residual_norm{0};  // |G(x) - x| in natural units
  Mat3 jac;
};

FixedPoint3D fixed_point_from_u(int n, const VecR& u, const ModelParams& p);

// Scaled fixed-point residual (G1 - x1, G3 - x3, (G4 - x4) / x4^nu).
Vec3 fixed_residual_3d(int n, const VecR& u, const ModelParams& p);

// Scalar roots of F(x) = x on branch n give x4; x1, x3 are the first two components of G
// at (1, 1, x4). root_index picks among the roots ordered by theta.
// Throws NotFoundError without a scalar root, ConvergenceError when Newton fails.
FixedPoint3D find_fixed_point_3d(const Mu& mu, const ModelParams& p, int n, int root_index = 0);

enum class Curve3Kind { LP, PD, NS };
std::string to_string(Curve3Kind k);

struct Map3Options {
  real mu1_lo{-0.1};
  real mu1_hi{0.1};
  real s_bound{1e6};
  real x_bound{1e3};
  real h0{1e-3};
  real h_max{0.05};
  real h_min{1e-40};
  int max_points{6000};
  real newton_tol{1e-26};
  real cusp_step{0.1};
  // normal-form finite-difference step (one Richardson level)
  real nf_step{1e-5};
};

// Monitors: LP "det_JmI", "det_JpI", "ns_test", "cp", "r1", "mu2s";
// PD: "det_JmI", "det_JpI", "ns_test", "gpd", "r2", "mu2s";
// NS: "det_JmI", "det_JpI", "ns_test", "kappa", "ns_pair", "r3", "mu2s".
DefiningSystem lp3_system(int n, const ModelParams& p, const Map3Options& o = {});
DefiningSystem pd3_system(int n, const ModelParams& p, const Map3Options& o = {});
DefiningSystem ns3_system(int n, const ModelParams& p, const Map3Options& o = {});

// Fold and flip normal-form coefficients at a fixed point with a multiplier at +1 / -1,
// in the coordinates (x1, x3, x4 / x4*). Critical eigenvector oriented with positive x4 part.
real fold_coefficient(int n, const VecR& u, const ModelParams& p, const real& h = real(1e-5));
real flip_coefficient(int n, const VecR& u, const ModelParams& p, const real& h = real(1e-5));

// |x4(3D) - x4(scalar)| / x4^(2 nu) at a curve point u. The scalar x4 is the nearest
// scalar root at the same mu; past a scalar fold, where no root exists, it is the
// scalar LP/PD curve point with the same mu1.
real scalar_x4_gap(int n, const VecR& u, Curve3Kind kind, const ModelParams& p);

// Seeds from the scalar horn at the horn seed mu1, continues both ways through the cusp region.
Curve trace_lp3(int n, const ModelParams& p, const Map3Options& o = {});
Curve trace_pd3(int n, const ModelParams& p, const Map3Options& o = {});

enum class Codim2Kind { CP, GPD, LPPD, R1, R2, R3, R4 };
std::string to_string(Codim2Kind k);

struct Codim2Point3D {
  Codim2Kind kind{Codim2Kind::CP};
  Curve3Kind on{Curve3Kind::LP};
  VecR u;
  FixedPoint3D fp;
  real test_value{0};
};

// Sign changes of the kind-specific test functions, refined on the curve.
// CP and GPD sign changes whose coefficient does not vanish at the refined point (poles) are dropped.
std::vector<Codim2Point3D> detect_codim2_3d(const Curve& c, Curve3Kind kind, int n,
                                            const ModelParams& p, const Map3Options& o = {});

struct NSCurve {
  Curve curve;
  // classification of both ends: "R1", "R2", or the termination reason
  std::string start;
  std::string end;
  bool neutral_saddle{false};  // seed led onto real reciprocal multipliers only
  std::vector<Codim2Point3D> points;  // R1/R2 endpoints and R3/R4 along the way
};

// NS curve from an R1 or R2 point on LP3/PD3, continued into the unit-circle side.
NSCurve trace_ns3(const Codim2Point3D& seed, int n, const ModelParams& p, const Map3Options& o = {});

}  // namespace tdl
