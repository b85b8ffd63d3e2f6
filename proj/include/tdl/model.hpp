#pragma once

#include <array>

#include "tdl/real.hpp"

namespace tdl {

// Coefficients of the model return maps. Default-constructed values are the
// reference set nu = beta = 0.5, C1 = 0.8, C2 = 1.2, alpha = (0.8, 1.3, 0.6, 1.1),
// phi1 = phi2 = pi/6.
struct ModelParams {
  real nu{0.5};
  real beta{0.5};
  real C1{"0.8"};
  real C2{"1.2"};
  real alpha1{"0.8"};
  real alpha2{"1.3"};
  real alpha3{"0.6"};
  real alpha4{"1.1"};
  real phi1{kPi / 6};
  real phi2{kPi / 6};

  ModelParams() = default;
  ModelParams(real nu, real beta, real C1, real C2, real alpha1, real alpha2, real alpha3,
              real alpha4, real phi1, real phi2);

  // Throws DomainError when nu <= 0, beta <= 0, C1 == 0, C2 == 0 or a value is not finite.
  void validate() const;

  real kappa(const real& mu1) const { return nu + mu1 / beta; }
};

struct Mu {
  real mu1{0};
  real mu2{0};
};

struct StateS {
  real x1{1};
  real x3{1};
  real x4{0};
};

struct GlobalMatrix {
  std::array<std::array<real, 3>, 3> a{};

  real det() const;
  void validate() const;
  static GlobalMatrix identity();
};

struct ScalarMapValue {
  int order{0};
  real f{0};
  real fx{0};
  real fxx{0};
  real fxxx{0};
  // nu + mu1/beta <= 0: derivatives diverge as x -> 0.
  bool kappa_nonpositive{false};
};

// F(x, mu) = mu2 + C1 x^nu sin(-ln(x)/beta) + C2 x^(nu + mu1/beta) and x-derivatives up to order.
ScalarMapValue scalar_map(const real& x, const Mu& mu, const ModelParams& p, int order = 3);

// dF/dmu1 = C2 x^kappa ln(x) / beta.
real scalar_map_dmu1(const real& x, const Mu& mu, const ModelParams& p);

// Largest relative gap between analytic F', F'', F''' and Richardson-extrapolated
// central differences of the next lower analytic derivative (relative step 1e-5).
real scalar_map_fd_check(const real& x, const Mu& mu, const ModelParams& p);

struct Map3Value {
  StateS image;
  Mat3 jac;  // d(G1, G2, G3) / d(x1, x3, x4)
};

Map3Value model_map_3d(const StateS& s, const Mu& mu, const ModelParams& p);

// Image only; cheaper when the Jacobian is not needed.
Vec3 model_map_3d_image(const Vec3& x, const Mu& mu, const ModelParams& p);

struct FlowParams {
  real gamma{-0.25};
  real beta{0.5};
  real mu1{0};
};

struct LocalImage {
  real x1u{0};
  real x2u{0};
  real x3u{0};
};

// Near-saddle passage Sigma_s -> Sigma_u with nu = -gamma/beta.
LocalImage local_map(const StateS& s, const FlowParams& f);

// Affine global passage Sigma_u -> Sigma_s composed with local_map, remainder dropped.
Vec3 compose_return_map(const GlobalMatrix& A, const StateS& s, const Mu& mu, const FlowParams& f);

struct MapCoefficients {
  real b1{0}, b2{0}, b3{0}, b4{0}, b5{0}, b6{0};
  real theta1{0}, theta2{0}, theta3{0};
  real alpha1{0}, alpha2{0}, alpha3{0}, alpha4{0};
  real C1{0}, C2{0};
  real phi1{0}, phi2{0};
};

// b_k and theta_k of the composed map, then the alpha/C/phi form after x4 -> x4 exp(theta3 beta).
// C2 is built from b6 = a33.
MapCoefficients derive_map_coefficients(const GlobalMatrix& A, const real& nu, const real& beta,
                                        const real& mu1);

// Composed map rebuilt from the b/theta coefficients.
Vec3 reconstructed_map(const MapCoefficients& c, const StateS& s, const Mu& mu, const real& nu,
                       const real& beta);

// theta-parametrisation x = exp(-beta (2 pi n + theta)) used by the horn and curve solvers.
// Quantities below are divided by x^nu so that they stay O(1) for every n.
struct ScaledDerivs {
  real x{0};
  real E{0};    // x^nu
  real eps{0};  // x / x^nu
  real m{0};    // x^(mu1/beta)
  real c[4]{};  // g^(k)(L) / x^nu, L = ln x, g = C1 e^(nu L) sin(-L/beta) + C2 e^(kappa L)
  // Scaled forms of F_x x / x^nu, F_xx x^2 / x^nu, F_xxx x^3 / x^nu.
  real d1() const { return c[1]; }
  real d2() const { return c[2] - c[1]; }
  real d3() const { return c[3] - 3 * c[2] + 2 * c[1]; }
};

ScaledDerivs scaled_derivs(int n, const real& theta, const real& mu1, const ModelParams& p);

inline real x_of_theta(int n, const real& theta, const ModelParams& p) {
  using std::exp;
  return exp(-p.beta * (kTwoPi * n + theta));
}

// mu2 = s * horn_scale(n): keeps the unknown O(1) for all n.
inline real horn_scale(int n, const ModelParams& p) {
  using std::exp;
  return exp(-kTwoPi * p.beta * p.nu * n);
}

}  // namespace tdl
