#include "tdl/model.hpp"

#include <algorithm>

#include "tdl/errors.hpp"

namespace tdl {

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;

namespace {

bool finite(const real& v) { return boost::multiprecision::isfinite(v); }

}  // namespace

ModelParams::ModelParams(real nu_, real beta_, real C1_, real C2_, real a1, real a2, real a3,
                         real a4, real p1, real p2)
    : nu(nu_), beta(beta_), C1(C1_), C2(C2_), alpha1(a1), alpha2(a2), alpha3(a3), alpha4(a4),
      phi1(p1), phi2(p2) {
  validate();
}

void ModelParams::validate() const {
  for (const real* v : {&nu, &beta, &C1, &C2, &alpha1, &alpha2, &alpha3, &alpha4, &phi1, &phi2})
    if (!finite(*v)) throw DomainError("model parameters must be finite");
  if (!(nu > 0)) throw DomainError("saddle index nu must be positive");
  if (!(beta > 0)) throw DomainError("beta must be positive");
  if (C1 == 0 || C2 == 0) throw DomainError("C1 and C2 must both be nonzero");
}

real GlobalMatrix::det() const {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
         a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

void GlobalMatrix::validate() const {
  if (det() == 0) throw DomainError("global matrix is singular");
}

GlobalMatrix GlobalMatrix::identity() {
  GlobalMatrix g;
  for (int i = 0; i < 3; ++i) g.a[i][i] = 1;
  return g;
}

ScalarMapValue scalar_map(const real& x, const Mu& mu, const ModelParams& p, int order) {
  if (!(x > 0)) throw DomainError("scalar_map: x must be positive");
  if (order < 0 || order > 3) throw DomainError("scalar_map: order must be in 0..3");
  const real L = log(x);
  const real w = -1 / p.beta;
  const real kap = p.kappa(mu.mu1);
  const real xn = pow(x, p.nu);
  const real xk = pow(x, kap);

  // Im((nu + i w)^k e^{i w L}) for k = 0..3
  CxR zk{cos(w * L), sin(w * L)};
  const CxR z{p.nu, w};
  real g[4];
  real kk = 1;
  for (int k = 0; k <= order; ++k) {
    g[k] = p.C1 * xn * zk.im + p.C2 * kk * xk;
    zk = zk * z;
    kk *= kap;
  }

  ScalarMapValue r;
  r.order = order;
  r.kappa_nonpositive = !(kap > 0);
  r.f = mu.mu2 + g[0];
  if (order >= 1) r.fx = g[1] / x;
  if (order >= 2) r.fxx = (g[2] - g[1]) / (x * x);
  if (order >= 3) r.fxxx = (g[3] - 3 * g[2] + 2 * g[1]) / (x * x * x);
  return r;
}

real scalar_map_dmu1(const real& x, const Mu& mu, const ModelParams& p) {
  if (!(x > 0)) throw DomainError("scalar_map_dmu1: x must be positive");
  return p.C2 * pow(x, p.kappa(mu.mu1)) * log(x) / p.beta;
}

real scalar_map_fd_check(const real& x, const Mu& mu, const ModelParams& p) {
  auto deriv = [&](const real& xx, int k) {
    ScalarMapValue v = scalar_map(xx, mu, p, k);
    switch (k) {
      case 0: return v.f;
      case 1: return v.fx;
      case 2: return v.fxx;
      default: return v.fxxx;
    }
  };
  const real h = real(1e-5) * x;
  const ScalarMapValue an = scalar_map(x, mu, p, 3);
  const real analytic[3] = {an.fx, an.fxx, an.fxxx};
  const real zmod = sqrt(p.nu * p.nu + 1 / (p.beta * p.beta));
  const real kap = abs(p.kappa(mu.mu1));
  real worst = 0;
  for (int k = 1; k <= 3; ++k) {
    auto central = [&](const real& hh) {
      return (deriv(x + hh, k - 1) - deriv(x - hh, k - 1)) / (2 * hh);
    };
    const real fd = (4 * central(h / 2) - central(h)) / 3;
    const real terms = (abs(p.C1) * pow(x, p.nu) * pow(zmod, k) +
                        abs(p.C2) * pow(kap, k) * pow(x, p.kappa(mu.mu1))) *
                       pow(real(2), k) / pow(x, k);
    const real denom = std::max(abs(analytic[k - 1]), real(1e-8) * terms);
    worst = std::max(worst, abs(analytic[k - 1] - fd) / denom);
  }
  return worst;
}

Map3Value model_map_3d(const StateS& s, const Mu& mu, const ModelParams& p) {
  if (!(s.x4 > 0)) throw DomainError("model_map_3d: x4 must be positive");
  const real x4 = s.x4;
  const real psi = -log(x4) / p.beta;
  const real kap = p.kappa(mu.mu1);
  const real pn = pow(x4, p.nu);
  const real pk = pow(x4, kap);
  const real c1 = cos(psi + p.phi1), s1 = sin(psi + p.phi1);
  const real c2 = cos(psi + p.phi2), s2 = sin(psi + p.phi2);
  const real c3 = cos(psi), s3 = sin(psi);
  const real ib = 1 / p.beta;

  Map3Value r;
  r.image.x1 = 1 + p.alpha1 * s.x1 * pn * c1 + p.alpha2 * s.x3 * pk;
  r.image.x3 = 1 + p.alpha3 * s.x1 * pn * s2 + p.alpha4 * s.x3 * pk;
  r.image.x4 = mu.mu2 + p.C1 * s.x1 * pn * s3 + p.C2 * s.x3 * pk;

  Mat3& J = r.jac;
  J(0, 0) = p.alpha1 * pn * c1;
  J(0, 1) = p.alpha2 * pk;
  J(0, 2) = (p.alpha1 * s.x1 * pn * (p.nu * c1 + s1 * ib) + p.alpha2 * s.x3 * kap * pk) / x4;
  J(1, 0) = p.alpha3 * pn * s2;
  J(1, 1) = p.alpha4 * pk;
  J(1, 2) = (p.alpha3 * s.x1 * pn * (p.nu * s2 - c2 * ib) + p.alpha4 * s.x3 * kap * pk) / x4;
  J(2, 0) = p.C1 * pn * s3;
  J(2, 1) = p.C2 * pk;
  J(2, 2) = (p.C1 * s.x1 * pn * (p.nu * s3 - c3 * ib) + p.C2 * s.x3 * kap * pk) / x4;
  return r;
}

Vec3 model_map_3d_image(const Vec3& x, const Mu& mu, const ModelParams& p) {
  if (!(x(2) > 0)) throw DomainError("model_map_3d: x4 must be positive");
  const real psi = -log(x(2)) / p.beta;
  const real pn = pow(x(2), p.nu);
  const real pk = pow(x(2), p.kappa(mu.mu1));
  Vec3 g;
  g(0) = 1 + p.alpha1 * x(0) * pn * cos(psi + p.phi1) + p.alpha2 * x(1) * pk;
  g(1) = 1 + p.alpha3 * x(0) * pn * sin(psi + p.phi2) + p.alpha4 * x(1) * pk;
  g(2) = mu.mu2 + p.C1 * x(0) * pn * sin(psi) + p.C2 * x(1) * pk;
  return g;
}

LocalImage local_map(const StateS& s, const FlowParams& f) {
  if (!(s.x4 > 0)) throw DomainError("local_map: x4 must be positive");
  if (!(f.beta > 0)) throw DomainError("local_map: beta must be positive");
  const real nu = -f.gamma / f.beta;
  const real psi = -log(s.x4) / f.beta;
  const real pn = pow(s.x4, nu);
  return {s.x1 * pn * cos(psi), s.x1 * pn * sin(psi), s.x3 * pow(s.x4, nu + f.mu1 / f.beta)};
}

Vec3 compose_return_map(const GlobalMatrix& A, const StateS& s, const Mu& mu, const FlowParams& f) {
  const LocalImage y = local_map(s, f);
  const real u[3] = {y.x1u, y.x2u, y.x3u};
  const real base[3] = {1, 1, mu.mu2};
  Vec3 out;
  for (int i = 0; i < 3; ++i)
    out(i) = base[i] + A.a[i][0] * u[0] + A.a[i][1] * u[1] + A.a[i][2] * u[2];
  return out;
}

MapCoefficients derive_map_coefficients(const GlobalMatrix& A, const real& nu, const real& beta,
                                        const real& mu1) {
  A.validate();
  const auto& a = A.a;
  for (int i = 0; i < 3; ++i)
    if (a[i][0] == 0 && a[i][1] == 0)
      throw DomainError("degenerate global matrix: row " + std::to_string(i + 1) +
                        " has a zero (a_i1, a_i2) pair, phase angle undefined");
  using std::atan2;
  using std::hypot;
  MapCoefficients c;
  c.b1 = hypot(a[0][0], a[0][1]);
  c.b3 = hypot(a[1][0], a[1][1]);
  c.b5 = hypot(a[2][0], a[2][1]);
  c.b2 = a[0][2];
  c.b4 = a[1][2];
  c.b6 = a[2][2];
  c.theta1 = atan2(-a[0][1], a[0][0]);
  c.theta2 = atan2(a[1][0], a[1][1]);
  c.theta3 = atan2(a[2][0], a[2][1]);

  const real kap = nu + mu1 / beta;
  const real en = exp(c.theta3 * beta * nu);
  const real ek = exp(kap * c.theta3 * beta);
  c.alpha1 = c.b1 * en;
  c.alpha2 = c.b2 * ek;
  c.alpha3 = c.b3 * en;
  c.alpha4 = c.b4 * ek;
  c.C1 = c.b5 * en;
  c.C2 = c.b6 * ek;
  c.phi1 = c.theta1 - c.theta3;
  c.phi2 = c.theta2 - c.theta3;
  return c;
}

Vec3 reconstructed_map(const MapCoefficients& c, const StateS& s, const Mu& mu, const real& nu,
                       const real& beta) {
  if (!(s.x4 > 0)) throw DomainError("reconstructed_map: x4 must be positive");
  const real psi = -log(s.x4) / beta;
  const real pn = pow(s.x4, nu);
  const real pk = pow(s.x4, nu + mu.mu1 / beta);
  Vec3 g;
  g(0) = 1 + c.b1 * s.x1 * pn * cos(psi + c.theta1) + c.b2 * s.x3 * pk;
  g(1) = 1 + c.b3 * s.x1 * pn * sin(psi + c.theta2) + c.b4 * s.x3 * pk;
  g(2) = mu.mu2 + c.b5 * s.x1 * pn * sin(psi + c.theta3) + c.b6 * s.x3 * pk;
  return g;
}

ScaledDerivs scaled_derivs(int n, const real& theta, const real& mu1, const ModelParams& p) {
  const real T = kTwoPi * n + theta;
  const real L = -p.beta * T;
  const real kap = p.kappa(mu1);
  ScaledDerivs d;
  d.x = exp(L);
  d.E = exp(p.nu * L);
  d.eps = exp((1 - p.nu) * L);
  d.m = exp(-mu1 * T);
  // e^{i w L} = e^{i (2 pi n + theta)} = e^{i theta}
  CxR zk{cos(theta), sin(theta)};
  const CxR z{p.nu, -1 / p.beta};
  real kk = 1;
  for (int k = 0; k < 4; ++k) {
    d.c[k] = p.C1 * zk.im + p.C2 * kk * d.m;
    zk = zk * z;
    kk *= kap;
  }
  return d;
}

}  // namespace tdl
