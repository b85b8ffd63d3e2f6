#include "tdl/sechom.hpp"

#include <algorithm>

#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"

namespace tdl {

using std::abs;
using std::exp;
using std::log;

HValue h_eval(const Mu& mu, const ModelParams& p, int order) {
  if (!(mu.mu2 > 0)) throw DomainError("h_eval: mu2 must be positive");
  const ScalarMapValue v = scalar_map(mu.mu2, mu, p, order >= 1 ? 1 : 0);
  HValue h;
  h.h = v.f;
  if (order >= 1) {
    h.dmu2 = v.fx + 1;
    h.dmu1 = scalar_map_dmu1(mu.mu2, mu, p);
  }
  return h;
}

namespace {

VecR pack2(const real& a, const real& b) {
  VecR u(2);
  u << a, b;
  return u;
}

// scaled H and scaled dH/dmu2 at (theta, mu1)
std::pair<real, real> scaled_h(int m, const real& theta, const real& mu1, const ModelParams& p) {
  const ScaledDerivs d = scaled_derivs(m, theta, mu1, p);
  return {d.c[0] + d.eps, d.c[1] + d.eps};
}

NewtonOptions newton_of(const ParabolaOptions& o) {
  NewtonOptions no;
  no.tol = o.newton_tol;
  no.max_iter = 40;
  return no;
}

}  // namespace

DefiningSystem parabola_system(int m, const ModelParams& p) {
  DefiningSystem s;
  s.n_unknowns = 2;
  s.monitor_names = {"turn", "mu2"};
  s.residual = [m, p](const VecR& u) {
    VecR r(1);
    r(0) = scaled_h(m, u(0), u(1), p).first;
    return r;
  };
  s.monitors = [m, p](const VecR& u) {
    return pack2(scaled_h(m, u(0), u(1), p).second, x_of_theta(m, u(0), p));
  };
  return s;
}

SecHomPoint sechom_point(int m, const real& theta, const real& mu1, const ModelParams& p) {
  SecHomPoint s;
  s.m = m;
  s.theta = theta;
  s.mu = {mu1, x_of_theta(m, theta, p)};
  const auto [h, t] = scaled_h(m, theta, mu1, p);
  s.residual = abs(h) * exp(p.nu * log(s.mu.mu2));
  s.turn_residual = abs(t);
  return s;
}

Curve trace_parabola(int m, const ModelParams& p, const ParabolaOptions& o) {
  if (m < 1) throw DomainError("trace_parabola: m must be >= 1");
  p.validate();
  const real mu1s = std::clamp(log(2 * abs(p.C2 / p.C1)) / (kTwoPi * m), o.mu1_lo, o.mu1_hi);
  ThetaSeeds seeds;
  try {
    seeds = parabola_theta_seeds(m, mu1s, p);
  } catch (const DomainError&) {
    throw NotFoundError("trace_parabola: no real theta seed in the mu1 range");
  }
  const DefiningSystem sys = parabola_system(m, p);
  DefiningSystem fixed;
  fixed.n_unknowns = 1;
  fixed.residual = [&](const VecR& v) { return sys.residual(pack2(v(0), mu1s)); };
  VecR v(1);
  v << seeds.theta2;
  const real th = newton_solve(fixed, v, newton_of(o)).u(0);

  const real tc = derived_constants(p).theta0;
  ContinuationOptions co;
  co.step.h0 = o.h0;
  co.step.h_max = o.h_max;
  co.step.h_min = real(1e-30);
  co.max_points = o.max_points;
  co.newton = newton_of(o);
  co.box.lo = pack2(tc - kPi, o.mu1_lo);
  co.box.hi = pack2(tc + kPi, o.mu1_hi);
  Curve c = continue_both_ways(sys, pack2(th, mu1s), pack2(1, 0), co);
  c.index = m;
  return c;
}

SecHomPoint find_turning(int m, const ModelParams& p, const ParabolaOptions& o) {
  if (m < 1) throw DomainError("find_turning: m must be >= 1");
  const Mu a = turning_asymptotic(m, p);
  const real th0 = derived_constants(p).theta0;
  DefiningSystem sys;
  sys.n_unknowns = 2;
  sys.residual = [m, p](const VecR& u) {
    const auto [h, t] = scaled_h(m, u(0), u(1), p);
    return pack2(h, t);
  };
  try {
    const NewtonResult r = newton_solve(sys, pack2(th0, a.mu1), newton_of(o));
    return sechom_point(m, r.u(0), r.u(1), p);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " [turning seed m=" + std::to_string(m) +
                           " mu1=" + a.mu1.str(10) + " mu2=" + a.mu2.str(10) + "]");
  }
}

SecHomPoint curve_turning(const Curve& c, int m, const ModelParams& p, const ParabolaOptions& o) {
  const auto idx = sign_changes(c, "turn");
  if (idx.empty()) throw NotFoundError("curve_turning: parabola has no turning point");
  RefineOptions ro;
  ro.newton = newton_of(o);
  ro.monitor_tol = real(1e-24);
  ro.width_tol = real(1e-26);
  const CurvePoint cp = refine_sign_change(parabola_system(m, p), c, "turn", idx.front(), ro);
  return sechom_point(m, cp.u(0), cp.u(1), p);
}

}  // namespace tdl
