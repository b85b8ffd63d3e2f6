#include "tdl/scalar_bif.hpp"

#include <algorithm>
#include <limits>

#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"

namespace tdl {

using std::abs;
using std::exp;
using std::log;
using std::sqrt;

std::string to_string(ScalarKind k) {
  switch (k) {
    case ScalarKind::LP: return "LP";
    case ScalarKind::PD: return "PD";
    case ScalarKind::CP: return "CP";
    default: return "GPD";
  }
}

std::string to_string(HornVerdict v) {
  switch (v) {
    case HornVerdict::Spring: return "spring";
    case HornVerdict::Saddle: return "saddle";
    default: return "inconclusive";
  }
}

namespace {

struct Parts {
  real fixed, lp, pd, fxx, gpd;
};

Parts parts(int n, const VecR& u, const ModelParams& p) {
  const ScaledDerivs d = scaled_derivs(n, u(0), u(1), p);
  Parts r;
  r.fixed = u(2) * exp(p.beta * p.nu * u(0)) + d.c[0] - d.eps;
  r.lp = d.c[1] - d.eps;
  r.pd = d.c[1] + d.eps;
  r.fxx = d.d2();
  r.gpd = 2 * d.eps * d.d3() + 3 * d.d2() * d.d2();
  return r;
}

VecR monitors_of(int n, const VecR& u, const ModelParams& p) {
  const Parts q = parts(n, u, p);
  VecR m(3);
  m << q.fxx, q.gpd, u(2);
  return m;
}

DefiningSystem base_system(int n, const ModelParams& p) {
  DefiningSystem s;
  s.n_unknowns = 3;
  s.monitor_names = {"fxx", "gpd", "mu2s"};
  s.monitors = [n, p](const VecR& u) { return monitors_of(n, u, p); };
  return s;
}

VecR pack(const real& a, const real& b, const real& c) {
  VecR u(3);
  u << a, b, c;
  return u;
}

// Newton on (theta, s) at fixed mu1.
VecR solve_at_mu1(const DefiningSystem& curve_sys, const real& theta, const real& mu1, const real& s,
                  const NewtonOptions& no) {
  DefiningSystem sub;
  sub.n_unknowns = 2;
  sub.residual = [&curve_sys, mu1](const VecR& v) { return curve_sys.residual(pack(v(0), mu1, v(1))); };
  VecR v(2);
  v << theta, s;
  NewtonResult r = newton_solve(sub, v, no);
  return pack(r.u(0), mu1, r.u(1));
}

ContinuationOptions horn_continuation(const HornOptions& o, const ScalarBifPoint& cusp) {
  ContinuationOptions co;
  co.step.h0 = o.h0;
  co.step.h_max = o.h_max;
  co.step.h_min = o.h_min;
  co.newton = horn_newton(o);
  co.max_points = o.max_points;
  co.box.lo = pack(cusp.theta - kPi, o.mu1_lo, -o.s_bound);
  co.box.hi = pack(cusp.theta + kPi, o.mu1_hi, o.s_bound);
  return co;
}

real cusp_eps(const ScalarBifPoint& c, const ModelParams& p) {
  return exp((1 - p.nu) * log(c.x));
}

void add_cusp_cap(ContinuationOptions& co, const HornOptions& o, const ScalarBifPoint& cusp,
                  const ModelParams& p) {
  const real width = sqrt(cusp_eps(cusp, p));
  const real tc = cusp.theta;
  const real f = o.cusp_step;
  co.step.cap = [tc, width, f](const VecR& u) { return f * std::max(abs(u(0) - tc), width); };
}

VecR theta_direction(const real& sign) {
  VecR d = VecR::Zero(3);
  d(0) = sign;
  return d;
}

}  // namespace

real horn_seed_mu1(int n, const ModelParams& p) {
  const real bn = p.beta * p.nu;
  const real K = bn * abs(p.C2) / (sqrt(1 + bn * bn) * abs(p.C1));
  return log(2 * K) / (kTwoPi * n);
}

NewtonOptions horn_newton(const HornOptions& o) {
  NewtonOptions no;
  no.tol = o.newton_tol;
  no.max_iter = 40;
  no.polish = 2;
  return no;
}

DefiningSystem scalar_lp_system(int n, const ModelParams& p) {
  DefiningSystem s = base_system(n, p);
  s.residual = [n, p](const VecR& u) {
    const Parts q = parts(n, u, p);
    VecR r(2);
    r << q.fixed, q.lp;
    return r;
  };
  return s;
}

DefiningSystem scalar_pd_system(int n, const ModelParams& p) {
  DefiningSystem s = base_system(n, p);
  s.residual = [n, p](const VecR& u) {
    const Parts q = parts(n, u, p);
    VecR r(2);
    r << q.fixed, q.pd;
    return r;
  };
  return s;
}

DefiningSystem scalar_cusp_system(int n, const ModelParams& p) {
  DefiningSystem s = base_system(n, p);
  s.residual = [n, p](const VecR& u) {
    const Parts q = parts(n, u, p);
    return pack(q.fixed, q.lp, q.fxx);
  };
  return s;
}

DefiningSystem scalar_gpd_system(int n, const ModelParams& p) {
  DefiningSystem s = base_system(n, p);
  s.residual = [n, p](const VecR& u) {
    const Parts q = parts(n, u, p);
    return pack(q.fixed, q.pd, q.gpd);
  };
  return s;
}

ScalarBifPoint scalar_point(ScalarKind kind, int n, const VecR& u, const ModelParams& p) {
  ScalarBifPoint b;
  b.kind = kind;
  b.n = n;
  b.theta = u(0);
  b.x = x_of_theta(n, u(0), p);
  b.mu.mu1 = u(1);
  b.s = u(2);
  b.mu.mu2 = u(2) * horn_scale(n, p);
  const Parts q = parts(n, u, p);
  switch (kind) {
    case ScalarKind::LP: b.residuals = {q.fixed, q.lp}; break;
    case ScalarKind::PD: b.residuals = {q.fixed, q.pd}; break;
    case ScalarKind::CP: b.residuals = {q.fixed, q.lp, q.fxx}; break;
    case ScalarKind::GPD: b.residuals = {q.fixed, q.pd, q.gpd}; break;
  }
  return b;
}

NaturalResiduals natural_residuals(int n, const VecR& u, const ModelParams& p) {
  const real x = x_of_theta(n, u(0), p);
  Mu mu{u(1), u(2) * horn_scale(n, p)};
  const ScalarMapValue v = scalar_map(x, mu, p, 3);
  NaturalResiduals r;
  r.fixed = v.f - x;
  r.fold = v.fx - 1;
  r.flip = v.fx + 1;
  r.fxx = v.fxx;
  r.gpd = 2 * v.fxxx + 3 * v.fxx * v.fxx;
  return r;
}

ScalarBifPoint find_cusp(int n, const ModelParams& p, const HornOptions& o) {
  if (n < 1) throw DomainError("find_cusp: n must be >= 1");
  p.validate();
  const Mu a = cusp_asymptotic(n, p);
  const DerivedConstants d = derived_constants(p);
  const VecR seed = pack(d.theta0 + d.phi0, a.mu1, a.mu2 / horn_scale(n, p));
  try {
    NewtonResult r = newton_solve(scalar_cusp_system(n, p), seed, horn_newton(o));
    return scalar_point(ScalarKind::CP, n, r.u, p);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " [cusp seed n=" + std::to_string(n) +
                           " theta=" + seed(0).str(10) + " mu1=" + a.mu1.str(10) +
                           " mu2=" + a.mu2.str(10) + "]");
  }
}

Horn trace_lp_horn(int n, const ModelParams& p, const HornOptions& o) {
  Horn h;
  h.n = n;
  h.cusp = find_cusp(n, p, o);
  const real mu1s = std::clamp(horn_seed_mu1(n, p), o.mu1_lo, o.mu1_hi);
  ThetaSeeds seeds;
  try {
    seeds = horn_theta_seeds(n, mu1s, p);
  } catch (const DomainError&) {
    throw NotFoundError("trace_lp_horn: no real theta seed for mu1 in the requested range");
  }
  const DefiningSystem sys = scalar_lp_system(n, p);
  ContinuationOptions co = horn_continuation(o, h.cusp);
  add_cusp_cap(co, o, h.cusp, p);
  const NewtonOptions no = horn_newton(o);
  const int ifxx = sys.monitor_index("fxx");

  for (int b = 1; b <= 2; ++b) {
    const real th = b == 1 ? seeds.theta1 : seeds.theta2;
    const real s0 = horn_branch_mu2(n, mu1s, b, p) / horn_scale(n, p);
    const VecR seed = solve_at_mu1(sys, th, mu1s, s0, no);
    const real toward = h.cusp.theta > seed(0) ? 1 : -1;

    ContinuationOptions cin = co;
    cin.stop = [ifxx](const CurvePoint& a, const CurvePoint& c) {
      return (a.monitors(ifxx) > 0) != (c.monitors(ifxx) > 0);
    };
    Curve in = continue_curve(sys, seed, theta_direction(toward), cin);
    Curve out = continue_curve(sys, seed, theta_direction(-toward), co);

    Curve br;
    br.monitor_names = sys.monitor_names;
    br.index = n;
    br.branch = b;
    if (in.termination == "stopped") {
      RefineOptions ro;
      ro.newton = no;
      ro.monitor_tol = real(1e-24);
      ro.width_tol = real(1e-24);
      CurvePoint cp = refine_sign_change(sys, in, "fxx", in.points.size() - 2, ro);
      in.points.back() = cp;
    }
    for (std::size_t k = in.points.size(); k-- > 1;) {
      CurvePoint q = in.points[k];
      q.tangent = -q.tangent;
      br.points.push_back(q);
    }
    for (const auto& q : out.points) br.points.push_back(q);
    br.termination = (in.termination == "stopped" ? std::string("cusp") : in.termination) + " | " +
                     out.termination;
    (b == 1 ? h.branch1 : h.branch2) = br;
  }
  return h;
}

std::vector<ScalarBifPoint> horn_axis_crossings(const Horn& h, const ModelParams& p,
                                                const HornOptions& o) {
  const DefiningSystem sys = scalar_lp_system(h.n, p);
  RefineOptions ro;
  ro.newton = horn_newton(o);
  ro.monitor_tol = real(1e-24);
  ro.width_tol = real(1e-24);
  std::vector<ScalarBifPoint> out;
  for (const Curve* c : {&h.branch1, &h.branch2})
    for (std::size_t i : sign_changes(*c, "mu2s")) {
      const CurvePoint cp = refine_sign_change(sys, *c, "mu2s", i, ro);
      out.push_back(scalar_point(ScalarKind::LP, h.n, cp.u, p));
    }
  return out;
}

Curve trace_pd_curve(int n, const ModelParams& p, const HornOptions& o) {
  const ScalarBifPoint cusp = find_cusp(n, p, o);
  const real mu1s = std::clamp(horn_seed_mu1(n, p), o.mu1_lo, o.mu1_hi);
  ThetaSeeds seeds;
  try {
    seeds = horn_theta_seeds(n, mu1s, p);
  } catch (const DomainError&) {
    throw NotFoundError("trace_pd_curve: no real theta seed for mu1 in the requested range");
  }
  const DefiningSystem sys = scalar_pd_system(n, p);
  ContinuationOptions co = horn_continuation(o, cusp);
  add_cusp_cap(co, o, cusp, p);
  const real s0 = horn_branch_mu2(n, mu1s, 2, p) / horn_scale(n, p);
  const VecR seed = solve_at_mu1(sys, seeds.theta2, mu1s, s0, horn_newton(o));
  Curve c = continue_both_ways(sys, seed, theta_direction(1), co);
  c.index = n;
  c.branch = 0;
  return c;
}

std::vector<ScalarBifPoint> find_gpd_on(const Curve& pd, int n, const ModelParams& p,
                                        const ScalarBifPoint& cusp, const HornOptions& o) {
  std::vector<ScalarBifPoint> out;
  const DefiningSystem sys = scalar_pd_system(n, p);
  const DefiningSystem gsys = scalar_gpd_system(n, p);
  RefineOptions ro;
  ro.newton = horn_newton(o);
  ro.monitor_tol = real(1e-6) * cusp_eps(cusp, p);
  ro.width_tol = real(1e-3) * sqrt(cusp_eps(cusp, p));
  for (std::size_t i : sign_changes(pd, "gpd")) {
    const real th = (pd.points[i].u(0) + pd.points[i + 1].u(0)) / 2;
    if (abs(th - cusp.theta) >= o.gpd_window) continue;
    CurvePoint cp = refine_sign_change(sys, pd, "gpd", i, ro);
    VecR u = cp.u;
    try {
      u = newton_solve(gsys, cp.u, horn_newton(o)).u;
    } catch (const ConvergenceError&) {
      // keep the bracketed point; its residuals are reported as they are
    }
    out.push_back(scalar_point(ScalarKind::GPD, n, u, p));
  }
  return out;
}

std::vector<ScalarBifPoint> find_gpd(int n, const ModelParams& p, const HornOptions& o) {
  const ScalarBifPoint cusp = find_cusp(n, p, o);
  const Curve pd = trace_pd_curve(n, p, o);
  return find_gpd_on(pd, n, p, cusp, o);
}

bool pd_self_intersects(const Curve& pd, const real& theta_c, const real& window) {
  struct P2 {
    double a, b;
  };
  if (pd.points.empty()) return false;
  std::size_t ref = 0;
  real best = std::numeric_limits<real>::infinity();
  real amax = 0, bmax = 0;
  for (std::size_t i = 0; i < pd.points.size(); ++i) {
    const real d = abs(pd.points[i].u(0) - theta_c);
    if (d < best) {
      best = d;
      ref = i;
    }
    amax = std::max(amax, real(abs(pd.points[i].u(1))));
    bmax = std::max(bmax, real(abs(pd.points[i].u(2))));
  }
  // coordinates relative to the point nearest the cusp; the stored mu1, s carry
  // an absolute rounding floor, and crossings below it are not counted
  const VecR& r = pd.points[ref].u;
  const double na = to_double(64 * std::numeric_limits<real>::epsilon() * amax);
  const double nb = to_double(64 * std::numeric_limits<real>::epsilon() * bmax);
  std::vector<P2> pts;
  for (const auto& q : pd.points)
    if (abs(q.u(0) - theta_c) < window)
      pts.push_back({to_double(q.u(1) - r(1)), to_double(q.u(2) - r(2))});
  auto orient = [na, nb](const P2& a, const P2& b, const P2& c) {
    const double v = (b.a - a.a) * (c.b - a.b) - (b.b - a.b) * (c.a - a.a);
    const double floor = 2 * na * (std::abs(b.b - a.b) + std::abs(c.b - a.b)) +
                         2 * nb * (std::abs(b.a - a.a) + std::abs(c.a - a.a));
    if (std::abs(v) <= floor) return 0;
    return v > 0 ? 1 : -1;
  };
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double xmin = std::min(pts[i].a, pts[i + 1].a), xmax = std::max(pts[i].a, pts[i + 1].a);
    const double ymin = std::min(pts[i].b, pts[i + 1].b), ymax = std::max(pts[i].b, pts[i + 1].b);
    for (std::size_t j = i + 2; j + 1 < pts.size(); ++j) {
      if (std::max(pts[j].a, pts[j + 1].a) < xmin || std::min(pts[j].a, pts[j + 1].a) > xmax ||
          std::max(pts[j].b, pts[j + 1].b) < ymin || std::min(pts[j].b, pts[j + 1].b) > ymax)
        continue;
      const int o1 = orient(pts[i], pts[i + 1], pts[j]);
      const int o2 = orient(pts[i], pts[i + 1], pts[j + 1]);
      const int o3 = orient(pts[j], pts[j + 1], pts[i]);
      const int o4 = orient(pts[j], pts[j + 1], pts[i + 1]);
      if (o1 * o2 < 0 && o3 * o4 < 0) return true;
    }
  }
  return false;
}

HornClass classify_horn(int n, const ModelParams& p, const HornOptions& o) {
  HornClass hc;
  const ScalarBifPoint cusp = find_cusp(n, p, o);
  Curve pd;
  try {
    pd = trace_pd_curve(n, p, o);
  } catch (const std::exception&) {
    hc.verdict = HornVerdict::Inconclusive;
    return hc;
  }
  bool below = false, above = false;
  for (const auto& q : pd.points) {
    if (q.u(0) < cusp.theta - real(0.1)) below = true;
    if (q.u(0) > cusp.theta + real(0.1)) above = true;
  }
  if (!below || !above) {
    hc.verdict = HornVerdict::Inconclusive;
    return hc;
  }
  hc.gpds = find_gpd_on(pd, n, p, cusp, o);
  hc.gpd_count = static_cast<int>(hc.gpds.size());
  hc.self_intersects = pd_self_intersects(pd, cusp.theta, o.gpd_window);
  hc.verdict = (hc.gpd_count >= 2 || hc.self_intersects) ? HornVerdict::Spring : HornVerdict::Saddle;
  return hc;
}

std::vector<real> scalar_fixed_thetas(int n, const Mu& mu, const ModelParams& p, const real& lo,
                                      const real& hi, int samples) {
  const real s = mu.mu2 / horn_scale(n, p);
  auto f = [&](const real& th) {
    const ScaledDerivs d = scaled_derivs(n, th, mu.mu1, p);
    return s * exp(p.beta * p.nu * th) + d.c[0] - d.eps;
  };
  std::vector<real> roots;
  real a = lo, fa = f(lo);
  for (int k = 1; k <= samples; ++k) {
    const real b = lo + (hi - lo) * k / samples;
    const real fb = f(b);
    if (fa == 0) roots.push_back(a);
    else if ((fa < 0) != (fb < 0) && fb != 0) {
      real l = a, r = b, fl = fa;
      for (int it = 0; it < 130; ++it) {
        const real m = (l + r) / 2;
        const real fm = f(m);
        if ((fm < 0) == (fl < 0)) {
          l = m;
          fl = fm;
        } else {
          r = m;
        }
      }
      roots.push_back((l + r) / 2);
    }
    a = b;
    fa = fb;
  }
  return roots;
}

}  // namespace tdl
