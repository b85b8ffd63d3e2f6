#include "tdl/map3d.hpp"

#include <algorithm>
#include <limits>

#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"
#include "tdl/scalar_bif.hpp"

namespace tdl {

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::sin;
using std::sqrt;

std::string to_string(Curve3Kind k) {
  switch (k) {
    case Curve3Kind::LP: return "LP3";
    case Curve3Kind::PD: return "PD3";
    default: return "NS3";
  }
}

std::string to_string(Codim2Kind k) {
  switch (k) {
    case Codim2Kind::CP: return "CP";
    case Codim2Kind::GPD: return "GPD";
    case Codim2Kind::LPPD: return "LPPD";
    case Codim2Kind::R1: return "R1";
    case Codim2Kind::R2: return "R2";
    case Codim2Kind::R3: return "R3";
    default: return "R4";
  }
}

std::array<real, 3> char_poly(const Mat3& J) {
  const real tr = J.trace();
  const real m2 = J(0, 0) * J(1, 1) - J(0, 1) * J(1, 0) + J(0, 0) * J(2, 2) - J(0, 2) * J(2, 0) +
                  J(1, 1) * J(2, 2) - J(1, 2) * J(2, 1);
  return {-J.determinant(), m2, -tr};
}

namespace {

CxR poly_at(const std::array<real, 3>& c, const CxR& z) {
  return ((z + CxR(c[2])) * z + CxR(c[1])) * z + CxR(c[0]);
}

CxR dpoly_at(const std::array<real, 3>& c, const CxR& z) {
  return (real(3) * z + CxR(2 * c[2])) * z + CxR(c[1]);
}

CxR polish(const std::array<real, 3>& c, CxR z) {
  for (int k = 0; k < 8; ++k) {
    const CxR f = poly_at(c, z);
    const CxR d = dpoly_at(c, z);
    if (abs(d) == 0) break;
    const CxR zn = z - f / d;
    if (!(abs(poly_at(c, zn)) < abs(f))) break;
    z = zn;
  }
  return z;
}

}  // namespace

Multipliers multipliers(const Mat3& J) {
  const auto c = char_poly(J);
  // one real root by bisection inside the Cauchy bound
  const real R = 1 + std::max({abs(c[0]), abs(c[1]), abs(c[2])});
  auto p = [&](const real& x) { return ((x + c[2]) * x + c[1]) * x + c[0]; };
  real lo = -R, hi = R;
  for (int it = 0; it < 400 && hi - lo > 0; ++it) {
    const real mid = (lo + hi) / 2;
    if (mid == lo || mid == hi) break;
    if (p(mid) < 0) lo = mid;
    else hi = mid;
  }
  const real r = (lo + hi) / 2;
  // deflate: lambda^2 + b lambda + d
  const real b = c[2] + r;
  const real d = c[1] + r * b;
  const real disc = b * b - 4 * d;
  Multipliers m;
  m.lambda[0] = CxR(r);
  if (disc >= 0) {
    const real q = -(b + (b >= 0 ? real(1) : real(-1)) * sqrt(disc)) / 2;
    m.lambda[1] = CxR(q);
    m.lambda[2] = CxR(q != 0 ? real(d / q) : real(0));
  } else {
    m.lambda[1] = CxR(-b / 2, sqrt(-disc) / 2);
    m.lambda[2] = CxR(-b / 2, -sqrt(-disc) / 2);
  }
  for (auto& z : m.lambda) z = polish(c, z);
  std::stable_sort(m.lambda.begin(), m.lambda.end(),
                   [](const CxR& a, const CxR& b2) { return abs(a) > abs(b2); });
  for (const auto& z : m.lambda) m.poly_residual = std::max(m.poly_residual, real(abs(poly_at(c, z))));
  return m;
}

Mat3 second_compound(const Mat3& J) {
  static const int P[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  Mat3 C;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const int i = P[a][0], j = P[a][1], k = P[b][0], l = P[b][1];
      C(a, b) = J(i, k) * J(j, l) - J(i, l) * J(j, k);
    }
  return C;
}

real ns_test(const Mat3& J) { return (second_compound(J) - Mat3::Identity()).determinant(); }

namespace {

struct Pt {
  real x1, x3, theta, mu1, s;
  real x4, E, eps, m, mu2;
};

Pt unpack(int n, const VecR& u, const ModelParams& p) {
  Pt q;
  q.x1 = u(0);
  q.x3 = u(1);
  q.theta = u(2);
  q.mu1 = u(3);
  q.s = u(4);
  const real ph = kTwoPi * n + q.theta;
  q.x4 = exp(-p.beta * ph);
  q.E = exp(-p.beta * p.nu * ph);
  q.eps = exp(-p.beta * (1 - p.nu) * ph);
  q.m = exp(-q.mu1 * ph);
  q.mu2 = q.s * horn_scale(n, p);
  return q;
}

Mat3 jac_at(int n, const VecR& u, const ModelParams& p) {
  const Pt q = unpack(n, u, p);
  StateS st{q.x1, q.x3, q.x4};
  return model_map_3d(st, Mu{q.mu1, q.mu2}, p).jac;
}

// G without its constant part (1, 1, mu2); second and third differences do not see it.
Vec3 g_var(const Vec3& x, const real& mu1, const ModelParams& p) {
  using std::log;
  using std::pow;
  if (!(x(2) > 0)) throw DomainError("normal form step left x4 > 0");
  const real psi = -log(x(2)) / p.beta;
  const real pn = pow(x(2), p.nu);
  const real pk = pow(x(2), p.kappa(mu1));
  Vec3 g;
  g(0) = p.alpha1 * x(0) * pn * cos(psi + p.phi1) + p.alpha2 * x(1) * pk;
  g(1) = p.alpha3 * x(0) * pn * sin(psi + p.phi2) + p.alpha4 * x(1) * pk;
  g(2) = p.C1 * x(0) * pn * sin(psi) + p.C2 * x(1) * pk;
  return g;
}

struct Scaled {
  Vec3 x;
  Vec3 D;
  real mu1;
  Mat3 Jt;
};

Scaled scaled_at(int n, const VecR& u, const ModelParams& p) {
  const Pt q = unpack(n, u, p);
  Scaled s;
  s.x << q.x1, q.x3, q.x4;
  s.D << 1, 1, q.x4;
  s.mu1 = q.mu1;
  const Mat3 J = jac_at(n, u, p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.Jt(i, j) = J(i, j) * s.D(j) / s.D(i);
  return s;
}

Vec3 gt(const Scaled& s, const Vec3& y, const ModelParams& p) {
  const Vec3 x = s.x + s.D.cwiseProduct(y);
  return g_var(x, s.mu1, p).cwiseQuotient(s.D);
}

Vec3 second_diff(const Scaled& s, const Vec3& q, const real& h, const ModelParams& p) {
  const Vec3 g0 = gt(s, Vec3::Zero(), p);
  return (gt(s, h * q, p) - 2 * g0 + gt(s, -h * q, p)) / (h * h);
}

Vec3 third_diff(const Scaled& s, const Vec3& q, const real& h, const ModelParams& p) {
  return (gt(s, 2 * h * q, p) - 2 * gt(s, h * q, p) + 2 * gt(s, -h * q, p) - gt(s, -2 * h * q, p)) /
         (2 * h * h * h);
}

Vec3 bqq(const Scaled& s, const Vec3& q, const real& h, const ModelParams& p) {
  return (4 * second_diff(s, q, h / 2, p) - second_diff(s, q, h, p)) / 3;
}

Vec3 cqqq(const Scaled& s, const Vec3& q, const real& h, const ModelParams& p) {
  return (4 * third_diff(s, q, h / 2, p) - third_diff(s, q, h, p)) / 3;
}

Vec3 largest_cross(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v[3] = {a.cross(b), a.cross(c), b.cross(c)};
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (v[i].norm() > v[k].norm()) k = i;
  return v[k];
}

// right and left null vectors of Jt - lambda I, q with positive x4 part, p^T q = 1
std::pair<Vec3, Vec3> critical_vectors(const Mat3& Jt, const real& lambda) {
  const Mat3 M = Jt - lambda * Mat3::Identity();
  Vec3 q = largest_cross(M.row(0).transpose(), M.row(1).transpose(), M.row(2).transpose());
  Vec3 w = largest_cross(M.col(0), M.col(1), M.col(2));
  q /= q.norm();
  if (q(2) < 0) q = -q;
  const real pq = w.dot(q);
  if (pq == 0) throw SingularError("critical eigenvector pair is orthogonal");
  return {q, w / pq};
}

}  // namespace

real fold_coefficient(int n, const VecR& u, const ModelParams& p, const real& h) {
  const Scaled s = scaled_at(n, u, p);
  const auto [q, w] = critical_vectors(s.Jt, 1);
  return w.dot(bqq(s, q, h, p)) / 2;
}

real flip_coefficient(int n, const VecR& u, const ModelParams& p, const real& h) {
  const Scaled s = scaled_at(n, u, p);
  const auto [q, w] = critical_vectors(s.Jt, -1);
  const Vec3 b = bqq(s, q, h, p);
  const Vec3 v = (Mat3::Identity() - s.Jt).partialPivLu().solve(b);
  const real nv = v.norm();
  real bv = 0;
  if (nv > 0) {
    const Vec3 z = v / nv;
    bv = w.dot(bqq(s, q + z, h, p) - bqq(s, q - z, h, p)) / 4 * nv;
  }
  return w.dot(cqqq(s, q, h, p)) / 6 + bv / 2;
}

Vec3 fixed_residual_3d(int n, const VecR& u, const ModelParams& p) {
  const Pt q = unpack(n, u, p);
  Vec3 r;
  r(0) = 1 + p.alpha1 * q.x1 * q.E * cos(q.theta + p.phi1) + p.alpha2 * q.x3 * q.E * q.m - q.x1;
  r(1) = 1 + p.alpha3 * q.x1 * q.E * sin(q.theta + p.phi2) + p.alpha4 * q.x3 * q.E * q.m - q.x3;
  r(2) = q.s * exp(p.beta * p.nu * q.theta) + p.C1 * q.x1 * sin(q.theta) + p.C2 * q.x3 * q.m - q.eps;
  return r;
}

FixedPoint3D fixed_point_from_u(int n, const VecR& u, const ModelParams& p) {
  const Pt q = unpack(n, u, p);
  FixedPoint3D f;
  f.n = n;
  f.state = {q.x1, q.x3, q.x4};
  f.mu = {q.mu1, q.mu2};
  f.theta = q.theta;
  f.jac = jac_at(n, u, p);
  f.mult = multipliers(f.jac);
  Vec3 r = fixed_residual_3d(n, u, p);
  r(2) *= q.E;
  f.residual_norm = r.cwiseAbs().maxCoeff();
  return f;
}

namespace {

VecR pack5(const real& a, const real& b, const real& c, const real& d, const real& e) {
  VecR u(5);
  u << a, b, c, d, e;
  return u;
}

VecR monitors3(int n, const VecR& u, const ModelParams& p, Curve3Kind kind, const Map3Options& o) {
  const Mat3 J = jac_at(n, u, p);
  const auto c = char_poly(J);
  const real dm = (J - Mat3::Identity()).determinant();
  const real dp = (J + Mat3::Identity()).determinant();
  const real ns = ns_test(J);
  VecR m;
  switch (kind) {
    case Curve3Kind::LP:
      m.resize(6);
      m << dm, dp, ns, fold_coefficient(n, u, p, o.nf_step), 3 + 2 * c[2] + c[1], u(4);
      break;
    case Curve3Kind::PD:
      m.resize(6);
      m << dm, dp, ns, flip_coefficient(n, u, p, o.nf_step), 3 - 2 * c[2] + c[1], u(4);
      break;
    case Curve3Kind::NS: {
      const real kappa = c[0] - c[2];  // tr J - det J, the unit pair sum when lambda1 lambda2 = 1
      m.resize(7);
      m << dm, dp, ns, kappa, kappa * kappa - 4, kappa + 1, u(4);
      break;
    }
  }
  return m;
}

DefiningSystem system3(int n, const ModelParams& p, const Map3Options& o, Curve3Kind kind) {
  DefiningSystem s;
  s.n_unknowns = 5;
  switch (kind) {
    case Curve3Kind::LP: s.monitor_names = {"det_JmI", "det_JpI", "ns_test", "cp", "r1", "mu2s"}; break;
    case Curve3Kind::PD: s.monitor_names = {"det_JmI", "det_JpI", "ns_test", "gpd", "r2", "mu2s"}; break;
    case Curve3Kind::NS:
      s.monitor_names = {"det_JmI", "det_JpI", "ns_test", "kappa", "ns_pair", "r3", "mu2s"};
      break;
  }
  s.residual = [n, p, kind](const VecR& u) {
    const Vec3 r = fixed_residual_3d(n, u, p);
    const Mat3 J = jac_at(n, u, p);
    const real eps = unpack(n, u, p).eps;
    real t = 0;
    if (kind == Curve3Kind::LP) t = (J - Mat3::Identity()).determinant();
    else if (kind == Curve3Kind::PD) t = (J + Mat3::Identity()).determinant();
    else t = ns_test(J);
    VecR out(4);
    out << r(0), r(1), r(2), eps * t;
    return out;
  };
  s.monitors = [n, p, kind, o](const VecR& u) { return monitors3(n, u, p, kind, o); };
  return s;
}

// Point system: curve system plus a pinned coordinate.
DefiningSystem pinned(const DefiningSystem& sys, int k, const real& value) {
  DefiningSystem s;
  s.n_unknowns = sys.n_unknowns;
  s.residual = [sys, k, value](const VecR& u) {
    const VecR r = sys.residual(u);
    VecR out(r.size() + 1);
    out << r, u(k) - value;
    return out;
  };
  return s;
}

NewtonOptions newton3(const Map3Options& o) {
  NewtonOptions no;
  no.tol = o.newton_tol;
  no.max_iter = 40;
  no.polish = 2;
  return no;
}

HornOptions horn_opts(const Map3Options& o) {
  HornOptions h;
  h.mu1_lo = o.mu1_lo;
  h.mu1_hi = o.mu1_hi;
  h.s_bound = o.s_bound;
  h.newton_tol = o.newton_tol;
  return h;
}

ContinuationOptions cont3(int n, const ModelParams& p, const Map3Options& o) {
  const DerivedConstants d = derived_constants(p);
  const real tc = d.theta0 + d.phi0;
  ContinuationOptions co;
  co.step.h0 = o.h0;
  co.step.h_max = o.h_max;
  co.step.h_min = o.h_min;
  co.newton = newton3(o);
  co.max_points = o.max_points;
  co.box.lo = pack5(-o.x_bound, -o.x_bound, tc - kPi, o.mu1_lo, -o.s_bound);
  co.box.hi = pack5(o.x_bound, o.x_bound, tc + kPi, o.mu1_hi, o.s_bound);
  const ScalarBifPoint cusp = find_cusp(n, p, horn_opts(o));
  using std::log;
  const real width = sqrt(exp((1 - p.nu) * log(cusp.x)));
  const real tcs = cusp.theta;
  const real f = o.cusp_step;
  co.step.cap = [tcs, width, f](const VecR& u) { return f * std::max(abs(u(2) - tcs), width); };
  return co;
}

Curve trace3(int n, const ModelParams& p, const Map3Options& o, Curve3Kind kind) {
  const real mu1s = std::clamp(horn_seed_mu1(n, p), o.mu1_lo, o.mu1_hi);
  ThetaSeeds seeds;
  try {
    seeds = horn_theta_seeds(n, mu1s, p);
  } catch (const DomainError&) {
    throw NotFoundError(to_string(kind) + ": no real theta seed for mu1 in the requested range");
  }
  const real th = seeds.theta2;
  const real x4 = x_of_theta(n, th, p);
  const Vec3 g = model_map_3d_image(Vec3(1, 1, x4), Mu{mu1s, 0}, p);
  const real s0 = horn_branch_mu2(n, mu1s, 2, p) / horn_scale(n, p);
  const DefiningSystem sys = system3(n, p, o, kind);
  const NewtonResult r = newton_solve(pinned(sys, 3, mu1s), pack5(g(0), g(1), th, mu1s, s0), newton3(o));
  VecR dir = VecR::Zero(5);
  dir(2) = 1;
  Curve c = continue_both_ways(sys, r.u, dir, cont3(n, p, o));
  c.index = n;
  return c;
}

}  // namespace

DefiningSystem lp3_system(int n, const ModelParams& p, const Map3Options& o) {
  return system3(n, p, o, Curve3Kind::LP);
}
DefiningSystem pd3_system(int n, const ModelParams& p, const Map3Options& o) {
  return system3(n, p, o, Curve3Kind::PD);
}
DefiningSystem ns3_system(int n, const ModelParams& p, const Map3Options& o) {
  return system3(n, p, o, Curve3Kind::NS);
}

FixedPoint3D find_fixed_point_3d(const Mu& mu, const ModelParams& p, int n, int root_index) {
  if (n < 1) throw DomainError("find_fixed_point_3d: n must be >= 1");
  if (root_index < 0) throw DomainError("find_fixed_point_3d: root_index must be >= 0");
  const DerivedConstants d = derived_constants(p);
  const real tc = d.theta0 + d.phi0;
  const std::vector<real> roots = scalar_fixed_thetas(n, mu, p, tc - kPi, tc + kPi);
  if (static_cast<int>(roots.size()) <= root_index)
    throw NotFoundError("find_fixed_point_3d: scalar map has " + std::to_string(roots.size()) +
                        " roots on branch " + std::to_string(n));
  const real th = roots[root_index];
  const real x4 = x_of_theta(n, th, p);
  const Vec3 g = model_map_3d_image(Vec3(1, 1, x4), mu, p);
  const real s = mu.mu2 / horn_scale(n, p);
  DefiningSystem sys;
  sys.n_unknowns = 3;
  sys.residual = [n, p, mu, s](const VecR& v) {
    const Vec3 r = fixed_residual_3d(n, pack5(v(0), v(1), v(2), mu.mu1, s), p);
    return VecR(r);
  };
  VecR v(3);
  v << g(0), g(1), th;
  NewtonOptions no;
  no.tol = real(1e-28);
  no.max_iter = 40;
  const NewtonResult r = newton_solve(sys, v, no);
  return fixed_point_from_u(n, pack5(r.u(0), r.u(1), r.u(2), mu.mu1, s), p);
}

real scalar_x4_gap(int n, const VecR& u, Curve3Kind kind, const ModelParams& p) {
  const FixedPoint3D f = fixed_point_from_u(n, u, p);
  const real x4 = f.state.x4;
  const real scale = exp(2 * p.nu * log(x4));
  const std::vector<real> roots = scalar_fixed_thetas(n, f.mu, p, f.theta - 1, f.theta + 1);
  if (!roots.empty()) {
    real best = std::numeric_limits<real>::infinity();
    for (const real& t : roots) best = std::min(best, abs(x_of_theta(n, t, p) - x4));
    return best / scale;
  }
  if (kind == Curve3Kind::NS) throw NotFoundError("scalar_x4_gap: no scalar root near the NS point");
  // no root at this mu: past a scalar fold, compare with the scalar curve at the same mu1
  const DefiningSystem base = kind == Curve3Kind::LP ? scalar_lp_system(n, p) : scalar_pd_system(n, p);
  const real mu1 = u(3);
  DefiningSystem sys;
  sys.n_unknowns = 3;
  sys.residual = [base, mu1](const VecR& v) {
    const VecR r = base.residual(v);
    VecR out(3);
    out << r(0), r(1), v(1) - mu1;
    return out;
  };
  VecR v(3);
  v << u(2), u(3), u(4);
  NewtonOptions no;
  no.tol = real(1e-26);
  no.max_iter = 40;
  const NewtonResult r = newton_solve(sys, v, no);
  return abs(x_of_theta(n, r.u(0), p) - x4) / scale;
}

Curve trace_lp3(int n, const ModelParams& p, const Map3Options& o) {
  return trace3(n, p, o, Curve3Kind::LP);
}

Curve trace_pd3(int n, const ModelParams& p, const Map3Options& o) {
  return trace3(n, p, o, Curve3Kind::PD);
}

namespace {

RefineOptions refine3(const Map3Options& o) {
  RefineOptions ro;
  ro.newton = newton3(o);
  ro.monitor_tol = real(1e-22);
  ro.width_tol = real(1e-26);
  return ro;
}

// A pole flips sign without passing through zero: |monitor| then shrinks, instead of
// growing, between distance delta and 100 delta from the refined point.
bool is_pole(const DefiningSystem& sys, const Curve& c, std::size_t i, const CurvePoint& cp,
             int idx, const Map3Options& o) {
  const VecR d = c.points[i + 1].u - c.points[i].u;
  int k = 0;
  for (int j = 1; j < d.size(); ++j)
    if (abs(d(j)) > abs(d(k))) k = j;
  auto mon_at = [&](const real& off) {
    const VecR u = newton_solve(pinned(sys, k, cp.u(k) + off), cp.u, newton3(o)).u;
    return abs(sys.monitors(u)(idx));
  };
  const real delta = real(1e-5) * abs(d(k));
  try {
    for (int sgn : {-1, 1})
      if (!(mon_at(sgn * delta) < mon_at(sgn * 100 * delta))) return true;
  } catch (const std::runtime_error&) {
    return true;
  }
  return false;
}

Codim2Point3D make_c2(Codim2Kind k, Curve3Kind on, int n, const CurvePoint& cp, int idx,
                      const ModelParams& p) {
  Codim2Point3D c;
  c.kind = k;
  c.on = on;
  c.u = cp.u;
  c.fp = fixed_point_from_u(n, cp.u, p);
  c.test_value = cp.monitors(idx);
  return c;
}

}  // namespace

std::vector<Codim2Point3D> detect_codim2_3d(const Curve& c, Curve3Kind kind, int n,
                                            const ModelParams& p, const Map3Options& o) {
  const DefiningSystem sys = system3(n, p, o, kind);
  std::vector<std::pair<std::string, Codim2Kind>> tests;
  switch (kind) {
    case Curve3Kind::LP:
      tests = {{"cp", Codim2Kind::CP}, {"r1", Codim2Kind::R1}, {"det_JpI", Codim2Kind::LPPD}};
      break;
    case Curve3Kind::PD:
      tests = {{"gpd", Codim2Kind::GPD}, {"r2", Codim2Kind::R2}, {"det_JmI", Codim2Kind::LPPD}};
      break;
    case Curve3Kind::NS:
      tests = {{"ns_pair", Codim2Kind::R1}, {"r3", Codim2Kind::R3}, {"kappa", Codim2Kind::R4}};
      break;
  }
  std::vector<Codim2Point3D> out;
  const RefineOptions ro = refine3(o);
  for (const auto& [name, k] : tests) {
    const int idx = c.monitor_index(name);
    for (std::size_t i : sign_changes(c, name)) {
      CurvePoint cp;
      try {
        cp = refine_sign_change(sys, c, name, i, ro);
      } catch (const std::runtime_error&) {
        continue;
      }
      if ((k == Codim2Kind::CP || k == Codim2Kind::GPD) && is_pole(sys, c, i, cp, idx, o)) continue;
      Codim2Kind kk = k;
      if (kind == Curve3Kind::NS && name == "ns_pair")
        kk = cp.monitors(c.monitor_index("kappa")) > 0 ? Codim2Kind::R1 : Codim2Kind::R2;
      out.push_back(make_c2(kk, kind, n, cp, idx, p));
    }
  }
  return out;
}

NSCurve trace_ns3(const Codim2Point3D& seed, int n, const ModelParams& p, const Map3Options& o) {
  if (seed.kind != Codim2Kind::R1 && seed.kind != Codim2Kind::R2)
    throw DomainError("trace_ns3: seed must be an R1 or R2 point");
  NSCurve res;
  res.start = to_string(seed.kind);
  res.points.push_back(seed);
  const DefiningSystem sys = system3(n, p, o, Curve3Kind::NS);
  const VecR u0 = newton_solve(pinned(sys, 3, seed.u(3)), seed.u, newton3(o)).u;
  const int ipair = sys.monitor_index("ns_pair");

  const int ikappa = sys.monitor_index("kappa");
  // kappa varies like x4^(nu-1) along the NS set, so steps are scaled by its rate
  VecR t = curve_tangent(sys, u0, VecR::Zero(5));
  const real dl = real(1e-14);
  const real rate = (sys.monitors(u0 + dl * t)(ikappa) - sys.monitors(u0 - dl * t)(ikappa)) / (2 * dl);
  if (!(abs(rate) > 0)) throw SingularError("trace_ns3: kappa does not vary along the NS set at the seed");
  // into the unit circle: kappa decreases from R1 (kappa = 2), increases from R2 (kappa = -2)
  if ((seed.kind == Codim2Kind::R1) == (rate > 0)) t = -t;
  const real g = abs(rate);

  ContinuationOptions co = cont3(n, p, o);
  co.step.h0 = real(1e-3) / g;
  co.step.h_max = real(2e-2) / g;
  co.step.h_min = real(1e-16) / g;
  co.step.cap = nullptr;
  co.detect_loop = false;
  // leaving the unit circle ends the segment
  co.stop = [ipair](const CurvePoint& a, const CurvePoint& b) {
    return a.monitors(ipair) < 0 && b.monitors(ipair) > 0;
  };
  Curve best = continue_curve(sys, u0, t, co);
  if (best.points.size() < 2 || !(best.points[1].monitors(ipair) < 0)) {
    res.neutral_saddle = true;
    res.end = "neutral saddle";
    return res;
  }
  best.index = n;
  if (best.termination == "stopped") {
    const std::size_t i = best.points.size() - 2;
    const CurvePoint cp = refine_sign_change(sys, best, "ns_pair", i, refine3(o));
    best.points.back() = cp;
    const bool r1 = cp.monitors(sys.monitor_index("kappa")) > 0;
    res.end = r1 ? "R1" : "R2";
    res.points.push_back(make_c2(r1 ? Codim2Kind::R1 : Codim2Kind::R2, Curve3Kind::NS, n, cp, ipair, p));
  } else {
    res.end = best.termination;
  }
  for (auto& c2 : detect_codim2_3d(best, Curve3Kind::NS, n, p, o))
    if (c2.kind == Codim2Kind::R3 || c2.kind == Codim2Kind::R4) res.points.push_back(c2);
  res.curve = std::move(best);
  return res;
}

}  // namespace tdl
