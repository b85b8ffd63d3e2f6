#include "tdl/lorenz_stenflo.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "tdl/errors.hpp"

namespace tdl::ls {

namespace odeint = boost::numeric::odeint;

void LSParams::validate() const {
  for (double v : {sigma, r, b, s, eps1, eps2})
    if (!std::isfinite(v)) throw DomainError("LSParams: non-finite value");
  if (!(b > 0)) throw DomainError("LSParams: b must be positive");
}

LSParams profile(const std::string& name) {
  LSParams p;
  if (name == "paper-3dl") return p;
  if (name == "sigma1") {
    p.sigma = 1.0;
    return p;
  }
  throw DomainError("unknown LS profile '" + name + "'");
}

std::vector<std::string> profile_names() { return {"paper-3dl", "sigma1"}; }

State rhs(const State& v, const LSParams& p) {
  const double x = v(0), y = v(1), z = v(2), u = v(3);
  return {p.sigma * (y - x) + p.s * u, p.r * x - x * z - y + p.eps1 * z, x * y - p.b * z,
          -x - p.sigma * u + p.eps2 * y};
}

Jac jacobian(const State& v, const LSParams& p) {
  const double x = v(0), y = v(1), z = v(2);
  Jac J;
  J << -p.sigma, p.sigma, 0, p.s,
       p.r - z, -1, -x + p.eps1, 0,
       y, x, -p.b, 0,
       -1, p.eps2, 0, -p.sigma;
  return J;
}

namespace {

Eigen::Matrix3d block(const LSParams& p) {
  Eigen::Matrix3d B;
  B << -p.sigma, p.sigma, p.s,
       p.r, -1, 0,
       -1, p.eps2, -p.sigma;
  return B;
}

cplx peval(const std::array<double, 3>& c, cplx l) { return ((l + c[2]) * l + c[1]) * l + c[0]; }
cplx dpeval(const std::array<double, 3>& c, cplx l) { return (3.0 * l + 2.0 * c[2]) * l + c[1]; }

}  // namespace

std::array<double, 3> block_char_poly(const LSParams& p) {
  const Eigen::Matrix3d B = block(p);
  const double tr = B.trace();
  const double m2 = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0) + B(0, 0) * B(2, 2) - B(0, 2) * B(2, 0) +
                    B(1, 1) * B(2, 2) - B(1, 2) * B(2, 1);
  return {-B.determinant(), m2, -tr};
}

EigenData equilibrium_eigenvalues(const LSParams& p) {
  p.validate();
  const auto c = block_char_poly(p);
  Eigen::EigenSolver<Eigen::Matrix3d> es(block(p), false);
  std::array<cplx, 3> roots;
  for (int i = 0; i < 3; ++i) {
    cplx l = es.eigenvalues()(i);
    for (int it = 0; it < 4; ++it) {
      const cplx d = dpeval(c, l);
      if (std::abs(d) == 0) break;
      l -= peval(c, l) / d;
    }
    roots[i] = l;
  }
  // conjugate pairs stay exact conjugates
  for (auto& l : roots)
    if (std::abs(l.imag()) < 1e-12 * (1 + std::abs(l))) l = {l.real(), 0};
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });

  EigenData e;
  const double cn = std::sqrt(1 + c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  for (const auto& l : roots) e.residual = std::max(e.residual, std::abs(peval(c, l)) / cn);
  if (!(e.residual < 1e-8))
    throw ConvergenceError("equilibrium_eigenvalues: residual " + std::to_string(e.residual));
  e.real_stable = -p.b;
  e.lambda = {cplx(-p.b, 0), roots[0], roots[1], roots[2]};
  for (const auto& l : roots) {
    if (l.imag() > 0) {
      e.has_pair = true;
      e.delta0 = l.real();
      e.omega0 = l.imag();
    }
    if (l.imag() == 0 && l.real() > e.eps0) e.eps0 = l.real();
  }
  // leading stable: largest real part among stable eigenvalues
  double lead = -std::numeric_limits<double>::infinity();
  for (const auto& l : e.lambda)
    if (l.real() < 0) lead = std::max(lead, l.real());
  if (e.eps0 > 0 && std::isfinite(lead)) {
    e.nu0 = -lead / e.eps0;
    e.sigma0 = lead + e.eps0;
  }
  return e;
}

LocusResult find_3dl_locus(const LSParams& p0, LocusFree free, double lo, double hi, const LocusOptions& o) {
  if (!(lo <= hi) || o.n_grid < 1) throw DomainError("find_3dl_locus: empty range");
  if (!(o.tol > 0) || !(o.verify > 0)) throw DomainError("find_3dl_locus: tolerances must be positive");
  LocusResult res;
  for (int i = 0; i < o.n_grid; ++i) {
    const double g = o.n_grid == 1 ? lo : lo + (hi - lo) * i / (o.n_grid - 1);
    LSParams p = p0;
    (free == LocusFree::B ? p.r : p.b) = g;
    auto f = [&](double v) {
      LSParams q = p;
      (free == LocusFree::B ? q.b : q.r) = v;
      const EigenData e = equilibrium_eigenvalues(q);
      if (!e.has_pair) throw NotFoundError("no complex pair");
      return e.delta0 + q.b;
    };
    try {
      double a = o.bracket_lo, b = o.bracket_hi;
      const double fa = f(a), fb = f(b);
      if (fa * fb > 0) throw NotFoundError("no sign change in bracket");
      boost::uintmax_t iters = 200;
      const auto tol = [&](double x, double y) { return std::abs(x - y) <= o.tol; };
      const auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
      const double v = 0.5 * (br.first + br.second);
      LSParams q = p;
      (free == LocusFree::B ? q.b : q.r) = v;
      const EigenData e = equilibrium_eigenvalues(q);
      LocusPoint lp{q.r, q.b, e.delta0, std::abs(e.delta0 + q.b)};
      if (!e.has_pair || !(lp.residual < o.verify))
        throw ConvergenceError("locus point fails verification");
      res.points.push_back(lp);
    } catch (const std::runtime_error& ex) {
      res.truncated = true;
      res.message = std::string(ex.what()) + " at " + (free == LocusFree::B ? "r=" : "b=") + std::to_string(g);
      break;
    }
  }
  return res;
}

namespace {

using OdeState = std::array<double, 4>;

State to_state(const OdeState& a) { return {a[0], a[1], a[2], a[3]}; }
OdeState to_ode(const State& s) { return {s(0), s(1), s(2), s(3)}; }

auto make_stepper(double abs_tol, double rel_tol) {
  return odeint::make_dense_output(abs_tol, rel_tol, odeint::runge_kutta_dopri5<OdeState>());
}

struct System {
  const LSParams* p;
  void operator()(const OdeState& x, OdeState& dx, double) const { dx = to_ode(rhs(to_state(x), *p)); }
};

template <class Stepper>
void advance(Stepper& st, const System& sys, std::size_t& steps, std::size_t max_steps) {
  const double t0 = st.current_time();
  st.do_step(sys);
  if (++steps > max_steps) throw ConvergenceError("integrate: step count limit exceeded");
  const double dt = st.current_time() - t0;
  if (!(dt > 1e-14 * std::max(1.0, std::abs(t0))))
    throw ConvergenceError("integrate: step size underflow at t=" + std::to_string(t0));
  for (double v : st.current_state())
    if (!std::isfinite(v)) throw ConvergenceError("integrate: non-finite state");
}

}  // namespace

Trajectory integrate(const State& x0, const std::vector<double>& times, const LSParams& p, double rel_tol,
                     double abs_tol, std::size_t max_steps) {
  p.validate();
  if (times.empty()) throw DomainError("integrate: no sample times");
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw DomainError("integrate: tolerances must be positive");
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("integrate: times must increase");
  for (int i = 0; i < 4; ++i)
    if (!std::isfinite(x0(i))) throw DomainError("integrate: non-finite initial state");
  Trajectory tr;
  System sys{&p};
  auto st = make_stepper(abs_tol, rel_tol);
  st.initialize(to_ode(x0), times.front(), 1e-3);
  OdeState buf;
  for (double t : times) {
    while (st.current_time() < t) advance(st, sys, tr.steps, max_steps);
    if (t == st.current_time())
      buf = st.current_state();
    else
      st.calc_state(t, buf);
    tr.t.push_back(t);
    tr.x.push_back(to_state(buf));
  }
  return tr;
}

State unstable_eigenvector(const LSParams& p) {
  const EigenData e = equilibrium_eigenvalues(p);
  if (!(e.eps0 > 0)) throw DomainError("unstable_eigenvector: no positive real eigenvalue");
  // null vector of (J - eps0 I) by full-pivot LU kernel
  const Jac A = jacobian(State::Zero(), p) - e.eps0 * Jac::Identity();
  Eigen::FullPivLU<Jac> lu(A);
  lu.setThreshold(1e-10);
  Eigen::MatrixXd ker = lu.kernel();
  if (ker.cols() < 1) throw ConvergenceError("unstable_eigenvector: empty kernel");
  State v = ker.col(0).normalized();
  if (v(0) < 0) v = -v;
  return v;
}

std::array<ShootBranch, 2> unstable_manifold_shoot(const LSParams& p, const ShootOptions& o) {
  if (!(o.delta >= 1e-8 && o.delta <= 1e-4)) throw DomainError("unstable_manifold_shoot: delta outside [1e-8, 1e-4]");
  if (!(o.t_max > 0) || !(o.escape_radius > o.delta)) throw DomainError("unstable_manifold_shoot: bad t_max or escape radius");
  const State v = unstable_eigenvector(p);
  std::array<ShootBranch, 2> out;
  System sys{&p};
  const double nn = o.section.normal.norm();
  if (!(nn > 0)) throw DomainError("unstable_manifold_shoot: zero section normal");

  for (int k = 0; k < 2; ++k) {
    ShootBranch& br = out[k];
    br.sign = k == 0 ? 1 : -1;
    br.min_distance = std::numeric_limits<double>::infinity();
    auto st = make_stepper(o.abs_tol, o.rel_tol);
    st.initialize(to_ode(br.sign * o.delta * v), 0.0, 1e-3);
    std::size_t steps = 0;
    OdeState buf;
    auto at = [&](double t) {
      st.calc_state(t, buf);
      return to_state(buf);
    };
    auto g = [&](const State& x) { return (o.section.normal.dot(x) - o.section.offset) / nn; };
    double g_prev = g(to_state(st.current_state()));
    double run_max = 0;
    bool returning = false;
    try {
      while (st.current_time() < o.t_max) {
        const double t0 = st.current_time();
        advance(st, sys, steps, 5000000);
        const double t1 = std::min(st.current_time(), o.t_max);
        const State x1 = at(t1);
        const double g1 = g(x1);
        if (g_prev * g1 < 0 || (g1 == 0 && g_prev != 0)) {
          const int dir = g1 > g_prev ? 1 : -1;
          if (o.section.direction == 0 || o.section.direction == dir) {
            boost::uintmax_t it = 100;
            auto f = [&](double t) { return g(at(t)); };
            const auto r = boost::math::tools::toms748_solve(
                f, t0, t1, g_prev, g1, boost::math::tools::eps_tolerance<double>(50), it);
            const double tc = 0.5 * (r.first + r.second);
            br.crossings.push_back({tc, at(tc)});
          }
        }
        g_prev = g1;
        // distance samples inside the step
        constexpr int kSub = 8;
        for (int j = 1; j <= kSub; ++j) {
          const double t = t0 + (t1 - t0) * j / kSub;
          const double d = at(t).norm();
          if (!br.escaped) {
            if (d >= o.escape_radius) br.escaped = true;
            continue;
          }
          run_max = std::max(run_max, d);
          if (!returning) {
            if (d >= 0.5 * run_max) continue;
            returning = true;
          }
          if (d < br.min_distance) {
            const double a = t0 + (t1 - t0) * (j - 1) / kSub, b = std::min(t1, t0 + (t1 - t0) * (j + 1) / kSub);
            const auto m = boost::math::tools::brent_find_minima([&](double s) { return at(s).norm(); }, a, b, 40);
            br.min_distance = std::min(d, m.second);
            br.t_min = m.second < d ? m.first : t;
            br.x_min = at(br.t_min);
          }
        }
      }
    } catch (const ConvergenceError& e) {
      br.note = e.what();
    }
    if (!br.escaped && br.note.empty()) br.note = "did not reach escape radius before t_max";
    if (br.escaped && !returning && br.note.empty()) br.note = "no return toward the origin before t_max";
    if (br.crossings.empty() && br.note.empty()) br.note = "no section crossing before t_max";
  }
  return out;
}

}  // namespace tdl::ls
