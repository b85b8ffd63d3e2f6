#include "tdl/continuation.hpp"

#include <algorithm>
#include <cmath>

#include "tdl/errors.hpp"

namespace tdl {

using std::abs;
using std::sqrt;

namespace {

real inf_norm(const VecR& v) {
  real m = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) m = std::max(m, abs(v(i)));
  return m;
}

bool all_finite(const VecR& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!boost::multiprecision::isfinite(v(i))) return false;
  return true;
}

// Condition estimate after row/column equilibration, so that the badly
// scaled but well-posed systems (mu2 ~ 1e-60 next to theta ~ 1) pass.
real scaled_condition(MatR J) {
  const Eigen::Index n = J.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    real m = J.row(i).cwiseAbs().maxCoeff();
    if (m == 0) return std::numeric_limits<real>::infinity();
    J.row(i) /= m;
  }
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    real m = J.col(j).cwiseAbs().maxCoeff();
    if (m == 0) return std::numeric_limits<real>::infinity();
    J.col(j) /= m;
  }
  Eigen::JacobiSVD<MatR> svd(J);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) == 0) return std::numeric_limits<real>::infinity();
  return s(0) / s(s.size() - 1);
}

DefiningSystem bordered(const DefiningSystem& sys, const VecR& t, const VecR& anchor,
                        const real& offset) {
  DefiningSystem aug;
  aug.n_unknowns = sys.n_unknowns;
  aug.fd_rel_step = sys.fd_rel_step;
  aug.residual = [&sys, t, anchor, offset](const VecR& u) {
    VecR r = sys.residual(u);
    VecR out(r.size() + 1);
    out.head(r.size()) = r;
    out(r.size()) = t.dot(u - anchor) - offset;
    return out;
  };
  aug.jacobian = [&sys, t](const VecR& u) {
    MatR J = system_jacobian(sys, u);
    MatR out(J.rows() + 1, J.cols());
    out.topRows(J.rows()) = J;
    out.row(J.rows()) = t.transpose();
    return out;
  };
  return aug;
}

}  // namespace

int DefiningSystem::monitor_index(const std::string& name) const {
  for (std::size_t i = 0; i < monitor_names.size(); ++i)
    if (monitor_names[i] == name) return static_cast<int>(i);
  return -1;
}

int Curve::monitor_index(const std::string& name) const {
  for (std::size_t i = 0; i < monitor_names.size(); ++i)
    if (monitor_names[i] == name) return static_cast<int>(i);
  return -1;
}

bool DomainBox::contains(const VecR& u) const {
  if (lo.size() == 0) return true;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (u(i) < lo(i) || u(i) > hi(i)) return false;
  return true;
}

MatR system_jacobian(const DefiningSystem& sys, const VecR& u) {
  if (sys.jacobian) return sys.jacobian(u);
  const VecR r0 = sys.residual(u);
  MatR J(r0.size(), u.size());
  VecR up = u, um = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const real h = sys.fd_rel_step * std::max(real(1), abs(u(j)));
    up(j) = u(j) + h;
    um(j) = u(j) - h;
    J.col(j) = (sys.residual(up) - sys.residual(um)) / (2 * h);
    up(j) = u(j);
    um(j) = u(j);
  }
  return J;
}

NewtonResult newton_solve(const DefiningSystem& sys, const VecR& u0, const NewtonOptions& opt) {
  VecR u = u0;
  VecR F = sys.residual(u);
  if (F.size() != u.size())
    throw DomainError("newton_solve needs a square system (" + std::to_string(F.size()) +
                      " residuals, " + std::to_string(u.size()) + " unknowns)");
  if (!all_finite(F)) throw ConvergenceError("newton_solve: residual not finite at seed");
  real norm = inf_norm(F);
  std::vector<real> hist{norm};
  int it = 0;
  for (; it < opt.max_iter && !(norm < opt.tol); ++it) {
    const MatR J = system_jacobian(sys, u);
    const real cond = scaled_condition(J);
    if (!(cond < opt.max_cond))
      throw SingularError("newton_solve: singular Jacobian (condition estimate " +
                          boost::multiprecision::float128(cond).str(3) + ")");
    const VecR du = J.fullPivLu().solve(-F);
    u += du;
    F = sys.residual(u);
    if (!all_finite(F) || !all_finite(u))
      throw ConvergenceError("newton_solve: iterate left the domain of the residual");
    norm = inf_norm(F);
    hist.push_back(norm);
  }
  if (!(norm < opt.tol))
    throw ConvergenceError("newton_solve: no convergence after " + std::to_string(opt.max_iter) +
                           " iterations, residual " + norm.str(3));

  NewtonResult res;
  const std::size_t k = hist.size();
  // quadratic if the last reduction beat the square of the previous one (up to a factor)
  if (k >= 3 && hist[k - 2] < 1 && hist[k - 2] > 0)
    res.quadratic = hist[k - 1] <= 10 * hist[k - 2] * hist[k - 2] || hist[k - 1] < opt.tol * opt.tol;
  else if (k == 2)
    res.quadratic = true;

  for (int p = 0; p < opt.polish && norm > 0; ++p) {
    const MatR J = system_jacobian(sys, u);
    const VecR v = u + J.fullPivLu().solve(-F);
    const VecR Fv = sys.residual(v);
    if (!all_finite(Fv)) break;
    const real nv = inf_norm(Fv);
    if (!(nv < norm)) break;
    u = v;
    F = Fv;
    norm = nv;
  }
  res.u = u;
  res.residual_norm = norm;
  res.iterations = it;
  return res;
}

CurvePoint make_point(const DefiningSystem& sys, const VecR& u, const VecR& tangent, const real& step) {
  CurvePoint p;
  p.u = u;
  p.tangent = tangent;
  p.step = step;
  p.residual_norm = inf_norm(sys.residual(u));
  if (sys.monitors) p.monitors = sys.monitors(u);
  return p;
}

VecR curve_tangent(const DefiningSystem& sys, const VecR& u, const VecR& direction) {
  const MatR J = system_jacobian(sys, u);
  if (J.rows() + 1 != u.size())
    throw DomainError("curve_tangent: system must have n_unknowns - 1 residuals");
  // null vector of J via a bordered solve with the best-conditioned border
  Eigen::FullPivLU<MatR> lu(J);
  MatR K = lu.kernel();
  VecR t = K.col(0);
  t /= t.norm();
  if (direction.size() == t.size() && t.dot(direction) < 0) t = -t;
  return t;
}

Curve continue_curve(const DefiningSystem& sys, const VecR& u0, const VecR& direction,
                     const ContinuationOptions& opt) {
  Curve c;
  c.monitor_names = sys.monitor_names;
  const VecR r0 = sys.residual(u0);
  if (r0.size() + 1 != u0.size())
    throw DomainError("continue_curve: system must have n_unknowns - 1 residuals");
  if (!(inf_norm(r0) < opt.newton.tol))
    throw ConvergenceError("continue_curve: seed not converged (residual " + inf_norm(r0).str(3) + ")");
  if (!opt.box.contains(u0)) throw DomainError("continue_curve: seed outside the domain box");

  const real cos_max = std::cos(to_double(opt.step.theta_max_deg) * 3.14159265358979323846 / 180);
  VecR u = u0;
  VecR t = curve_tangent(sys, u0, direction);
  c.points.push_back(make_point(sys, u0, t, 0));

  real h = opt.step.h0;
  int successes = 0;
  real travelled = 0;
  c.termination = "max points";
  while (static_cast<int>(c.points.size()) < opt.max_points) {
    real hh = h;
    if (opt.step.cap) hh = std::min(hh, std::max(opt.step.cap(u), opt.step.h_min));
    if (hh < opt.step.h_min) {
      if (c.points.size() == 1)
        throw ConvergenceError("continue_curve: corrector failed down to h_min at the seed");
      c.termination = "step underflow";
      break;
    }
    const VecR pred = u + hh * t;
    DefiningSystem aug = bordered(sys, t, pred, 0);
    VecR v = pred;
    bool ok = false;
    real prev_norm = std::numeric_limits<real>::infinity();
    for (int k = 0; k <= opt.max_corrector_iter; ++k) {
      VecR R = aug.residual(v);
      if (!all_finite(R)) break;
      const real nr = inf_norm(R);
      if (nr < opt.newton.tol) {
        ok = true;
        break;
      }
      if (k == opt.max_corrector_iter || (k > 1 && !(nr < prev_norm))) break;
      prev_norm = nr;
      const MatR J = aug.jacobian(v);
      v += J.fullPivLu().solve(-R);
      if (!all_finite(v)) break;
    }
    VecR tn;
    if (ok) {
      ok = (v - pred).norm() <= hh;
      if (ok) {
        const MatR J = system_jacobian(sys, v);
        MatR B(J.rows() + 1, J.cols());
        B.topRows(J.rows()) = J;
        B.row(J.rows()) = t.transpose();
        VecR e = VecR::Zero(B.rows());
        e(B.rows() - 1) = 1;
        tn = B.fullPivLu().solve(e);
        tn /= tn.norm();
        ok = all_finite(tn) && t.dot(tn) >= cos_max;
      }
    }
    if (!ok) {
      h = hh / 2;
      successes = 0;
      if (h < opt.step.h_min) {
        if (c.points.size() == 1)
          throw ConvergenceError("continue_curve: corrector failed down to h_min at the seed");
        c.termination = "step underflow";
        break;
      }
      continue;
    }
    if (!opt.box.contains(v)) {
      c.termination = "left domain";
      break;
    }
    CurvePoint cp = make_point(sys, v, tn, hh);
    travelled += (v - u).norm();
    if (opt.detect_loop && c.points.size() >= 3 && travelled > 4 * hh) {
      const VecR seg = v - u;
      const real L2 = seg.squaredNorm();
      real s = L2 > 0 ? real((u0 - u).dot(seg) / L2) : real(0);
      s = std::clamp(s, real(0), real(1));
      const real dist = (u + s * seg - u0).norm();
      if (dist < real(0.5) * sqrt(L2)) {
        CurvePoint closing = c.points.front();
        closing.step = hh;
        c.points.push_back(closing);
        c.termination = "closed loop";
        break;
      }
    }
    c.points.push_back(cp);
    if (opt.stop && opt.stop(c.points[c.points.size() - 2], c.points.back())) {
      c.termination = "stopped";
      break;
    }
    u = v;
    t = tn;
    if (++successes >= 3) {
      h = std::min(h * real(1.3), opt.step.h_max);
      successes = 0;
    }
  }
  return c;
}

Curve continue_both_ways(const DefiningSystem& sys, const VecR& u0, const VecR& direction,
                         const ContinuationOptions& opt) {
  Curve plus = continue_curve(sys, u0, direction, opt);
  if (plus.termination == "closed loop") return plus;
  Curve minus = continue_curve(sys, u0, VecR(-direction), opt);
  Curve c;
  c.monitor_names = plus.monitor_names;
  for (std::size_t k = minus.points.size(); k-- > 1;) {
    CurvePoint p = minus.points[k];
    p.tangent = -p.tangent;
    c.points.push_back(p);
  }
  for (const auto& p : plus.points) c.points.push_back(p);
  c.termination = minus.termination + " | " + plus.termination;
  return c;
}

std::vector<std::size_t> sign_changes(const Curve& curve, const std::string& monitor) {
  std::vector<std::size_t> out;
  const int idx = curve.monitor_index(monitor);
  if (idx < 0) throw DomainError("unknown monitor " + monitor);
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    const real a = curve.points[i].monitors(idx);
    const real b = curve.points[i + 1].monitors(idx);
    if ((a < 0 && b > 0) || (a > 0 && b < 0)) out.push_back(i);
  }
  return out;
}

CurvePoint refine_sign_change(const DefiningSystem& sys, const Curve& curve,
                              const std::string& monitor, std::size_t i, const RefineOptions& opt) {
  const int idx = curve.monitor_index(monitor);
  if (idx < 0) throw DomainError("unknown monitor " + monitor);
  if (i + 1 >= curve.points.size()) throw DomainError("refine_sign_change: index out of range");
  const CurvePoint& A = curve.points[i];
  const CurvePoint& B = curve.points[i + 1];
  real flo = A.monitors(idx), fhi = B.monitors(idx);
  if (flo == 0) return A;
  if (fhi == 0) return B;
  if ((flo > 0) == (fhi > 0))
    throw NotFoundError("refine_sign_change: no sign change of " + monitor + " on segment " +
                        std::to_string(i));

  const VecR d = B.u - A.u;
  const real Ld = d.norm();
  const VecR dh = d / Ld;

  auto project = [&](const real& sigma) {
    DefiningSystem aug = bordered(sys, dh, A.u, sigma);
    NewtonOptions no = opt.newton;
    no.polish = 1;
    NewtonResult r = newton_solve(aug, A.u + sigma * dh, no);
    return r.u;
  };
  auto mon = [&](const VecR& u) { return sys.monitors(u)(idx); };

  real lo = 0, hi = Ld;
  int side = 0;
  real best_m = abs(flo) < abs(fhi) ? flo : fhi;
  VecR best = abs(flo) < abs(fhi) ? A.u : B.u;
  for (int it = 0; it < opt.max_iter; ++it) {
    real sigma = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(sigma > lo && sigma < hi)) sigma = (lo + hi) / 2;
    const VecR u = project(sigma);
    const real m = mon(u);
    if (abs(m) < abs(best_m)) {
      best_m = m;
      best = u;
    }
    if (m == 0) break;
    if ((m > 0) == (fhi > 0)) {
      hi = sigma;
      fhi = m;
      if (side == 1) flo /= 2;
      side = 1;
    } else {
      lo = sigma;
      flo = m;
      if (side == -1) fhi /= 2;
      side = -1;
    }
    if (abs(m) < opt.monitor_tol || hi - lo < opt.width_tol) break;
    if (hi - lo < real(1e-30) * std::max(real(1), Ld)) break;
  }
  return make_point(sys, best, curve_tangent(sys, best, d), (best - A.u).dot(dh));
}

}  // namespace tdl
