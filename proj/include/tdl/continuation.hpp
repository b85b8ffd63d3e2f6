#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tdl/real.hpp"

namespace tdl {

// Residual/Jacobian contract for the Newton and continuation engines. A curve
// system has n_unknowns - 1 residuals, a point system has n_unknowns.
struct DefiningSystem {
  int n_unknowns{0};
  std::function<VecR(const VecR&)> residual;
  std::function<MatR(const VecR&)> jacobian;  // empty: central differences
  std::vector<std::string> monitor_names;
  std::function<VecR(const VecR&)> monitors;  // values in monitor_names order
  real fd_rel_step{1e-12};

  int monitor_index(const std::string& name) const;
};

MatR system_jacobian(const DefiningSystem& sys, const VecR& u);

struct NewtonOptions {
  real tol{1e-10};
  int max_iter{30};
  // extra iterations after tol is met, kept only while the residual keeps dropping
  int polish{2};
  // scaled condition estimate above which the Jacobian counts as singular
  real max_cond{1e12};
};

struct NewtonResult {
  VecR u;
  real residual_norm{0};
  int iterations{0};
  bool quadratic{false};
};

// Throws SingularError or ConvergenceError.
NewtonResult newton_solve(const DefiningSystem& sys, const VecR& u0, const NewtonOptions& opt = {});

struct CurvePoint {
  VecR u;
  VecR tangent;
  real step{0};
  real residual_norm{0};
  VecR monitors;
};

struct Curve {
  std::vector<CurvePoint> points;
  std::vector<std::string> monitor_names;
  int index{0};   // horn index n or parabola index m
  int branch{0};  // 0 = whole curve, 1|2 = horn branch
  std::string termination;

  int monitor_index(const std::string& name) const;
};

struct DomainBox {
  VecR lo;
  VecR hi;
  bool contains(const VecR& u) const;
};

struct StepControl {
  real h0{1e-3};
  real h_min{1e-14};
  real h_max{0.05};
  real theta_max_deg{30};
  // optional local cap on the step, e.g. near a cusp
  std::function<real(const VecR&)> cap;
};

struct ContinuationOptions {
  StepControl step;
  DomainBox box;
  int max_points{1000};
  NewtonOptions newton;
  int max_corrector_iter{8};
  // called with (previous, candidate) after acceptance; true ends the curve after candidate
  std::function<bool(const CurvePoint&, const CurvePoint&)> stop;
  bool detect_loop{true};
};

CurvePoint make_point(const DefiningSystem& sys, const VecR& u, const VecR& tangent, const real& step);

// Unit tangent of a curve system at u, oriented along `direction`.
VecR curve_tangent(const DefiningSystem& sys, const VecR& u, const VecR& direction);

// Bordered pseudo-arclength continuation from u0.
Curve continue_curve(const DefiningSystem& sys, const VecR& u0, const VecR& direction,
                     const ContinuationOptions& opt);

// Continue in both directions from u0 and join into one curve ordered along -direction .. +direction.
Curve continue_both_ways(const DefiningSystem& sys, const VecR& u0, const VecR& direction,
                         const ContinuationOptions& opt);

struct RefineOptions {
  real monitor_tol{1e-10};
  real width_tol{1e-12};
  int max_iter{200};
  NewtonOptions newton;
};

// Root of a monitor between curve points i and i+1 (Illinois regula falsi in
// secant arclength, each trial point projected onto the curve by Newton).
CurvePoint refine_sign_change(const DefiningSystem& sys, const Curve& curve,
                              const std::string& monitor, std::size_t i,
                              const RefineOptions& opt = {});

// Indices i with a sign change of the monitor between points i and i+1.
std::vector<std::size_t> sign_changes(const Curve& curve, const std::string& monitor);

}  // namespace tdl
