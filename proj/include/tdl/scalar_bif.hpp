#pragma once

#include <string>
#include <vector>

#include "tdl/continuation.hpp"
#include "tdl/model.hpp"

namespace tdl {

enum class ScalarKind { LP, PD, CP, GPD };
std::string to_string(ScalarKind k);

// Unknowns of every horn system: u = (theta, mu1, s) with
// x = exp(-beta (2 pi n + theta)) and mu2 = s * horn_scale(n).
struct ScalarBifPoint {
  ScalarKind kind{ScalarKind::LP};
  int n{0};
  real theta{0};
  real x{0};
  Mu mu;
  real s{0};
  // residuals of the defining system in scaled form (each condition divided by
  // its natural x^nu factor, so O(1) for every n)
  std::vector<real> residuals;
};

ScalarBifPoint scalar_point(ScalarKind kind, int n, const VecR& u, const ModelParams& p);

// Natural-unit residuals at a horn point: F - x, F_x - 1, F_x + 1, F_xx, 2 F_xxx + 3 F_xx^2.
struct NaturalResiduals {
  real fixed{0};
  real fold{0};
  real flip{0};
  real fxx{0};
  real gpd{0};
};
NaturalResiduals natural_residuals(int n, const VecR& u, const ModelParams& p);

// Curve systems (2 residuals, 3 unknowns). Monitors: "fxx" (F_xx x^2 / x^nu),
// "gpd" (x^(4-2nu) (2 F_xxx + 3 F_xx^2)), "mu2s" (= s).
DefiningSystem scalar_lp_system(int n, const ModelParams& p);
DefiningSystem scalar_pd_system(int n, const ModelParams& p);
// Point systems (3 x 3).
DefiningSystem scalar_cusp_system(int n, const ModelParams& p);
DefiningSystem scalar_gpd_system(int n, const ModelParams& p);

struct HornOptions {
  real mu1_lo{-0.1};
  real mu1_hi{0.1};
  real s_bound{1e6};
  real h0{1e-3};
  real h_max{0.05};
  real h_min{1e-40};
  int max_points{6000};
  real newton_tol{1e-26};
  // step near the cusp is capped at cusp_step * max(|theta - theta_cusp|, sqrt(eps_cusp))
  real cusp_step{0.1};
  // |theta - theta_cusp| window for GPD counting
  real gpd_window{kPi / 2};
};

NewtonOptions horn_newton(const HornOptions& o);

// mu1 at which the arcsin argument of the horn theta seeds has modulus 1/2.
real horn_seed_mu1(int n, const ModelParams& p);

ScalarBifPoint find_cusp(int n, const ModelParams& p, const HornOptions& o = {});

struct Horn {
  int n{0};
  ScalarBifPoint cusp;
  Curve branch1;  // both start at the refined cusp
  Curve branch2;
};

// Throws NotFoundError when the theta seeds do not exist inside [mu1_lo, mu1_hi].
Horn trace_lp_horn(int n, const ModelParams& p, const HornOptions& o = {});

// Points where a horn branch crosses mu2 = 0, refined on the LP system.
std::vector<ScalarBifPoint> horn_axis_crossings(const Horn& h, const ModelParams& p,
                                                const HornOptions& o = {});

// Whole PD curve through the cusp region, ordered by increasing theta.
Curve trace_pd_curve(int n, const ModelParams& p, const HornOptions& o = {});

// GPD points on the PD curve within the cusp window; empty when none exist.
std::vector<ScalarBifPoint> find_gpd(int n, const ModelParams& p, const HornOptions& o = {});
std::vector<ScalarBifPoint> find_gpd_on(const Curve& pd, int n, const ModelParams& p,
                                        const ScalarBifPoint& cusp, const HornOptions& o = {});

enum class HornVerdict { Spring, Saddle, Inconclusive };
std::string to_string(HornVerdict v);

// spring iff >= 2 GPDs near the cusp or the PD polyline crosses itself.
struct HornClass {
  HornVerdict verdict{HornVerdict::Inconclusive};
  int gpd_count{0};
  bool self_intersects{false};
  std::vector<ScalarBifPoint> gpds;
};

HornClass classify_horn(int n, const ModelParams& p, const HornOptions& o = {});

// True when the polyline (mu1, s) of the curve crosses itself inside the theta window.
// Crossings below the rounding floor of the stored coordinates are ignored.
bool pd_self_intersects(const Curve& pd, const real& theta_c, const real& window);

// Roots in theta of the scaled fixed-point condition at fixed mu, window theta in [lo, hi].
std::vector<real> scalar_fixed_thetas(int n, const Mu& mu, const ModelParams& p, const real& lo,
                                      const real& hi, int samples = 512);

}  // namespace tdl
