#pragma once

#include "tdl/continuation.hpp"
#include "tdl/model.hpp"

namespace tdl {

struct HValue {
  real h{0};
  real dmu1{0};
  real dmu2{0};
};

// H(mu) = F(mu2; mu): the scalar map evaluated at x = mu2. dmu2 = F_x(mu2) + 1.
// order 0 leaves the partials at zero. DomainError for mu2 <= 0.
HValue h_eval(const Mu& mu, const ModelParams& p, int order = 1);

// Parabola m: unknowns (theta, mu1) with mu2 = exp(-beta (2 pi m + theta)). The residual is
// H / mu2^nu; monitors "turn" ((F_x(mu2) + 1) mu2^(1-nu)) and "mu2".
DefiningSystem parabola_system(int m, const ModelParams& p);

struct SecHomPoint {
  int m{0};
  real theta{0};
  Mu mu;
  real residual{0};       // |H| in natural units
  real turn_residual{0};  // |F_x(mu2) + 1| mu2^(1-nu), scaled
};

SecHomPoint sechom_point(int m, const real& theta, const real& mu1, const ModelParams& p);

struct ParabolaOptions {
  real mu1_lo{-0.1};
  real mu1_hi{0.1};
  real h0{1e-3};
  real h_max{0.05};
  int max_points{4000};
  real newton_tol{1e-26};
};

// Whole parabola through its turning point, seeded on the theta2 branch.
// NotFoundError when no theta seed exists in the mu1 range.
Curve trace_parabola(int m, const ModelParams& p, const ParabolaOptions& o = {});

// Newton on {H = 0, dH/dmu2 = 0} from the asymptotic turning point.
SecHomPoint find_turning(int m, const ModelParams& p, const ParabolaOptions& o = {});

// Extremal-mu1 point of a traced parabola, refined on the "turn" monitor.
SecHomPoint curve_turning(const Curve& c, int m, const ModelParams& p, const ParabolaOptions& o = {});

}  // namespace tdl
