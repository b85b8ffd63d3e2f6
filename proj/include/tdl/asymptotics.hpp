#pragma once

#include <vector>

#include "tdl/model.hpp"

namespace tdl {

struct DerivedConstants {
  real phi0{0};    // arcsin(1 / sqrt(1 + beta^2 nu^2))
  real a{0};       // beta^2 nu^2 C2^2 / ((1 + beta^2 nu^2) C1^2)
  real theta0{0};  // pi/2 if C2 < 0, 3 pi/2 if C2 > 0
  int i{0};        // -sign(C2)
  // 2 pi shift on branch 1. Applied when C2 > 0: it is the choice under which
  // branch 1 and branch 2 meet at the cusp inside the same window.
  int branch1_shift{0};
};

DerivedConstants derived_constants(const ModelParams& p);

// arcsin(-beta nu C2 e^{-2 pi mu1 n} / (sqrt(1 + beta^2 nu^2) C1)); DomainError if |arg| > 1.
real theta0_n(int n, const real& mu1, const ModelParams& p);

struct ThetaSeeds {
  real theta1{0};
  real theta2{0};
};

ThetaSeeds horn_theta_seeds(int n, const real& mu1, const ModelParams& p);

// Leading-order horn branch mu2 (branch 1 or 2).
real horn_branch_mu2(int n, const real& mu1, int branch, const ModelParams& p);

Mu cusp_asymptotic(int n, const ModelParams& p);

real mu1_axis_intersection(int n, const ModelParams& p);

// arcsin(-(C2/C1) e^{-2 pi mu1 m}); DomainError if |arg| > 1.
real theta0_m(int m, const real& mu1, const ModelParams& p);

ThetaSeeds parabola_theta_seeds(int m, const real& mu1, const ModelParams& p);

real parabola_mu2(int m, const real& mu1, int branch, const ModelParams& p);

Mu turning_asymptotic(int m, const ModelParams& p);

struct CompareResult {
  std::vector<real> errors;  // |exact - asym| / |exact| in the (mu1, mu2) norm
  real spearman{0};          // rank correlation of errors with index
  bool decreasing{false};    // last < first and spearman < 0
};

// Throws DomainError on length mismatch.
CompareResult compare_table(const std::vector<Mu>& exact, const std::vector<Mu>& asym);

double spearman_rank(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tdl
