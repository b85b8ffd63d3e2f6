#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tdl::ls {

using State = Eigen::Vector4d;  // (x, y, z, u)
using Jac = Eigen::Matrix4d;
using cplx = std::complex<double>;

struct LSParams {
  double sigma{0.1};
  double r{15.302531};
  double b{1.9884};
  double s{33.0};
  double eps1{0.1};
  double eps2{0.3};
  void validate() const;
};

// "paper-3dl" (sigma 0.1), "sigma1" (same point with sigma 1). DomainError otherwise.
LSParams profile(const std::string& name);
std::vector<std::string> profile_names();

State rhs(const State& x, const LSParams& p);
Jac jacobian(const State& x, const LSParams& p);

// det(lambda I - B) of the (x, y, u) block at the origin: lambda^3 + c[2] lambda^2 + c[1] lambda + c[0].
std::array<double, 3> block_char_poly(const LSParams& p);

struct EigenData {
  std::array<cplx, 4> lambda;  // -b first, then the block roots by decreasing real part
  bool has_pair{false};
  double delta0{0};  // Re of the complex pair
  double omega0{0};  // Im > 0
  double eps0{0};    // largest positive real eigenvalue (0 if none)
  double real_stable{0};
  double nu0{0};     // -delta_leading / eps0
  double sigma0{0};  // delta_leading + eps0
  double residual{0};  // max |p(lambda)| / |coefficients|
};

// ConvergenceError if the polished roots miss the residual bound 1e-8.
EigenData equilibrium_eigenvalues(const LSParams& p);

enum class LocusFree { R, B };

struct LocusPoint {
  double r{0};
  double b{0};
  double re_pair{0};
  double residual{0};  // |Re(lambda_c) + b| recomputed
};

struct LocusResult {
  std::vector<LocusPoint> points;
  bool truncated{false};
  std::string message;
};

struct LocusOptions {
  int n_grid{101};
  double bracket_lo{0.01};
  double bracket_hi{50.0};
  double tol{1e-13};  // absolute tolerance on the free parameter
  double verify{1e-8};
};

// Grid over [lo, hi] of the other parameter; root-find in the free one on Re(lambda_c) + b = 0.
LocusResult find_3dl_locus(const LSParams& p, LocusFree free, double lo, double hi,
                           const LocusOptions& o = {});

struct Trajectory {
  std::vector<double> t;
  std::vector<State> x;
  std::size_t steps{0};
};

// Dense-output Dormand-Prince 4(5). Samples at `times` (increasing, first = start time).
// ConvergenceError on step underflow or step-count overflow.
Trajectory integrate(const State& x0, const std::vector<double>& times, const LSParams& p,
                     double rel_tol = 1e-9, double abs_tol = 1e-12, std::size_t max_steps = 2000000);

struct Section {
  State normal{0, 0, 1, 0};
  double offset{10};
  int direction{0};  // +1 upward crossings only, -1 downward, 0 both
};

struct Crossing {
  double t{0};
  State x;
};

struct ShootBranch {
  int sign{1};
  std::vector<Crossing> crossings;
  bool escaped{false};       // reached escape_radius
  // closest approach to the origin once the orbit is returning: after escape, from the first
  // time the distance drops below half its running maximum. inf if it never returns.
  double min_distance{0};
  double t_min{0};
  State x_min;
  std::string note;
};

struct ShootOptions {
  double delta{1e-6};
  double t_max{50};
  double escape_radius{1.0};
  double rel_tol{1e-10};
  double abs_tol{1e-13};
  Section section;
};

// Unit unstable eigenvector v_u; both signs of origin + delta v_u are integrated.
std::array<ShootBranch, 2> unstable_manifold_shoot(const LSParams& p, const ShootOptions& o = {});

// Unit real eigenvector of the Jacobian at the origin for eigenvalue eps0 (x component >= 0).
State unstable_eigenvector(const LSParams& p);

}  // namespace tdl::ls
