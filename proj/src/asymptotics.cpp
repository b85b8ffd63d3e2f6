#include "tdl/asymptotics.hpp"

#include <algorithm>
#include <numeric>

#include "tdl/errors.hpp"

namespace tdl {

using std::abs;
using std::asin;
using std::exp;
using std::log;
using std::sqrt;

namespace {

real checked_asin(const real& arg, const char* what) {
  // tolerate rounding right at the cusp/turning value
  if (abs(arg) > 1 + real(1e-12))
    throw DomainError(std::string(what) + ": arcsin argument " + arg.str(6) + " outside [-1, 1]");
  return asin(std::clamp(arg, real(-1), real(1)));
}

}  // namespace

DerivedConstants derived_constants(const ModelParams& p) {
  p.validate();
  DerivedConstants d;
  const real bn2 = p.beta * p.beta * p.nu * p.nu;
  d.phi0 = asin(1 / sqrt(1 + bn2));
  d.a = bn2 * p.C2 * p.C2 / ((1 + bn2) * p.C1 * p.C1);
  d.theta0 = p.C2 < 0 ? kPi / 2 : 3 * kPi / 2;
  d.i = p.C2 < 0 ? 1 : -1;
  d.branch1_shift = p.C2 > 0 ? 1 : 0;
  return d;
}

real theta0_n(int n, const real& mu1, const ModelParams& p) {
  const real bn = p.beta * p.nu;
  const real arg = -bn * p.C2 * exp(-kTwoPi * mu1 * n) / (sqrt(1 + bn * bn) * p.C1);
  return checked_asin(arg, "theta0_n");
}

ThetaSeeds horn_theta_seeds(int n, const real& mu1, const ModelParams& p) {
  const DerivedConstants d = derived_constants(p);
  const real t0 = theta0_n(n, mu1, p);
  return {d.phi0 + t0 + kTwoPi * d.branch1_shift, d.phi0 + kPi - t0};
}

real horn_branch_mu2(int n, const real& mu1, int branch, const ModelParams& p) {
  if (branch != 1 && branch != 2) throw DomainError("horn_branch_mu2: branch must be 1 or 2");
  const DerivedConstants d = derived_constants(p);
  const real t0 = theta0_n(n, mu1, p);
  const real bn = p.beta * p.nu;
  const real sq = sqrt(1 + bn * bn);
  const real root =
      sqrt(std::max(real(0), 1 - bn * bn / (1 + bn * bn) * p.C2 * p.C2 / (p.C1 * p.C1) *
                                     exp(-4 * kPi * mu1 * n)));
  const real pre = exp(-kTwoPi * bn * n) / sq;
  if (branch == 1) {
    const real shift = kTwoPi * d.branch1_shift;
    const real ph = t0 + d.phi0 + shift;
    return -exp(-bn * ph) * pre *
           (p.C1 * root + p.C2 / sq * exp(-mu1 * (kTwoPi * n + shift + t0 + d.phi0)));
  }
  const real ph = kPi - t0 + d.phi0;
  return -exp(-bn * ph) * pre * (-p.C1 * root + p.C2 / sq * exp(-mu1 * (kTwoPi * n + ph)));
}

Mu cusp_asymptotic(int n, const ModelParams& p) {
  if (n < 1) throw DomainError("cusp_asymptotic: n must be >= 1");
  const DerivedConstants d = derived_constants(p);
  const real bn = p.beta * p.nu;
  Mu mu;
  mu.mu1 = log(d.a) / (4 * kPi * n);
  const real sgn = p.C2 > 0 ? 1 : -1;
  mu.mu2 = -exp(-bn * (kTwoPi * n + d.theta0 + d.phi0)) * sgn * p.C1 / (bn * sqrt(1 + bn * bn)) *
           exp(-(d.theta0 + d.phi0) / (4 * kPi * n) * log(d.a));
  return mu;
}

real mu1_axis_intersection(int n, const ModelParams& p) {
  if (n < 1) throw DomainError("mu1_axis_intersection: n must be >= 1");
  return log(p.C2 * p.C2 / (p.C1 * p.C1)) / (4 * kPi * n);
}

real theta0_m(int m, const real& mu1, const ModelParams& p) {
  return checked_asin(-p.C2 / p.C1 * exp(-kTwoPi * mu1 * m), "theta0_m");
}

ThetaSeeds parabola_theta_seeds(int m, const real& mu1, const ModelParams& p) {
  const DerivedConstants d = derived_constants(p);
  const real t0 = theta0_m(m, mu1, p);
  return {t0 + kTwoPi * d.branch1_shift, kPi - t0};
}

real parabola_mu2(int m, const real& mu1, int branch, const ModelParams& p) {
  if (branch != 1 && branch != 2) throw DomainError("parabola_mu2: branch must be 1 or 2");
  const ThetaSeeds s = parabola_theta_seeds(m, mu1, p);
  const real th = branch == 1 ? s.theta1 : s.theta2;
  return exp(-p.beta * (kTwoPi * m + th));
}

Mu turning_asymptotic(int m, const ModelParams& p) {
  if (m < 1) throw DomainError("turning_asymptotic: m must be >= 1");
  const DerivedConstants d = derived_constants(p);
  Mu mu;
  mu.mu1 = log(p.C2 * p.C2 / (p.C1 * p.C1)) / (4 * kPi * m);
  mu.mu2 = exp(-p.beta * (kTwoPi * m + d.theta0));
  return mu;
}

double spearman_rank(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DomainError("spearman_rank: need equal sizes >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size();) {
      std::size_t e = k;
      while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
      const double avg = 0.5 * static_cast<double>(k + e) + 1;
      for (std::size_t q = k; q <= e; ++q) r[idx[q]] = avg;
      k = e + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0;
  return sab / std::sqrt(saa * sbb);
}

CompareResult compare_table(const std::vector<Mu>& exact, const std::vector<Mu>& asym) {
  if (exact.size() != asym.size())
    throw DomainError("compare_table: length mismatch (" + std::to_string(exact.size()) + " vs " +
                      std::to_string(asym.size()) + ")");
  CompareResult r;
  std::vector<double> err, idx;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const real d1 = exact[i].mu1 - asym[i].mu1, d2 = exact[i].mu2 - asym[i].mu2;
    const real ne = sqrt(exact[i].mu1 * exact[i].mu1 + exact[i].mu2 * exact[i].mu2);
    const real e = ne > 0 ? real(sqrt(d1 * d1 + d2 * d2) / ne) : real(sqrt(d1 * d1 + d2 * d2));
    r.errors.push_back(e);
    err.push_back(to_double(e));
    idx.push_back(static_cast<double>(i));
  }
  if (err.size() >= 2) {
    r.spearman = spearman_rank(idx, err);
    r.decreasing = r.errors.back() < r.errors.front() && r.spearman < 0;
  }
  return r;
}

}  // namespace tdl
