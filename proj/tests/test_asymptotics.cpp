#include "common.hpp"
#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"
#include "tdl/scalar_bif.hpp"
#include "tdl/sechom.hpp"

using namespace tdl;
using namespace tt;

TEST_CASE("derived constants") {
  const ModelParams p;
  const DerivedConstants d = derived_constants(p);
  CHECK(D(rel(d.phi0, Q("1.32581766366803246505923921043"))) < 1e-28);
  CHECK(D(rel(d.a, Q("0.132352941176470588235294117647"))) < 1e-28);
  CHECK(d.theta0 == 3 * kPi / 2);
  CHECK(d.i == -1);
  CHECK(d.branch1_shift == 1);
  ModelParams q;
  q.C2 = real("-1.2");
  const DerivedConstants e = derived_constants(q);
  CHECK(e.theta0 == kPi / 2);
  CHECK(e.i == 1);
  CHECK(e.branch1_shift == 0);
}

TEST_CASE("cusp and axis closed forms") {
  const ModelParams p;
  CHECK(D(rel(cusp_asymptotic(10, p).mu1, Q("-0.0160928178063528683001855615913"))) < 1e-28);
  CHECK(D(rel(mu1_axis_intersection(10, p), Q("0.00645317762067040923005074250004"))) < 1e-28);
  CHECK(D(rel(turning_asymptotic(10, p).mu1, Q("0.00645317762067040923005074250004"))) < 1e-28);
  for (int n : {1, 10, 50})
    CHECK(cusp_asymptotic(n, p).mu2 < 0);  // -sign(C2) with C1 > 0
  ModelParams q;
  q.C2 = real("-1.2");
  CHECK(cusp_asymptotic(10, q).mu2 > 0);
  q.C2 = q.C1;
  CHECK(mu1_axis_intersection(10, q) == 0);
  q.C2 = real("0.7");
  CHECK(mu1_axis_intersection(10, q) < 0);
  CHECK(mu1_axis_intersection(10, p) > 0);
  CHECK_THROWS_AS(cusp_asymptotic(0, p), DomainError);
}

TEST_CASE("horn branches") {
  const ModelParams p;
  SUBCASE("coincide at the cusp") {
    for (int n : {10, 20, 40}) {
      const real mu1 = cusp_asymptotic(n, p).mu1 * (1 - real("1e-20"));
      const real b1 = horn_branch_mu2(n, mu1, 1, p), b2 = horn_branch_mu2(n, mu1, 2, p);
      CHECK(D(abs(b1 - b2) / abs(b1)) < 1e-6);
    }
  }
  SUBCASE("order of magnitude of the cusp value at n = 10") {
    // the printed example mu1 = -0.0161 is just outside the arcsin domain
    CHECK_THROWS_AS(horn_branch_mu2(10, real("-0.0161"), 1, p), DomainError);
    const real mu2 = horn_branch_mu2(10, cusp_asymptotic(10, p).mu1, 1, p);
    CHECK(D(mu2) < -0.5e-7);
    CHECK(D(mu2) > -2.2e-7);
  }
  SUBCASE("large mu1: the C2 terms drop out") {
    const int n = 10;
    const real mu1("0.8");
    const DerivedConstants d = derived_constants(p);
    const real bn = p.beta * p.nu, sq = sqrt(1 + bn * bn);
    const real pre = exp(-kTwoPi * bn * n) / sq;
    const real b1 = -exp(-bn * (d.phi0 + kTwoPi)) * pre * p.C1;
    const real b2 = exp(-bn * (kPi + d.phi0)) * pre * p.C1;
    CHECK(D(rel(horn_branch_mu2(n, mu1, 1, p), b1)) < 1e-12);
    CHECK(D(rel(horn_branch_mu2(n, mu1, 2, p), b2)) < 1e-12);
  }
  CHECK_THROWS_AS(horn_branch_mu2(10, 0, 3, p), DomainError);
}

TEST_CASE("parabola branches coincide at the turning value") {
  const ModelParams p;
  const int m = 12;
  const real mu1 = log(p.C2 / p.C1) / (kTwoPi * m) * (1 - real("1e-20"));
  const real b1 = parabola_mu2(m, mu1, 1, p), b2 = parabola_mu2(m, mu1, 2, p);
  CHECK(D(abs(b1 - b2) / b1) < 1e-8);
  CHECK_THROWS_AS(parabola_mu2(m, real("-0.2"), 1, p), DomainError);
}

TEST_CASE("comparison tables") {
  std::vector<Mu> a = {{real("0.1"), real("0.2")}, {real("-0.3"), real("1e-9")}};
  const CompareResult same = compare_table(a, a);
  for (const auto& e : same.errors) CHECK(e == 0);
  CHECK_THROWS_AS(compare_table(a, {a[0]}), DomainError);
  CHECK(spearman_rank({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1));
  CHECK(spearman_rank({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
}

TEST_CASE("asymptotic cusps converge to Newton cusps") {
  const ModelParams p;
  std::vector<Mu> ex, as;
  for (int n = 10; n <= 90; ++n) {
    ex.push_back(find_cusp(n, p).mu);
    as.push_back(cusp_asymptotic(n, p));
  }
  const CompareResult r = compare_table(ex, as);
  CHECK(r.decreasing);
  CHECK(r.errors.back() < r.errors.front() / 5);
  // error * n bounded over n = 20..90
  real lo = -1, hi = 0;
  for (int n = 20; n <= 90; ++n) {
    const real v = r.errors[n - 10] * n;
    hi = std::max(hi, v);
    lo = lo < 0 ? v : std::min(lo, v);
  }
  CHECK(D(hi / lo) < 10);
}

TEST_CASE("asymptotic turning points converge to Newton turning points") {
  const ModelParams p;
  std::vector<Mu> ex, as;
  for (int m = 10; m <= 40; ++m) {
    ex.push_back(find_turning(m, p).mu);
    as.push_back(turning_asymptotic(m, p));
  }
  CHECK(compare_table(ex, as).decreasing);
}
