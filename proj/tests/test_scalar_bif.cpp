#include <algorithm>

#include "common.hpp"
#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"
#include "tdl/scalar_bif.hpp"

using namespace tdl;
using namespace tt;

TEST_CASE("cusp against high-precision oracle") {
  const ModelParams p;
  const ScalarBifPoint c = find_cusp(10, p);
  CHECK(D(rel(c.theta, Q("6.022587437852437797186467"))) < 1e-22);
  CHECK(D(rel(c.mu.mu1, Q("-0.01562047109017178250646009"))) < 1e-22);
  CHECK(D(rel(c.mu.mu2, Q("-1.107344952276927397907857e-7"))) < 1e-22);
  for (const real& r : c.residuals) CHECK(D(abs(r)) < 1e-20);

  const ScalarBifPoint c50 = find_cusp(50, p);
  CHECK(D(rel(c50.mu.mu1, Q("-0.003198093894965385706858219"))) < 1e-22);
  CHECK(D(rel(c50.mu.mu2, Q("-5.406642499562614543760996e-35"))) < 1e-20);

  const VecR u = (VecR(3) << c.theta, c.mu.mu1, c.s).finished();
  const NaturalResiduals nr = natural_residuals(10, u, p);
  CHECK(D(abs(nr.fixed)) < 1e-10);
  CHECK(D(abs(nr.fold)) < 1e-8);
  CHECK_THROWS_AS(find_cusp(0, p), DomainError);
}

TEST_CASE("LP horns: two branches through the cusp, natural residuals") {
  const ModelParams p;
  std::vector<real> mu2s;
  for (int n : {10, 15, 20}) {
    CAPTURE(n);
    const Horn h = trace_lp_horn(n, p);
    REQUIRE(h.branch1.points.size() > 10);
    REQUIRE(h.branch2.points.size() > 10);
    const VecR c = (VecR(3) << h.cusp.theta, h.cusp.mu.mu1, h.cusp.s).finished();
    CHECK(D((h.branch1.points.front().u - c).norm()) < 1e-20);
    CHECK(D((h.branch2.points.front().u - c).norm()) < 1e-20);
    // branches leave the cusp on opposite sides in theta
    const real d1 = h.branch1.points.back().u(0) - h.cusp.theta;
    const real d2 = h.branch2.points.back().u(0) - h.cusp.theta;
    CHECK(d1 * d2 < 0);
    real wf = 0, wd = 0;
    for (const Curve* b : {&h.branch1, &h.branch2})
      for (const auto& q : b->points) {
        const NaturalResiduals r = natural_residuals(n, q.u, p);
        wf = std::max(wf, abs(r.fixed));
        wd = std::max(wd, abs(r.fold));
      }
    CHECK(D(wf) < 1e-10);
    CHECK(D(wd) < 1e-8);
    mu2s.push_back(abs(h.cusp.mu.mu2));
  }
  // cusp mu2 magnitudes scale by exp(-pi/2) per unit n
  const real q = exp(-kPi / 2);
  CHECK(D(abs(mu2s[1] / mu2s[0] - pow(q, 5)) / pow(q, 5)) < 0.15);
  CHECK(D(abs(mu2s[2] / mu2s[1] - pow(q, 5)) / pow(q, 5)) < 0.15);
  for (int n = 10; n < 15; ++n) {
    const real r = find_cusp(n + 1, p).mu.mu2 / find_cusp(n, p).mu.mu2;
    CHECK(D(abs(r - q) / q) < 0.15);
  }
}

TEST_CASE("axis crossings against high-precision oracle") {
  const ModelParams p;
  const std::pair<int, const char*> cases[] = {{10, "0.006002688339605085409112153"},
                                               {50, "0.001271559557454444050099993"}};
  for (const auto& [n, ref] : cases) {
    CAPTURE(n);
    const auto xs = horn_axis_crossings(trace_lp_horn(n, p), p);
    REQUIRE(!xs.empty());
    real best = 1;
    for (const auto& x : xs) {
      best = std::min(best, rel(x.mu.mu1, Q(ref)));
      CHECK(D(abs(x.mu.mu2)) < 1e-30);
    }
    CHECK(D(best) < 1e-20);
  }
}

TEST_CASE("PD curves") {
  const ModelParams p;
  for (int n : {10, 20}) {
    CAPTURE(n);
    const Curve pd = trace_pd_curve(n, p);
    REQUIRE(pd.points.size() > 10);
    real wf = 0, wp = 0;
    for (const auto& q : pd.points) {
      const NaturalResiduals r = natural_residuals(n, q.u, p);
      wf = std::max(wf, abs(r.fixed));
      wp = std::max(wp, abs(r.flip));
    }
    CHECK(D(wf) < 1e-10);
    CHECK(D(wp) < 1e-8);
  }
  SUBCASE("second iterate at a flip point") {
    const int n = 10;
    const Curve pd = trace_pd_curve(n, p);
    const auto& q = pd.points[pd.points.size() / 2];
    const real x = x_of_theta(n, q.u(0), p);
    const Mu mu{q.u(1), q.u(2) * horn_scale(n, p)};
    const ScalarMapValue a = scalar_map(x, mu, p, 3);
    const ScalarMapValue b = scalar_map(a.f, mu, p, 3);
    const real d1 = b.fx * a.fx;
    const real d2 = b.fxx * a.fx * a.fx + b.fx * a.fxx;
    const real d3 = b.fxxx * a.fx * a.fx * a.fx + 3 * b.fxx * a.fxx * a.fx + b.fx * a.fxxx;
    CHECK(D(abs(d1 - 1)) < 1e-7);
    CHECK(D(abs(d2) / abs(a.fxx)) < 1e-7);
    // third derivative of the second iterate is -(2 F''' + 3 F''^2) at a flip point
    const real g = 2 * a.fxxx + 3 * a.fxx * a.fxx;
    CHECK(D(abs(d3 + g) / (abs(a.fxxx) + a.fxx * a.fxx)) < 1e-7);
  }
}

TEST_CASE("GPD points and horn classification") {
  SUBCASE("spring at C2 = -1.2") {
    ModelParams p;
    p.C2 = Q("-1.2");
    std::vector<ScalarBifPoint> g = find_gpd(10, p);
    REQUIRE(g.size() == 2);
    std::sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
    CHECK(D(rel(g[0].theta, Q("2.880024077701459766064345"))) < 1e-18);
    CHECK(D(rel(g[0].mu.mu1, Q("-0.01641920648310578627873828"))) < 1e-18);
    CHECK(D(rel(g[1].theta, Q("2.880368439780460449936798"))) < 1e-18);
    CHECK(D(rel(g[1].mu.mu1, Q("-0.01641920648304299413457843"))) < 1e-18);
    for (const auto& q : g) {
      CHECK(D(abs(q.s - Q("1.61746022147"))) < 1e-9);
      // natural 2F''' + 3F''^2 carries x^(2nu-4) ~ 1e41 here: check the scaled condition
      REQUIRE(q.residuals.size() == 3);
      CHECK(D(abs(q.residuals[2])) < 1e-6);
      const VecR u = (VecR(3) << q.theta, q.mu.mu1, q.s).finished();
      const NaturalResiduals r = natural_residuals(10, u, p);
      CHECK(D(abs(r.flip)) < 1e-8);
      CHECK(D(abs(r.gpd) / (r.fxx * r.fxx)) < 1e-20);
    }
    const HornClass hc = classify_horn(10, p);
    CHECK(hc.verdict == HornVerdict::Spring);
    CHECK(hc.gpd_count == 2);
  }
  SUBCASE("saddle at the defaults") {
    const ModelParams p;
    for (int n : {10, 11, 12}) {
      const HornClass hc = classify_horn(n, p);
      CHECK(hc.verdict == HornVerdict::Saddle);
      CHECK(hc.gpd_count < 2);
    }
  }
  SUBCASE("verdict invariant under step halving") {
    for (const char* c2 : {"1.2", "-1.2"}) {
      ModelParams p;
      p.C2 = Q(c2);
      HornOptions a, b;
      b.h0 = a.h0 / 2;
      b.h_max = a.h_max / 2;
      for (int n : {10, 20}) CHECK(classify_horn(n, p, a).verdict == classify_horn(n, p, b).verdict);
    }
  }
  CHECK(to_string(HornVerdict::Spring) != to_string(HornVerdict::Saddle));
}

TEST_CASE("scalar fixed points") {
  const ModelParams p;
  const ScalarBifPoint c = find_cusp(10, p);
  // just inside the horn: three fixed points near the cusp angle
  const Mu mu{c.mu.mu1 + Q("1e-4"), c.mu.mu2};
  const auto th = scalar_fixed_thetas(10, mu, p, c.theta - 1, c.theta + 1);
  for (const real& t : th) {
    const real x = x_of_theta(10, t, p);
    CHECK(D(abs(scalar_map(x, mu, p, 0).f - x) / x) < 1e-20);
  }
  CHECK(!th.empty());
}
