// Acceptance runner: one PASS/FAIL line per criterion. Tolerances are fixed here.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tdl/asymptotics.hpp"
#include "tdl/cli.hpp"
#include "tdl/lorenz_stenflo.hpp"
#include "tdl/map3d.hpp"
#include "tdl/scalar_bif.hpp"
#include "tdl/sechom.hpp"

using namespace tdl;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass{true};
  std::ostringstream why;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      why << " [" << what << "]";
    }
  }
};

std::string g(const real& v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.6g", to_double(v));
  return b;
}
std::string g(double v) { return g(real(v)); }

real lnrel(const real& a, const real& b) { return abs(a - b) / abs(b); }

// 1. spectrum at the origin
void c1(Verdict& v) {
  const ls::EigenData e = ls::equilibrium_eigenvalues(ls::profile("paper-3dl"));
  const double b = ls::profile("paper-3dl").b;
  v.require(std::abs(e.real_stable + b) <= 1e-12, "real stable != -b");
  v.require(e.has_pair, "no complex pair");
  v.require(std::abs(e.delta0 + 1.9884) < 5e-3, "Re pair " + g(e.delta0));
  v.require(std::abs(e.omega0 - 6.2265) < 5e-3, "Im pair " + g(e.omega0));
  v.require(std::abs(e.eps0 - 2.7769) < 5e-3, "unstable " + g(e.eps0));
  v.require(std::abs(e.nu0 - 0.716) <= 0.002 && e.nu0 < 1, "nu0 " + g(e.nu0));
  v.require(std::abs(e.sigma0 - 0.789) <= 0.005 && e.sigma0 > 0, "sigma0 " + g(e.sigma0));
  v.why << " lambda_s=" << g(e.real_stable) << " pair=" << g(e.delta0) << "+-" << g(e.omega0)
        << "i eps0=" << g(e.eps0) << " nu0=" << g(e.nu0) << " sigma0=" << g(e.sigma0);
}

// 2. 3DL locus
void c2(Verdict& v) {
  const ls::LSParams p = ls::profile("paper-3dl");
  const ls::EigenData e = ls::equilibrium_eigenvalues(p);
  v.require(std::abs(e.delta0 + p.b) < 1e-3, "|Re + b| at the reference point " + g(std::abs(e.delta0 + p.b)));
  const ls::LocusResult r = ls::find_3dl_locus(p, ls::LocusFree::B, 10, 20);
  v.require(!r.truncated, "locus truncated: " + r.message);
  v.require(r.points.size() == 101, "locus size");
  double worst = 0;
  int multi = 0;
  for (const auto& q : r.points) {
    worst = std::max(worst, q.residual);
    // single-valued: Re(lambda_c) + b changes sign once over the b bracket
    ls::LSParams t = p;
    t.r = q.r;
    int changes = 0;
    double prev = 0;
    for (int k = 0; k <= 400; ++k) {
      t.b = 0.01 + (50 - 0.01) * k / 400.0;
      const double f = ls::equilibrium_eigenvalues(t).delta0 + t.b;
      if (k > 0 && (f > 0) != (prev > 0)) ++changes;
      prev = f;
    }
    if (changes != 1) ++multi;
  }
  v.require(worst < 1e-8, "max residual " + g(worst));
  v.require(multi == 0, std::to_string(multi) + " r values with several b roots");
  v.why << " points=" << r.points.size() << " b(10)=" << g(r.points.front().b)
        << " b(20)=" << g(r.points.back().b) << " max_residual=" << g(worst);
}

// 3. cusp convergence
void c3(Verdict& v) {
  const ModelParams p;
  std::vector<Mu> ex, as;
  real worst_res = 0, worst50 = 0;
  const real target = log(real("0.0625") * real("2.25") / real("1.0625"));
  for (int n = 10; n <= 90; ++n) {
    const ScalarBifPoint c = find_cusp(n, p);
    for (const real& r : c.residuals) worst_res = std::max(worst_res, abs(r));
    ex.push_back(c.mu);
    as.push_back(cusp_asymptotic(n, p));
    if (n >= 50) worst50 = std::max(worst50, lnrel(4 * kPi * n * c.mu.mu1, target));
  }
  const CompareResult cr = compare_table(ex, as);
  v.require(worst_res < real(1e-10), "cusp residual " + g(worst_res));
  v.require(cr.errors.back() < cr.errors.front() / 5, "last >= first/5");
  v.require(cr.spearman < 0, "rank correlation " + g(cr.spearman));
  v.require(worst50 < real(0.05), "4 pi n mu1 off by " + g(worst50));
  v.why << " max_residual=" << g(worst_res) << " err10=" << g(cr.errors.front())
        << " err90=" << g(cr.errors.back()) << " spearman=" << g(cr.spearman)
        << " max_rel(4pi n mu1, n>=50)=" << g(worst50);
}

// 4. horn structure
void c4(Verdict& v) {
  const ModelParams p;
  real wf = 0, wd = 0;
  for (int n : {10, 15, 20}) {
    const Horn h = trace_lp_horn(n, p);
    const VecR c = (VecR(3) << h.cusp.theta, h.cusp.mu.mu1, h.cusp.s).finished();
    const bool two = h.branch1.points.size() > 1 && h.branch2.points.size() > 1;
    v.require(two, "horn " + std::to_string(n) + " lacks a branch");
    if (!two) continue;
    const bool meet = (h.branch1.points.front().u - c).norm() < real(1e-12) &&
                      (h.branch2.points.front().u - c).norm() < real(1e-12);
    const bool sides = (h.branch1.points.back().u(0) - h.cusp.theta) *
                           (h.branch2.points.back().u(0) - h.cusp.theta) < 0;
    v.require(meet && sides, "branches of horn " + std::to_string(n) + " do not meet at the cusp");
    for (const Curve* b : {&h.branch1, &h.branch2})
      for (const auto& q : b->points) {
        const NaturalResiduals r = natural_residuals(n, q.u, p);
        wf = std::max(wf, abs(r.fixed));
        wd = std::max(wd, abs(r.fold));
      }
  }
  v.require(wf < real(1e-10), "|F - x| " + g(wf));
  v.require(wd < real(1e-8), "|F_x - 1| " + g(wd));
  const real q = exp(-kPi / 2);
  real worst = 0;
  real prev = abs(find_cusp(10, p).mu.mu2);
  for (int n = 11; n <= 20; ++n) {
    const real cur = abs(find_cusp(n, p).mu.mu2);
    worst = std::max(worst, lnrel(cur / prev, q));
    prev = cur;
  }
  v.require(worst < real(0.15), "cusp mu2 ratio off by " + g(worst));
  v.why << " max|F-x|=" << g(wf) << " max|F_x-1|=" << g(wd) << " max_rel(ratio)=" << g(worst);
}

// 5. axis intersections
void c5(Verdict& v) {
  const ModelParams p;
  for (const auto& [n, tol] : {std::pair{10, 0.10}, std::pair{50, 0.03}}) {
    const real pred = mu1_axis_intersection(n, p);
    const auto xs = horn_axis_crossings(trace_lp_horn(n, p), p);
    v.require(!xs.empty(), "no axis crossing at n=" + std::to_string(n));
    if (xs.empty()) continue;
    real best = 1e9;
    for (const auto& x : xs) best = std::min(best, lnrel(x.mu.mu1, pred));
    v.require(best < real(tol), "n=" + std::to_string(n) + " rel error " + g(best));
    v.why << " n=" << n << ": rel_err=" << g(best);
  }
}

// 6. PD curves, GPD residuals, horn verdicts
void c6(Verdict& v) {
  const ModelParams p;
  real wp = 0;
  for (int n : {10, 20}) {
    const Curve pd = trace_pd_curve(n, p);
    v.require(pd.points.size() > 1, "empty PD curve");
    for (const auto& q : pd.points) wp = std::max(wp, abs(natural_residuals(n, q.u, p).flip));
  }
  v.require(wp < real(1e-8), "|F_x + 1| " + g(wp));
  HornOptions half;
  half.h0 = half.h0 / 2;
  half.h_max = half.h_max / 2;
  real wg = 0;
  int ngpd = 0, flips = 0, inconclusive = 0;
  for (int n = 10; n <= 20; ++n) {
    const HornClass a = classify_horn(n, p), b = classify_horn(n, p, half);
    if (a.verdict == HornVerdict::Inconclusive) ++inconclusive;
    if (a.verdict != b.verdict) ++flips;
    for (const auto& q : a.gpds) {
      ++ngpd;
      wg = std::max(wg, abs(q.residuals[2]));
    }
  }
  v.require(wg < real(1e-6), "GPD residual " + g(wg));
  v.require(inconclusive == 0, std::to_string(inconclusive) + " inconclusive verdicts");
  v.require(flips == 0, std::to_string(flips) + " verdicts changed under step halving");
  v.why << " max|F_x+1|=" << g(wp) << " gpd_points=" << ngpd << " max_gpd_residual(scaled)=" << g(wg)
        << " horns=11 inconclusive=" << inconclusive << " changed=" << flips;
}

// 7. 3D map consistency
void c7(Verdict& v) {
  const ModelParams p;
  real wl = 0, wp = 0, gap = 0;
  for (int n : {10, 15}) {
    const Curve lp = trace_lp3(n, p), pd = trace_pd3(n, p);
    v.require(lp.points.size() > 1 && pd.points.size() > 1, "missing 3D curve");
    for (const auto& [c, kind, target] :
         {std::tuple{&lp, Curve3Kind::LP, 1}, std::tuple{&pd, Curve3Kind::PD, -1}})
      for (const auto& q : c->points) {
        const FixedPoint3D f = fixed_point_from_u(n, q.u, p);
        real best = 10;
        for (const auto& l : f.mult.lambda) best = std::min(best, abs(l - CxR(target)));
        (target > 0 ? wl : wp) = std::max(target > 0 ? wl : wp, best);
        gap = std::max(gap, scalar_x4_gap(n, q.u, kind, p));
      }
  }
  v.require(wl < real(1e-8), "LP3 multiplier " + g(wl));
  v.require(wp < real(1e-8), "PD3 multiplier " + g(wp));
  v.require(gap < 10, "x4 gap " + g(gap) + " x4^(2nu)");
  v.why << " max|lambda-1|=" << g(wl) << " max|lambda+1|=" << g(wp) << " max_gap/x4^(2nu)=" << g(gap);
}

// 8. codim-2 zoo
void c8(Verdict& v) {
  const ModelParams p;
  std::map<Codim2Kind, int> count;
  int segments = 0, good_segments = 0;
  for (int n = 8; n <= 20; ++n) {
    std::vector<Codim2Point3D> pts = detect_codim2_3d(trace_lp3(n, p), Curve3Kind::LP, n, p);
    const auto pdp = detect_codim2_3d(trace_pd3(n, p), Curve3Kind::PD, n, p);
    pts.insert(pts.end(), pdp.begin(), pdp.end());
    std::vector<VecR> ends;  // a seed at the far end of a traced segment is the same segment
    for (const auto& q : pts) {
      ++count[q.kind];
      if (q.kind != Codim2Kind::R1 && q.kind != Codim2Kind::R2) continue;
      if (std::any_of(ends.begin(), ends.end(), [&](const VecR& e) { return (e - q.u).norm() < real(1e-6); }))
        continue;
      const NSCurve ns = trace_ns3(q, n, p);
      for (const auto& e : ns.points)
        if (e.kind == Codim2Kind::R1 || e.kind == Codim2Kind::R2) ends.push_back(e.u);
      ++segments;
      bool ends_ok = (ns.start == "R1" || ns.start == "R2") && (ns.end == "R1" || ns.end == "R2");
      int r3 = 0, r4 = 0;
      for (const auto& e : ns.points) {
        auto near = [&](double z) {
          int k = 0;
          for (const auto& l : e.fp.mult.lambda)
            if (abs(l - CxR(z)) < real(1e-6)) ++k;
          return k;
        };
        if (e.kind == Codim2Kind::R1) ends_ok = ends_ok && near(1) == 2;
        if (e.kind == Codim2Kind::R2) ends_ok = ends_ok && near(-1) == 2;
        if (e.kind == Codim2Kind::R3) ++r3;
        if (e.kind == Codim2Kind::R4) ++r4;
      }
      if (ends_ok && r3 >= 1 && r4 >= 1) ++good_segments;
    }
  }
  for (Codim2Kind k : {Codim2Kind::CP, Codim2Kind::GPD, Codim2Kind::R1, Codim2Kind::R2, Codim2Kind::LPPD}) {
    v.require(count[k] >= 1, "no " + to_string(k));
    v.why << " " << to_string(k) << "=" << count[k];
  }
  v.require(good_segments >= 1, "no NS segment with R1/R2 ends and R3, R4");
  v.why << " ns_segments=" << segments << " complete=" << good_segments;
}

// 9. secondary homoclinics
void c9(Verdict& v) {
  const ModelParams p;
  const real target = log(p.C2 * p.C2 / (p.C1 * p.C1));
  const real q = exp(-kTwoPi * p.beta);
  real wh = 0, wt = 0, wr = 0, e10 = 0, e40 = 0;
  SecHomPoint prev;
  for (int m = 10; m <= 40; ++m) {
    const Curve c = trace_parabola(m, p);
    for (const auto& pt : c.points) wh = std::max(wh, sechom_point(m, pt.u(0), pt.u(1), p).residual);
    const SecHomPoint t = find_turning(m, p);
    wt = std::max({wt, t.residual, t.turn_residual});
    if (m > 10) wr = std::max(wr, lnrel(t.mu.mu2 / prev.mu.mu2, q));
    if (m == 10) e10 = lnrel(4 * kPi * m * t.mu.mu1, target);
    if (m == 40) e40 = lnrel(4 * kPi * m * t.mu.mu1, target);
    prev = t;
  }
  v.require(wh < real(1e-12), "|H| on parabolas " + g(wh));
  v.require(wt < real(1e-10), "turning residual " + g(wt));
  v.require(e10 < real(0.10), "m=10 rel error " + g(e10));
  v.require(e40 < real(0.03), "m=40 rel error " + g(e40));
  v.require(wr < real(0.10), "mu2 ratio off by " + g(wr));
  v.why << " max|H|=" << g(wh) << " max_turning_residual=" << g(wt) << " err10=" << g(e10)
        << " err40=" << g(e40) << " max_rel(ratio)=" << g(wr);
}

// 10. derivatives and determinism
real richardson(const std::function<real(const real&)>& f, const real& x, const real& h) {
  auto c = [&](const real& s) { return (f(x + s) - f(x - s)) / (2 * s); };
  return (4 * c(h / 2) - c(h)) / 3;
}

void c10(Verdict& v) {
  std::mt19937_64 rng(20240611);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const ModelParams p;

  real wf = 0;
  for (int t = 0; t < 100; ++t) {
    const real x = exp(real(U(-25, -0.1)));
    wf = std::max(wf, scalar_map_fd_check(x, {real(U(-0.05, 0.05)), real(U(-0.1, 0.1))}, p));
  }

  real wg = 0;
  for (int t = 0; t < 100; ++t) {
    const StateS s{real(U(0.5, 1.5)), real(U(0.5, 1.5)), exp(real(U(-14, -0.7)))};
    const Mu mu{real(U(-0.05, 0.05)), real(U(-0.1, 0.1))};
    const Mat3 J = model_map_3d(s, mu, p).jac;
    const real xs[3] = {s.x1, s.x3, s.x4};
    for (int j = 0; j < 3; ++j) {
      for (int i = 0; i < 3; ++i) {
        auto comp = [&](const real& z) {
          real y[3] = {xs[0], xs[1], xs[2]};
          y[j] = z;
          return model_map_3d_image(Vec3(y[0], y[1], y[2]), mu, p)(i);
        };
        const real fd = richardson(comp, xs[j], real(1e-5) * xs[j]);
        const real scale = std::max(J.col(j).cwiseAbs().maxCoeff(), real(1e-30));
        wg = std::max(wg, abs(fd - J(i, j)) / scale);
      }
    }
  }

  double wl = 0;
  const ls::LSParams lp;
  for (int t = 0; t < 100; ++t) {
    const ls::State x(U(-20, 20), U(-20, 20), U(-5, 40), U(-20, 20));
    const ls::Jac J = ls::jacobian(x, lp);
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-3 * std::max(1.0, std::abs(x(j)));
      auto c = [&](double s) {
        ls::State a = x, b = x;
        a(j) += s;
        b(j) -= s;
        return ((ls::rhs(a, lp) - ls::rhs(b, lp)) / (2 * s)).eval();
      };
      const ls::State fd = (4 * c(h / 2) - c(h)) / 3;
      const double scale = std::max(1.0, J.col(j).cwiseAbs().maxCoeff());
      wl = std::max(wl, (fd - J.col(j)).cwiseAbs().maxCoeff() / scale);
    }
  }

  real wh = 0;
  for (int t = 0; t < 100; ++t) {
    const Mu m{real(U(-0.05, 0.05)), exp(real(U(-12, -0.7)))};
    const HValue hv = h_eval(m, p);
    const real d1 = richardson([&](const real& a) { return h_eval({a, m.mu2}, p, 0).h; }, m.mu1, real(1e-5));
    const real d2 =
        richardson([&](const real& b) { return h_eval({m.mu1, b}, p, 0).h; }, m.mu2, real(1e-5) * m.mu2);
    wh = std::max({wh, abs(d1 - hv.dmu1) / std::max(abs(hv.dmu1), real(1e-30)),
                   abs(d2 - hv.dmu2) / std::max(abs(hv.dmu2), real(1e-30))});
  }
  v.require(wf < real(1e-6), "F derivatives " + g(wf));
  v.require(wg < real(1e-6), "G Jacobian " + g(wg));
  v.require(wl < 1e-6, "LS Jacobian " + g(wl));
  v.require(wh < real(1e-6), "H partials " + g(wh));
  v.why << " fd_rel: F=" << g(wf) << " G=" << g(wg) << " LS=" << g(wl) << " H=" << g(wh);

  const std::vector<std::vector<std::string>> cmds = {
      {"scalar-horns", "--n-range", "10:13"},
      {"scalar-cusps", "--n-range", "10:40"},
      {"scalar-gpd", "--n-range", "10:13"},
      {"map3d-curves", "--n-range", "10:11"},
      {"map3d-codim2", "--n-range", "10:11"},
      {"sechom", "--m-range", "10:20"},
      {"asymptotics-compare", "--kind", "cusp", "--n-range", "10:20"},
      {"ls-eigen"},
      {"ls-3dl-locus"},
      {"ls-shoot", "--r-grid", "15.29:15.31:5"}};
  const fs::path root = fs::temp_directory_path() / "tdl_acceptance_det";
  int differing = 0;
  for (const auto& c : cmds) {
    std::map<std::string, std::string> ref;
    int k = 0;
    for (const char* w : {"1", "1", "4"}) {
      const fs::path d = root / (c[0] + "_" + std::to_string(k++));
      fs::remove_all(d);
      fs::create_directories(d);
      std::vector<std::string> args = c;
      args.insert(args.end(), {"--workers", w, "--out", d.string()});
      std::ostringstream o, e;
      if (cli::run(args, o, e) != 0) {
        v.require(false, c[0] + " failed: " + e.str());
        break;
      }
      std::map<std::string, std::string> files;
      for (const auto& f : fs::directory_iterator(d)) {
        const std::string name = f.path().filename().string();
        if (name.find(".manifest.json") != std::string::npos) continue;  // records the worker count
        std::ifstream in(f.path(), std::ios::binary);
        files[name] = std::string(std::istreambuf_iterator<char>(in), {});
      }
      if (ref.empty()) ref = files;
      else if (files != ref) ++differing;
    }
  }
  fs::remove_all(root);
  v.require(differing == 0, std::to_string(differing) + " runs differ");
  v.why << " commands=" << cmds.size() << " differing_runs=" << differing;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(Verdict&)>> all = {c1, c2, c3, c4, c5, c6, c7, c8, c9, c10};
  bool ok = true;
  for (int k = 1; k <= 10; ++k) {
    if (only && k != only) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      all[k - 1](v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1fs)%s\n", k, v.pass ? "PASS" : "FAIL", secs, v.why.str().c_str());
    std::fflush(stdout);
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}
