#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tdl/asymptotics.hpp"
#include "tdl/cli.hpp"
#include "tdl/errors.hpp"
#include "tdl/lorenz_stenflo.hpp"
#include "tdl/scalar_bif.hpp"
#include "tdl/sechom.hpp"

namespace py = pybind11;
using namespace tdl;

namespace {

// Coefficients arrive as str (exact decimal) or float (shortest repr).
real to_real(const py::handle& v) {
  if (py::isinstance<py::str>(v)) return real(v.cast<std::string>());
  return real(py::repr(v).cast<std::string>());
}

ModelParams model(const py::dict& kw) {
  ModelParams p;
  for (const auto& [k, v] : kw) {
    const std::string key = k.cast<std::string>();
    real* slot = key == "nu"       ? &p.nu
                 : key == "beta"   ? &p.beta
                 : key == "C1"     ? &p.C1
                 : key == "C2"     ? &p.C2
                 : key == "alpha1" ? &p.alpha1
                 : key == "alpha2" ? &p.alpha2
                 : key == "alpha3" ? &p.alpha3
                 : key == "alpha4" ? &p.alpha4
                 : key == "phi1"   ? &p.phi1
                 : key == "phi2"   ? &p.phi2
                                   : nullptr;
    if (!slot) throw py::key_error("unknown model coefficient: " + key);
    *slot = to_real(v);
  }
  p.validate();
  return p;
}

py::dict mu_dict(const Mu& m) {
  py::dict d;
  d["mu1"] = to_double(m.mu1);
  d["mu2"] = to_double(m.mu2);
  d["mu1_str"] = m.mu1.str(36);
  d["mu2_str"] = m.mu2.str(36);
  return d;
}

ls::LSParams ls_params(const std::string& profile, const py::dict& kw) {
  ls::LSParams p = ls::profile(profile);
  for (const auto& [k, v] : kw) {
    const std::string key = k.cast<std::string>();
    const double x = v.cast<double>();
    if (key == "sigma") p.sigma = x;
    else if (key == "r") p.r = x;
    else if (key == "b") p.b = x;
    else if (key == "s") p.s = x;
    else if (key == "eps1") p.eps1 = x;
    else if (key == "eps2") p.eps2 = x;
    else throw py::key_error("unknown Lorenz-Stenflo parameter: " + key);
  }
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "return-map bifurcation toolkit (quad-precision core)";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_LookupError);

  m.def("scalar_map", [](const py::object& x, const py::object& mu1, const py::object& mu2, py::kwargs kw) {
    const ScalarMapValue v = scalar_map(to_real(x), {to_real(mu1), to_real(mu2)}, model(kw), 3);
    py::dict d;
    d["f"] = to_double(v.f);
    d["fx"] = to_double(v.fx);
    d["fxx"] = to_double(v.fxx);
    d["fxxx"] = to_double(v.fxxx);
    return d;
  }, py::arg("x"), py::arg("mu1"), py::arg("mu2"), "F and its x-derivatives; model coefficients as keywords");

  m.def("find_cusp", [](int n, py::kwargs kw) {
    const ScalarBifPoint c = find_cusp(n, model(kw));
    py::dict d = mu_dict(c.mu);
    d["n"] = n;
    d["theta"] = to_double(c.theta);
    double r = 0;
    for (const real& v : c.residuals) r = std::max(r, to_double(abs(v)));
    d["residual"] = r;
    return d;
  }, py::arg("n"));

  m.def("cusp_asymptotic", [](int n, py::kwargs kw) { return mu_dict(cusp_asymptotic(n, model(kw))); },
        py::arg("n"));
  m.def("mu1_axis_intersection",
        [](int n, py::kwargs kw) { return to_double(mu1_axis_intersection(n, model(kw))); }, py::arg("n"));

  m.def("classify_horn", [](int n, py::kwargs kw) {
    const HornClass h = classify_horn(n, model(kw));
    py::dict d;
    d["verdict"] = to_string(h.verdict);
    d["gpd_count"] = h.gpd_count;
    d["self_intersects"] = h.self_intersects;
    return d;
  }, py::arg("n"));

  m.def("find_turning", [](int m_, py::kwargs kw) {
    const SecHomPoint t = find_turning(m_, model(kw));
    py::dict d = mu_dict(t.mu);
    d["m"] = m_;
    d["theta"] = to_double(t.theta);
    d["residual"] = to_double(t.residual);
    d["turn_residual"] = to_double(t.turn_residual);
    return d;
  }, py::arg("m"));

  m.def("ls_eigenvalues", [](const std::string& profile, py::kwargs kw) {
    const ls::EigenData e = ls::equilibrium_eigenvalues(ls_params(profile, kw));
    py::dict d;
    d["eigenvalues"] = std::vector<std::complex<double>>(e.lambda.begin(), e.lambda.end());
    d["nu0"] = e.nu0;
    d["sigma0"] = e.sigma0;
    d["eps0"] = e.eps0;
    d["delta0"] = e.delta0;
    d["omega0"] = e.omega0;
    return d;
  }, py::arg("profile") = "paper-3dl");

  m.def("ls_3dl_locus", [](double lo, double hi, int points, const std::string& profile) {
    ls::LocusOptions o;
    o.n_grid = points;
    const ls::LocusResult r = ls::find_3dl_locus(ls::profile(profile), ls::LocusFree::B, lo, hi, o);
    std::vector<std::pair<double, double>> out;
    for (const auto& q : r.points) out.emplace_back(q.r, q.b);
    return out;
  }, py::arg("r_lo") = 10.0, py::arg("r_hi") = 20.0, py::arg("points") = 101,
     py::arg("profile") = "paper-3dl", "(r, b) pairs on the 3DL locus");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    return py::make_tuple(rc, out.str(), err.str());
  }, py::arg("args"), "run a tdl subcommand in-process; returns (exit_code, stdout, stderr)");

  m.attr("__version__") = TDL_VERSION;
}
