#include "tdl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdl/asymptotics.hpp"
#include "tdl/errors.hpp"
#include "tdl/lorenz_stenflo.hpp"
#include "tdl/map3d.hpp"
#include "tdl/scalar_bif.hpp"
#include "tdl/sechom.hpp"

#ifndef TDL_VERSION
#define TDL_VERSION "0.0.0"
#endif

namespace tdl::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        f.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    f.push_back(cur);
    return f;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1));
    } else if (t.header.empty()) {
      t.header = split(line);
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

struct RunConfig {
  std::string config_path;
  std::string out_dir{"."};
  int workers{1};

  // model overrides, kept as text so quad values survive parsing
  std::map<std::string, std::string> model;

  std::string profile{"paper-3dl"};
  std::map<std::string, std::string> ls;

  std::string n_range{"10:20"};
  std::string m_range{"10:40"};
  std::string mu1_lo{"-0.1"};
  std::string mu1_hi{"0.1"};
  std::string h0{"1e-3"};
  std::string h_max{"0.05"};
  std::string kind{"cusp"};
  std::string curves{"lp,pd"};
  std::string free{"b"};
  std::string range{"10:20"};
  int points{101};
  double delta{1e-6};
  double t_max{50};
  double escape_radius{1.0};
  double section_z{10};
  std::string r_grid;
};

const std::vector<std::string> kModelKeys = {"nu", "beta", "C1", "C2", "alpha1", "alpha2",
                                             "alpha3", "alpha4", "phi1", "phi2"};
const std::vector<std::string> kLsKeys = {"sigma", "r", "b", "s", "eps1", "eps2"};

struct Entry {
  std::string section;
  std::string key;
  CLI::Option* opt{nullptr};
  std::function<void(const json&)> set;
  std::function<json()> get;
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

class Registry {
 public:
  void add(CLI::App* app, const std::string& section, const std::string& key, std::string& var,
           const std::string& help) {
    CLI::Option* o = app->add_option(flag_name(key), var, help);
    if (!var.empty()) o->capture_default_str();
    entries_.push_back({section, key, o,
                        [&var, key](const json& j) {
                          if (j.is_string())
                            var = j.get<std::string>();
                          else if (j.is_number())
                            var = format_double(j.get<double>());
                          else
                            throw UsageError("config key '" + key + "' must be a string or number");
                        },
                        [&var] { return json(var); }});
  }
  void add(CLI::App* app, const std::string& section, const std::string& key, int& var,
           const std::string& help) {
    CLI::Option* o = app->add_option(flag_name(key), var, help)->capture_default_str();
    entries_.push_back({section, key, o,
                        [&var, key](const json& j) {
                          if (!j.is_number_integer()) throw UsageError("config key '" + key + "' must be an integer");
                          var = j.get<int>();
                        },
                        [&var] { return json(var); }});
  }
  void add(CLI::App* app, const std::string& section, const std::string& key, double& var,
           const std::string& help) {
    CLI::Option* o = app->add_option(flag_name(key), var, help)->capture_default_str();
    entries_.push_back({section, key, o,
                        [&var, key](const json& j) {
                          if (!j.is_number()) throw UsageError("config key '" + key + "' must be a number");
                          var = j.get<double>();
                        },
                        [&var] { return json(var); }});
  }
  // Optional text override stored in a map; absent means "keep the default".
  void add_override(CLI::App* app, const std::string& section, const std::string& key,
                    std::map<std::string, std::string>& m, const std::string& help) {
    auto holder = std::make_shared<std::string>();
    holders_.push_back(holder);
    CLI::Option* o = app->add_option(flag_name(key), *holder, help);
    o->each([&m, key](const std::string& v) { m[key] = v; });
    entries_.push_back({section, key, o,
                        [&m, key](const json& j) {
                          if (j.is_string())
                            m[key] = j.get<std::string>();
                          else if (j.is_number())
                            m[key] = format_double(j.get<double>());
                          else
                            throw UsageError("config key '" + key + "' must be a string or number");
                        },
                        [&m, key] {
                          const auto it = m.find(key);
                          return it == m.end() ? json(nullptr) : json(it->second);
                        }});
  }

  // Fill options that were not given on the command line from the JSON config.
  void apply(const json& cfg) const {
    for (const auto& [section, body] : cfg.items()) {
      if (!has_section(section)) continue;
      if (!body.is_object()) throw UsageError("config section '" + section + "' must be an object");
      for (const auto& [key, val] : body.items()) {
        const Entry* e = find(section, key);
        if (!e) throw UsageError("unknown config key '" + section + "." + key + "'");
        if (e->opt->count() == 0) e->set(val);
      }
    }
  }

  json dump() const {
    json j = json::object();
    for (const auto& e : entries_) j[e.section][e.key] = e.get();
    return j;
  }

 private:
  bool has_section(const std::string& s) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.section == s; });
  }
  const Entry* find(const std::string& s, const std::string& k) const {
    for (const auto& e : entries_)
      if (e.section == s && e.key == k) return &e;
    return nullptr;
  }
  std::vector<Entry> entries_;
  std::vector<std::shared_ptr<std::string>> holders_;
};

struct IntRange {
  int lo{0};
  int hi{0};
  int count() const { return hi - lo + 1; }
};

IntRange parse_int_range(const std::string& s, const char* what) {
  IntRange r;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d:%d%c", &r.lo, &r.hi, &tail) != 2 || r.lo > r.hi || r.lo < 1)
    throw UsageError(std::string(what) + ": expected LO:HI with 1 <= LO <= HI, got '" + s + "'");
  return r;
}

std::pair<double, double> parse_real_range(const std::string& s, const char* what) {
  double a = 0, b = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf%c", &a, &b, &tail) != 2 || !(a <= b))
    throw UsageError(std::string(what) + ": expected LO:HI with LO <= HI, got '" + s + "'");
  return {a, b};
}

real parse_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    (void)std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return real(s);
  } catch (const std::exception&) {
    throw UsageError(what + ": not a number: '" + s + "'");
  }
}

real positive_real(const std::string& s, const std::string& what) {
  const real v = parse_real(s, what);
  if (!(v > 0)) throw UsageError(what + " must be positive");
  return v;
}

ModelParams model_params(const RunConfig& c) {
  ModelParams p;
  std::map<std::string, real*> f = {{"nu", &p.nu},         {"beta", &p.beta},     {"C1", &p.C1},
                                    {"C2", &p.C2},         {"alpha1", &p.alpha1}, {"alpha2", &p.alpha2},
                                    {"alpha3", &p.alpha3}, {"alpha4", &p.alpha4}, {"phi1", &p.phi1},
                                    {"phi2", &p.phi2}};
  for (const auto& [k, v] : c.model) *f.at(k) = parse_real(v, "--" + k);
  p.validate();
  return p;
}

ls::LSParams ls_params(const RunConfig& c) {
  ls::LSParams p = ls::profile(c.profile);
  std::map<std::string, double*> f = {{"sigma", &p.sigma}, {"r", &p.r},       {"b", &p.b},
                                      {"s", &p.s},         {"eps1", &p.eps1}, {"eps2", &p.eps2}};
  for (const auto& [k, v] : c.ls) *f.at(k) = to_double(parse_real(v, "--" + k));
  p.validate();
  return p;
}

// ---------------------------------------------------------------- parallel map

template <class R>
std::vector<R> parallel_map(int count, int workers, const std::function<R(int)>& fn) {
  std::vector<std::optional<R>> res(count);
  std::vector<std::exception_ptr> errs(count);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        res[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min(workers, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  std::vector<R> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    if (errs[i]) std::rethrow_exception(errs[i]);
    out.push_back(std::move(*res[i]));
  }
  return out;
}

// ---------------------------------------------------------------- writers

using Opt = std::optional<double>;

struct Row {
  std::string curve_id;
  int branch{0};
  int step{0};
  double theta{0}, mu1{0}, mu2{0};
  Opt x1, x3, x4, res_norm, det_jmi, det_jpi, ns;
};

const char* kCurveHeader = "curve_id,branch,step,theta,mu1,mu2,x1,x3,x4,res_norm,det_JmI,det_JpI,ns_test\n";

std::string fmt(const Opt& v) { return v ? format_double(*v) : std::string(); }

void append_row(std::string& s, const Row& r) {
  s += r.curve_id + ',' + std::to_string(r.branch) + ',' + std::to_string(r.step) + ',' +
       format_double(r.theta) + ',' + format_double(r.mu1) + ',' + format_double(r.mu2) + ',' + fmt(r.x1) +
       ',' + fmt(r.x3) + ',' + fmt(r.x4) + ',' + fmt(r.res_norm) + ',' + fmt(r.det_jmi) + ',' +
       fmt(r.det_jpi) + ',' + fmt(r.ns) + '\n';
}

double d(const real& v) { return to_double(v); }

std::vector<Row> scalar_rows(const Curve& c, const std::string& id, int n, bool pd, const ModelParams& p) {
  std::vector<Row> rows;
  int k = 0;
  for (const auto& pt : c.points) {
    const NaturalResiduals nr = natural_residuals(n, pt.u, p);
    Row r;
    r.curve_id = id;
    r.branch = c.branch;
    r.step = k++;
    r.theta = d(pt.u(0));
    r.mu1 = d(pt.u(1));
    r.mu2 = d(pt.u(2) * horn_scale(n, p));
    r.x4 = d(x_of_theta(n, pt.u(0), p));
    using std::abs;
    r.res_norm = d(std::max(abs(nr.fixed), pd ? abs(nr.flip) : abs(nr.fold)));
    r.det_jmi = d(nr.fold);
    r.det_jpi = d(nr.flip);
    rows.push_back(r);
  }
  return rows;
}

std::vector<Row> map3_rows(const Curve& c, const std::string& id, int n, const ModelParams& p) {
  std::vector<Row> rows;
  int k = 0;
  const Mat3 I = Mat3::Identity();
  for (const auto& pt : c.points) {
    const FixedPoint3D fp = fixed_point_from_u(n, pt.u, p);
    Row r;
    r.curve_id = id;
    r.branch = c.branch;
    r.step = k++;
    r.theta = d(fp.theta);
    r.mu1 = d(fp.mu.mu1);
    r.mu2 = d(fp.mu.mu2);
    r.x1 = d(fp.state.x1);
    r.x3 = d(fp.state.x3);
    r.x4 = d(fp.state.x4);
    r.res_norm = d(fp.residual_norm);
    r.det_jmi = d((fp.jac - I).determinant());
    r.det_jpi = d((fp.jac + I).determinant());
    r.ns = d(ns_test(fp.jac));
    rows.push_back(r);
  }
  return rows;
}

json unknowns_json(const VecR& u) {
  json a = json::array();
  for (Eigen::Index i = 0; i < u.size(); ++i) a.push_back(d(u(i)));
  return a;
}

json scalar_point_json(const ScalarBifPoint& s, const ModelParams& p) {
  VecR u(3);
  u << s.theta, s.mu.mu1, s.s;
  real res = 0;
  using std::abs;
  for (const auto& v : s.residuals) res = std::max(res, abs(v));
  const real fx = scalar_map(s.x, s.mu, p, 1).fx;
  return json{{"kind", to_string(s.kind)},
              {"n_or_m", s.n},
              {"mu1", d(s.mu.mu1)},
              {"mu2", d(s.mu.mu2)},
              {"unknowns", unknowns_json(u)},
              {"multipliers", json::array({json{{"re", d(fx)}, {"im", 0.0}}})},
              {"residual", d(res)}};
}

json codim2_json(const Codim2Point3D& c, int n) {
  json m = json::array();
  for (const auto& l : c.fp.mult.lambda) m.push_back(json{{"re", d(l.re)}, {"im", d(l.im)}});
  return json{{"kind", to_string(c.kind)},
              {"n_or_m", n},
              {"mu1", d(c.fp.mu.mu1)},
              {"mu2", d(c.fp.mu.mu2)},
              {"unknowns", unknowns_json(c.u)},
              {"multipliers", m},
              {"residual", d(c.fp.residual_norm)},
              {"on", to_string(c.on)},
              {"test_value", d(c.test_value)}};
}

struct Ctx {
  std::string command;
  RunConfig cfg;
  fs::path out;
  std::vector<std::string> files;
  std::ostream* log{nullptr};

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw UsageError("cannot write " + (out / name).string());
    f << content;
    if (!f) throw UsageError("write failed for " + (out / name).string());
    files.push_back(name);
    *log << "wrote " << (out / name).string() << '\n';
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + '\n'); }
};

HornOptions horn_options(const RunConfig& c) {
  HornOptions o;
  o.mu1_lo = parse_real(c.mu1_lo, "--mu1-lo");
  o.mu1_hi = parse_real(c.mu1_hi, "--mu1-hi");
  if (!(o.mu1_lo < o.mu1_hi)) throw UsageError("--mu1-lo must be below --mu1-hi");
  o.h0 = positive_real(c.h0, "--h0");
  o.h_max = positive_real(c.h_max, "--h-max");
  return o;
}

Map3Options map3_options(const RunConfig& c) {
  Map3Options o;
  o.mu1_lo = parse_real(c.mu1_lo, "--mu1-lo");
  o.mu1_hi = parse_real(c.mu1_hi, "--mu1-hi");
  if (!(o.mu1_lo < o.mu1_hi)) throw UsageError("--mu1-lo must be below --mu1-hi");
  o.h0 = positive_real(c.h0, "--h0");
  o.h_max = positive_real(c.h_max, "--h-max");
  return o;
}

// ---------------------------------------------------------------- commands

void cmd_scalar_horns(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const HornOptions o = horn_options(x.cfg);
  const IntRange nr = parse_int_range(x.cfg.n_range, "--n-range");
  struct Out {
    std::vector<Row> rows;
    json points;
  };
  const auto res = parallel_map<Out>(nr.count(), x.cfg.workers, [&](int i) {
    const int n = nr.lo + i;
    Out r;
    const Horn h = trace_lp_horn(n, p, o);
    for (const Curve* c : {&h.branch1, &h.branch2}) {
      auto rows = scalar_rows(*c, "lp_n" + std::to_string(n), n, false, p);
      r.rows.insert(r.rows.end(), rows.begin(), rows.end());
    }
    const Curve pd = trace_pd_curve(n, p, o);
    auto rows = scalar_rows(pd, "pd_n" + std::to_string(n), n, true, p);
    r.rows.insert(r.rows.end(), rows.begin(), rows.end());
    r.points = json::array();
    r.points.push_back(scalar_point_json(h.cusp, p));
    for (const auto& a : horn_axis_crossings(h, p, o)) {
      json j = scalar_point_json(a, p);
      j["kind"] = "AXIS";
      r.points.push_back(j);
    }
    return r;
  });
  std::string csv = kCurveHeader;
  json pts = json::array();
  for (const auto& r : res) {
    for (const auto& row : r.rows) append_row(csv, row);
    for (const auto& j : r.points) pts.push_back(j);
  }
  x.write("scalar-horns.csv", csv);
  x.write_json("scalar-horns.json", json{{"points", pts}});
}

void cmd_scalar_cusps(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const HornOptions o = horn_options(x.cfg);
  const IntRange nr = parse_int_range(x.cfg.n_range, "--n-range");
  const auto cusps = parallel_map<ScalarBifPoint>(nr.count(), x.cfg.workers,
                                                  [&](int i) { return find_cusp(nr.lo + i, p, o); });
  std::string csv = "n,theta,mu1,mu2,residual\n";
  using std::abs;
  for (const auto& c : cusps) {
    real res = 0;
    for (const auto& v : c.residuals) res = std::max(res, abs(v));
    csv += std::to_string(c.n) + ',' + format_double(d(c.theta)) + ',' + format_double(d(c.mu.mu1)) + ',' +
           format_double(d(c.mu.mu2)) + ',' + format_double(d(res)) + '\n';
  }
  x.write("scalar-cusps.csv", csv);
}

void cmd_scalar_gpd(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const HornOptions o = horn_options(x.cfg);
  const IntRange nr = parse_int_range(x.cfg.n_range, "--n-range");
  const auto cls = parallel_map<HornClass>(nr.count(), x.cfg.workers,
                                           [&](int i) { return classify_horn(nr.lo + i, p, o); });
  json pts = json::array(), horns = json::array();
  for (int i = 0; i < nr.count(); ++i) {
    const HornClass& c = cls[i];
    for (const auto& g : c.gpds) pts.push_back(scalar_point_json(g, p));
    horns.push_back(json{{"n", nr.lo + i},
                         {"verdict", to_string(c.verdict)},
                         {"gpd_count", c.gpd_count},
                         {"self_intersects", c.self_intersects}});
    *x.log << "# n=" << nr.lo + i << " verdict=" << to_string(c.verdict) << '\n';
  }
  x.write_json("scalar-gpd.json", json{{"points", pts}, {"horns", horns}});
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void cmd_map3d_curves(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const Map3Options o = map3_options(x.cfg);
  const IntRange nr = parse_int_range(x.cfg.n_range, "--n-range");
  bool lp = false, pd = false;
  for (const auto& k : split_list(x.cfg.curves)) {
    if (k == "lp")
      lp = true;
    else if (k == "pd")
      pd = true;
    else
      throw UsageError("--curves: unknown curve kind '" + k + "' (lp, pd)");
  }
  if (!lp && !pd) throw UsageError("--curves: empty");
  const auto res = parallel_map<std::vector<Row>>(nr.count(), x.cfg.workers, [&](int i) {
    const int n = nr.lo + i;
    std::vector<Row> rows;
    if (lp) rows = map3_rows(trace_lp3(n, p, o), "lp3_n" + std::to_string(n), n, p);
    if (pd) {
      auto r = map3_rows(trace_pd3(n, p, o), "pd3_n" + std::to_string(n), n, p);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
  });
  std::string csv = kCurveHeader;
  for (const auto& rows : res)
    for (const auto& r : rows) append_row(csv, r);
  x.write("map3d-curves.csv", csv);
}

void cmd_map3d_codim2(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const Map3Options o = map3_options(x.cfg);
  const IntRange nr = parse_int_range(x.cfg.n_range, "--n-range");
  struct Out {
    json points = json::array();
    json segments = json::array();
    std::vector<Row> ns_rows;
  };
  const auto res = parallel_map<Out>(nr.count(), x.cfg.workers, [&](int i) {
    const int n = nr.lo + i;
    Out r;
    std::vector<Codim2Point3D> pts = detect_codim2_3d(trace_lp3(n, p, o), Curve3Kind::LP, n, p, o);
    const auto pdp = detect_codim2_3d(trace_pd3(n, p, o), Curve3Kind::PD, n, p, o);
    pts.insert(pts.end(), pdp.begin(), pdp.end());
    int k = 0;
    // R1/R2 ends of segments already traced: a seed at one of them is the same segment
    std::vector<VecR> ends;
    for (const auto& c : pts) {
      r.points.push_back(codim2_json(c, n));
      if (c.kind != Codim2Kind::R1 && c.kind != Codim2Kind::R2) continue;
      if (std::any_of(ends.begin(), ends.end(),
                      [&](const VecR& e) { return (e - c.u).norm() < real(1e-6); }))
        continue;
      const NSCurve ns = trace_ns3(c, n, p, o);
      for (const auto& q : ns.points)
        if (q.kind == Codim2Kind::R1 || q.kind == Codim2Kind::R2) ends.push_back(q.u);
      const std::string id = "ns_n" + std::to_string(n) + "_" + std::to_string(k++);
      json inner = json::array();
      for (const auto& q : ns.points) {
        if (q.kind == Codim2Kind::R3 || q.kind == Codim2Kind::R4) r.points.push_back(codim2_json(q, n));
        inner.push_back(to_string(q.kind));
      }
      r.segments.push_back(json{{"id", id},
                                {"n", n},
                                {"seed", to_string(c.kind)},
                                {"start", ns.start},
                                {"end", ns.end},
                                {"neutral_saddle", ns.neutral_saddle},
                                {"points", inner},
                                {"n_points", ns.curve.points.size()}});
      auto rows = map3_rows(ns.curve, id, n, p);
      r.ns_rows.insert(r.ns_rows.end(), rows.begin(), rows.end());
    }
    return r;
  });
  json pts = json::array(), segs = json::array();
  std::string csv = kCurveHeader;
  std::map<std::string, int> counts;
  for (const auto& r : res) {
    for (const auto& j : r.points) {
      pts.push_back(j);
      ++counts[j["kind"].get<std::string>()];
    }
    for (const auto& s : r.segments) segs.push_back(s);
    for (const auto& row : r.ns_rows) append_row(csv, row);
  }
  json cj = json::object();
  for (const char* k : {"CP", "GPD", "LPPD", "R1", "R2", "R3", "R4"}) cj[k] = counts[k];
  x.write_json("map3d-codim2.json", json{{"counts", cj}, {"points", pts}, {"ns_segments", segs}});
  x.write("map3d-ns.csv", csv);
  *x.log << "# counts " << cj.dump() << " ns_segments=" << segs.size() << '\n';
}

void cmd_sechom(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const IntRange mr = parse_int_range(x.cfg.m_range, "--m-range");
  ParabolaOptions o;
  o.mu1_lo = parse_real(x.cfg.mu1_lo, "--mu1-lo");
  o.mu1_hi = parse_real(x.cfg.mu1_hi, "--mu1-hi");
  if (!(o.mu1_lo < o.mu1_hi)) throw UsageError("--mu1-lo must be below --mu1-hi");
  o.h0 = positive_real(x.cfg.h0, "--h0");
  o.h_max = positive_real(x.cfg.h_max, "--h-max");
  struct Out {
    std::vector<Row> rows;
    json turning;
  };
  const auto res = parallel_map<Out>(mr.count(), x.cfg.workers, [&](int i) {
    const int m = mr.lo + i;
    Out r;
    const Curve c = trace_parabola(m, p, o);
    int k = 0;
    for (const auto& pt : c.points) {
      const SecHomPoint s = sechom_point(m, pt.u(0), pt.u(1), p);
      Row row;
      row.curve_id = "par_m" + std::to_string(m);
      row.step = k++;
      row.theta = d(s.theta);
      row.mu1 = d(s.mu.mu1);
      row.mu2 = d(s.mu.mu2);
      row.res_norm = d(s.residual);
      r.rows.push_back(row);
    }
    const SecHomPoint t = find_turning(m, p, o);
    VecR u(2);
    u << t.theta, t.mu.mu1;
    r.turning = json{{"kind", "T"},
                     {"n_or_m", m},
                     {"mu1", d(t.mu.mu1)},
                     {"mu2", d(t.mu.mu2)},
                     {"unknowns", unknowns_json(u)},
                     {"multipliers", json::array()},
                     {"residual", d(t.residual)},
                     {"turn_residual", d(t.turn_residual)}};
    return r;
  });
  std::string csv = kCurveHeader;
  json tps = json::array();
  for (const auto& r : res) {
    for (const auto& row : r.rows) append_row(csv, row);
    tps.push_back(r.turning);
  }
  x.write("sechom.csv", csv);
  x.write_json("sechom.json", json{{"points", tps}});
}

void cmd_asymptotics_compare(Ctx& x) {
  const ModelParams p = model_params(x.cfg);
  const std::string& kind = x.cfg.kind;
  if (kind != "cusp" && kind != "turning" && kind != "axis")
    throw UsageError("--kind must be cusp, turning or axis");
  const IntRange nr = parse_int_range(kind == "turning" ? x.cfg.m_range : x.cfg.n_range,
                                      kind == "turning" ? "--m-range" : "--n-range");
  const HornOptions ho = horn_options(x.cfg);
  const auto pairs = parallel_map<std::pair<Mu, Mu>>(nr.count(), x.cfg.workers, [&](int i) {
    const int n = nr.lo + i;
    if (kind == "cusp") return std::pair{find_cusp(n, p, ho).mu, cusp_asymptotic(n, p)};
    if (kind == "turning") return std::pair{find_turning(n, p).mu, turning_asymptotic(n, p)};
    const real pred = mu1_axis_intersection(n, p);
    const auto xs = horn_axis_crossings(trace_lp_horn(n, p, ho), p, ho);
    if (xs.empty()) throw NotFoundError("no axis crossing on horn n=" + std::to_string(n));
    using std::abs;
    const auto best = std::min_element(xs.begin(), xs.end(), [&](const auto& a, const auto& b) {
      return abs(a.mu.mu1 - pred) < abs(b.mu.mu1 - pred);
    });
    return std::pair{Mu{best->mu.mu1, 0}, Mu{pred, 0}};
  });
  std::vector<Mu> ex, as;
  for (const auto& [e, a] : pairs) {
    ex.push_back(e);
    as.push_back(a);
  }
  const CompareResult cr = compare_table(ex, as);
  std::string csv = "index,mu1_exact,mu2_exact,mu1_asym,mu2_asym,rel_error,scaled_mu1\n";
  for (int i = 0; i < nr.count(); ++i) {
    const int n = nr.lo + i;
    csv += std::to_string(n) + ',' + format_double(d(ex[i].mu1)) + ',' + format_double(d(ex[i].mu2)) + ',' +
           format_double(d(as[i].mu1)) + ',' + format_double(d(as[i].mu2)) + ',' +
           format_double(d(cr.errors[i])) + ',' + format_double(d(4 * kPi * n * ex[i].mu1)) + '\n';
  }
  const std::string verdict = "# verdict: kind=" + kind + " decreasing=" + (cr.decreasing ? "true" : "false") +
                              " spearman=" + format_double(d(cr.spearman)) +
                              " first=" + format_double(d(cr.errors.front())) +
                              " last=" + format_double(d(cr.errors.back())) + '\n';
  csv += verdict;
  x.write("asymptotics-compare.csv", csv);
  *x.log << verdict;
}

json ls_params_json(const ls::LSParams& p) {
  return json{{"sigma", p.sigma}, {"r", p.r}, {"b", p.b}, {"s", p.s}, {"eps1", p.eps1}, {"eps2", p.eps2}};
}

void cmd_ls_eigen(Ctx& x) {
  const ls::LSParams p = ls_params(x.cfg);
  const ls::EigenData e = ls::equilibrium_eigenvalues(p);
  json ev = json::array();
  for (const auto& l : e.lambda) ev.push_back(json{{"re", l.real()}, {"im", l.imag()}});
  x.write_json("ls-eigen.json", json{{"profile", x.cfg.profile},
                                     {"params", ls_params_json(p)},
                                     {"eigenvalues", ev},
                                     {"delta0", e.delta0},
                                     {"omega0", e.omega0},
                                     {"eps0", e.eps0},
                                     {"real_stable", e.real_stable},
                                     {"nu0", e.nu0},
                                     {"sigma0", e.sigma0},
                                     {"wild", e.nu0 < 1 && e.sigma0 > 0},
                                     {"residual", e.residual}});
}

void cmd_ls_locus(Ctx& x) {
  const ls::LSParams p = ls_params(x.cfg);
  if (x.cfg.free != "b" && x.cfg.free != "r") throw UsageError("--free must be r or b");
  const auto [lo, hi] = parse_real_range(x.cfg.range, "--range");
  if (x.cfg.points < 1) throw UsageError("--points must be positive");
  ls::LocusOptions o;
  o.n_grid = x.cfg.points;
  const ls::LocusResult L = ls::find_3dl_locus(p, x.cfg.free == "b" ? ls::LocusFree::B : ls::LocusFree::R, lo, hi, o);
  std::string csv = "r,b,re_pair,residual\n";
  for (const auto& q : L.points)
    csv += format_double(q.r) + ',' + format_double(q.b) + ',' + format_double(q.re_pair) + ',' +
           format_double(q.residual) + '\n';
  if (L.truncated) csv += "# truncated: " + L.message + '\n';
  x.write("ls-3dl-locus.csv", csv);
}

void cmd_ls_shoot(Ctx& x) {
  const ls::LSParams p0 = ls_params(x.cfg);
  ls::ShootOptions o;
  o.delta = x.cfg.delta;
  o.t_max = x.cfg.t_max;
  o.escape_radius = x.cfg.escape_radius;
  o.section.offset = x.cfg.section_z;
  std::vector<double> rs{p0.r};
  if (!x.cfg.r_grid.empty()) {
    double a = 0, b = 0;
    int k = 0;
    char tail = 0;
    if (std::sscanf(x.cfg.r_grid.c_str(), "%lf:%lf:%d%c", &a, &b, &k, &tail) != 3 || k < 1 || !(a <= b))
      throw UsageError("--r-grid: expected LO:HI:COUNT");
    rs.clear();
    for (int i = 0; i < k; ++i) rs.push_back(k == 1 ? a : a + (b - a) * i / (k - 1));
  }
  const auto runs = parallel_map<json>(static_cast<int>(rs.size()), x.cfg.workers, [&](int i) {
    ls::LSParams p = p0;
    p.r = rs[i];
    const auto br = ls::unstable_manifold_shoot(p, o);
    json bj = json::array();
    for (const auto& b : br) {
      json cr = json::array();
      for (const auto& c : b.crossings)
        cr.push_back(json{{"t", c.t}, {"x", {c.x(0), c.x(1), c.x(2), c.x(3)}}});
      bj.push_back(json{{"sign", b.sign},
                        {"escaped", b.escaped},
                        {"min_distance", std::isfinite(b.min_distance) ? json(b.min_distance) : json(nullptr)},
                        {"t_min", b.t_min},
                        {"crossings", cr},
                        {"note", b.note}});
    }
    return json{{"r", p.r}, {"b", p.b}, {"branches", bj}};
  });
  x.write_json("ls-shoot.json", json{{"params", ls_params_json(p0)}, {"runs", runs}});
}

struct Command {
  std::string name;
  std::string help;
  void (*fn)(Ctx&);
  bool model;
  bool ls;
  std::vector<std::string> keys;  // command-specific options
};

const std::vector<Command>& commands() {
  static const std::vector<Command> c = {
      {"scalar-horns", "LP horns, PD curves, cusps and mu2 = 0 crossings of the scalar map", cmd_scalar_horns, true,
       false, {"n_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"scalar-cusps", "Newton-refined cusp points of the scalar map", cmd_scalar_cusps, true, false,
       {"n_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"scalar-gpd", "GPD points and spring/saddle verdicts", cmd_scalar_gpd, true, false,
       {"n_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"map3d-curves", "LP3/PD3 curves of the 3D map", cmd_map3d_curves, true, false,
       {"n_range", "mu1_lo", "mu1_hi", "h0", "h_max", "curves"}},
      {"map3d-codim2", "codimension-two points of the 3D map and NS segments", cmd_map3d_codim2, true, false,
       {"n_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"sechom", "secondary-homoclinic parabolas and turning points", cmd_sechom, true, false,
       {"m_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"asymptotics-compare", "asymptotic vs computed cusps, turning points or axis crossings",
       cmd_asymptotics_compare, true, false, {"kind", "n_range", "m_range", "mu1_lo", "mu1_hi", "h0", "h_max"}},
      {"ls-eigen", "spectrum at the origin of the Lorenz-Stenflo system", cmd_ls_eigen, false, true, {}},
      {"ls-3dl-locus", "3DL transition locus", cmd_ls_locus, false, true, {"free", "range", "points"}},
      {"ls-shoot", "unstable-manifold shooting diagnostics", cmd_ls_shoot, false, true,
       {"delta", "t_max", "escape_radius", "section_z", "r_grid"}},
  };
  return c;
}

void bind(Registry& reg, CLI::App* sc, const std::string& section, const std::string& key, RunConfig& c) {
  if (key == "n_range") return reg.add(sc, section, key, c.n_range, "horn index range LO:HI");
  if (key == "m_range") return reg.add(sc, section, key, c.m_range, "parabola index range LO:HI");
  if (key == "mu1_lo") return reg.add(sc, section, key, c.mu1_lo, "lower mu1 bound of the continuation box");
  if (key == "mu1_hi") return reg.add(sc, section, key, c.mu1_hi, "upper mu1 bound of the continuation box");
  if (key == "h0") return reg.add(sc, section, key, c.h0, "initial continuation step");
  if (key == "h_max") return reg.add(sc, section, key, c.h_max, "maximal continuation step");
  if (key == "kind") return reg.add(sc, section, key, c.kind, "cusp | turning | axis");
  if (key == "curves") return reg.add(sc, section, key, c.curves, "comma list of lp, pd");
  if (key == "free") return reg.add(sc, section, key, c.free, "free parameter r | b");
  if (key == "range") return reg.add(sc, section, key, c.range, "grid range LO:HI of the other parameter");
  if (key == "points") return reg.add(sc, section, key, c.points, "grid points");
  if (key == "delta") return reg.add(sc, section, key, c.delta, "offset along the unstable eigenvector");
  if (key == "t_max") return reg.add(sc, section, key, c.t_max, "integration time");
  if (key == "escape_radius") return reg.add(sc, section, key, c.escape_radius, "distance that ends the start-up phase");
  if (key == "section_z") return reg.add(sc, section, key, c.section_z, "section plane z = value");
  if (key == "r_grid") return reg.add(sc, section, key, c.r_grid, "scan r over LO:HI:COUNT");
  throw std::logic_error("unbound key " + key);
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> n;
  for (const auto& c : commands()) n.push_back(c.name);
  return n;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"tdl: return-map bifurcation toolkit", "tdl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TDL_VERSION);
  std::map<std::string, Registry> regs;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands()) {
    CLI::App* sc = app.add_subcommand(c.name, c.help);
    Registry& reg = regs[c.name];
    sc->add_option("--config", cfg.config_path, "JSON config; flags override its values");
    reg.add(sc, "run", "out", cfg.out_dir, "output directory");
    reg.add(sc, "run", "workers", cfg.workers, "worker threads");
    if (c.model)
      for (const auto& k : kModelKeys) reg.add_override(sc, "model", k, cfg.model, "model coefficient " + k);
    if (c.ls) {
      reg.add(sc, "ls", "profile", cfg.profile, "parameter profile (paper-3dl, sigma1)");
      for (const auto& k : kLsKeys) reg.add_override(sc, "ls", k, cfg.ls, "Lorenz-Stenflo parameter " + k);
    }
    for (const auto& k : c.keys) bind(reg, sc, c.name, k, cfg);
    subs[c.name] = sc;
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const Command* cmd = nullptr;
  for (const auto& c : commands())
    if (subs[c.name]->parsed()) cmd = &c;
  if (!cmd) {
    err << "error: no command\n";
    return 1;
  }
  const Registry& reg = regs[cmd->name];

  try {
    if (!cfg.config_path.empty()) {
      std::ifstream f(cfg.config_path);
      if (!f) throw UsageError("cannot read config " + cfg.config_path);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw UsageError("config " + cfg.config_path + ": " + e.what());
      }
      if (!j.is_object()) throw UsageError("config must be a JSON object");
      reg.apply(j);
    }
    if (cfg.workers < 1) throw UsageError("--workers must be >= 1");
    for (const auto& [k, v] : cfg.model) (void)parse_real(v, "--" + k);
    for (const auto& [k, v] : cfg.ls) (void)parse_real(v, "--" + k);

    Ctx x;
    x.command = cmd->name;
    x.cfg = cfg;
    x.out = cfg.out_dir;
    x.log = &out;
    std::error_code ec;
    fs::create_directories(x.out, ec);
    if (ec) throw UsageError("cannot create output directory " + cfg.out_dir);
    cmd->fn(x);

    json m = reg.dump();
    m["run"].erase("workers");
    if (cmd->model) {
      const ModelParams mp = model_params(cfg);
      const std::vector<const real*> vals = {&mp.nu,     &mp.beta,   &mp.C1,     &mp.C2,   &mp.alpha1,
                                             &mp.alpha2, &mp.alpha3, &mp.alpha4, &mp.phi1, &mp.phi2};
      for (std::size_t i = 0; i < kModelKeys.size(); ++i) m["model"][kModelKeys[i]] = vals[i]->str(36);
    }
    if (cmd->ls) m["ls"] = json{{"profile", cfg.profile}, {"values", ls_params_json(ls_params(cfg))}};
    json manifest{{"toolkit", "tdl"},
                  {"version", TDL_VERSION},
                  {"command", cmd->name},
                  {"config", m},
                  {"workers", cfg.workers},
                  {"outputs", x.files}};
    x.write_json(cmd->name + ".manifest.json", manifest);
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const NotFoundError& e) {
    err << "not found: " << e.what() << '\n';
    return 2;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> a;
  for (int i = 1; i < argc; ++i) a.emplace_back(argv[i]);
  return run(a, out, err);
}

}  // namespace tdl::cli
