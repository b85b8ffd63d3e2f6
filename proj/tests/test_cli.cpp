#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tdl/cli.hpp"

namespace fs = std::filesystem;
using tdl::cli::run;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() / ("tdl_cli_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int call(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

// all non-manifest files of a run directory, keyed by name
std::map<std::string, std::string> outputs(const fs::path& d) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::directory_iterator(d)) {
    const std::string name = e.path().filename().string();
    if (name.find(".manifest.json") == std::string::npos) m[name] = slurp(e.path());
  }
  return m;
}

}  // namespace

TEST_CASE("formatting and csv round trip") {
  using tdl::cli::format_double;
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  const fs::path d = fresh_dir("csv");
  std::ofstream(d / "t.csv") << "# note\na,b\n1,2\n3,4\n";
  const auto t = tdl::cli::read_csv((d / "t.csv").string());
  CHECK(t.comments.size() == 1);
  CHECK(t.column("b") == 1);
  CHECK(t.column("zz") == -1);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "3");
}

TEST_CASE("scalar-cusps over 10:90") {
  const fs::path d = fresh_dir("cusps");
  REQUIRE(call({"scalar-cusps", "--n-range", "10:90", "--out", d.string()}) == 0);
  const auto t = tdl::cli::read_csv((d / "scalar-cusps.csv").string());
  CHECK(t.rows.size() == 81);
  const int ir = t.column("residual");
  REQUIRE(ir >= 0);
  for (const auto& r : t.rows) {
    CHECK(std::stod(r[ir]) < 1e-10);
    // lossless: re-formatting the parsed value reproduces the text
    for (std::size_t c = 1; c < r.size(); ++c) CHECK(tdl::cli::format_double(std::stod(r[c])) == r[c]);
  }
  const auto man = nlohmann::json::parse(slurp(d / "scalar-cusps.manifest.json"));
  CHECK(man["command"] == "scalar-cusps");
  CHECK(std::stod(man["config"]["model"]["C2"].get<std::string>()) == 1.2);
}

TEST_CASE("ls-eigen output") {
  const fs::path d = fresh_dir("eigen");
  REQUIRE(call({"ls-eigen", "--out", d.string()}) == 0);
  const auto j = nlohmann::json::parse(slurp(d / "ls-eigen.json"));
  CHECK(j["real_stable"].get<double>() == -1.9884);
  CHECK(std::abs(j["eps0"].get<double>() - 2.7769) < 5e-3);
  CHECK(std::abs(j["nu0"].get<double>() - 0.716) < 2e-3);
  CHECK(j["eigenvalues"].size() == 4);
}

TEST_CASE("asymptotics-compare verdict") {
  const fs::path d = fresh_dir("cmp");
  REQUIRE(call({"asymptotics-compare", "--kind", "turning", "--m-range", "10:20", "--out", d.string()}) == 0);
  const auto t = tdl::cli::read_csv((d / "asymptotics-compare.csv").string());
  CHECK(t.rows.size() == 11);
  bool verdict = false;
  for (const auto& c : t.comments)
    if (c.find("decreasing=true") != std::string::npos) verdict = true;
  CHECK(verdict);
}

TEST_CASE("exit codes and configuration") {
  const fs::path d = fresh_dir("codes");
  CHECK(call({"--help"}) == 0);
  CHECK(call({"no-such-command"}) == 1);
  CHECK(call({"scalar-cusps", "--n-range", "5:x", "--out", d.string()}) == 1);
  CHECK(call({"asymptotics-compare", "--kind", "bogus", "--out", d.string()}) == 1);
  CHECK(call({"ls-eigen", "--b", "-1", "--out", d.string()}) == 2);
  CHECK(call({"scalar-cusps", "--C1", "0", "--out", d.string()}) == 2);

  // config file values apply, flags override them, unknown keys are rejected
  std::ofstream(d / "cfg.json") << R"({"ls": {"b": "2.5"}, "run": {"workers": 2}})";
  REQUIRE(call({"ls-eigen", "--config", (d / "cfg.json").string(), "--out", d.string()}) == 0);
  CHECK(nlohmann::json::parse(slurp(d / "ls-eigen.json"))["real_stable"].get<double>() == -2.5);
  REQUIRE(call({"ls-eigen", "--config", (d / "cfg.json").string(), "--b", "3", "--out", d.string()}) == 0);
  CHECK(nlohmann::json::parse(slurp(d / "ls-eigen.json"))["real_stable"].get<double>() == -3);
  CHECK(call({"ls-eigen", "--config", (d / "missing.json").string(), "--out", d.string()}) == 1);
  std::ofstream(d / "broken.json") << "{ not json";
  CHECK(call({"ls-eigen", "--config", (d / "broken.json").string(), "--out", d.string()}) == 1);
  std::ofstream(d / "bad.json") << R"({"ls": {"bb": "2.5"}})";
  CHECK(call({"ls-eigen", "--config", (d / "bad.json").string(), "--out", d.string()}) == 1);
}

TEST_CASE("every command is deterministic across runs and worker counts") {
  const std::vector<std::vector<std::string>> cmds = {
      {"scalar-horns", "--n-range", "10:12"},
      {"scalar-cusps", "--n-range", "10:30"},
      {"scalar-gpd", "--n-range", "10:12", "--C2", "-1.2"},
      {"map3d-curves", "--n-range", "10:11"},
      {"map3d-codim2", "--n-range", "10:10", "--phi1", "1.0471975511965977461542144610931676",
       "--phi2", "1.0471975511965977461542144610931676"},
      {"sechom", "--m-range", "10:14"},
      {"asymptotics-compare", "--kind", "axis", "--n-range", "10:14"},
      {"ls-eigen"},
      {"ls-3dl-locus", "--points", "21"},
      {"ls-shoot", "--r-grid", "15.3:15.31:4"}};
  for (const auto& c : cmds) {
    CAPTURE(c[0]);
    std::map<std::string, std::string> ref;
    int k = 0;
    for (const char* w : {"1", "1", "4"}) {
      const fs::path d = fresh_dir(c[0] + "_" + std::to_string(k++));
      auto args = c;
      args.insert(args.end(), {"--workers", w, "--out", d.string()});
      REQUIRE(call(args) == 0);
      const auto o = outputs(d);
      CHECK(!o.empty());
      if (ref.empty()) ref = o;
      else CHECK(o == ref);
    }
  }
}
