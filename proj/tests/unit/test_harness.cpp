#include <doctest.h>

#include <filesystem>

#include "nflab/error.hpp"
#include "nflab/harness.hpp"

using namespace nflab;
namespace fs = std::filesystem;

namespace {

json minimal() {
  return json::parse(R"({
    "model": {"type": "harmonic", "nu": 0.5, "cutoffs": 8},
    "perturbation": {"omega": 1, "order": 0},
    "propagation": {"t_end": 128, "dt": 1, "r": [0, 1], "integrator": "magnus4"},
    "output": {"run_id": "unit"},
    "checks": {"epsilon": [{"r": 1, "min": -1e-12, "max": 1e-12}]}
  })");
}

std::string temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nflab_" + name);
  fs::remove_all(p);
  return p.string();
}

json strip_times(json m) {
  m.erase("started");
  m.erase("finished");
  m.erase("artifacts");
  if (m.contains("stages") && m["stages"].contains("propagate"))
    for (auto& [k, v] : m["stages"]["propagate"].items())
      if (v.is_object()) v.erase("csv");
  return m;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("missing model is a schema error naming the key") {
  json c = minimal();
  c.erase("model");
  CHECK_THROWS_WITH_AS(parse_config(c), doctest::Contains("'model'"), InvalidInput);
  RunOptions o;
  o.write_files = false;
  RunOutcome out = run_config(c, o);
  CHECK(out.exit_code == 2);
  CHECK(out.manifest["failure_stage"] == "config");
}

TEST_CASE("unknown keys are rejected at every level") {
  json c = minimal();
  c["extra"] = 1;
  CHECK_THROWS_WITH_AS(parse_config(c), doctest::Contains("'extra'"), InvalidInput);
  c = minimal();
  c["model"]["spin"] = 2;
  CHECK_THROWS_WITH_AS(parse_config(c), doctest::Contains("'spin'"), InvalidInput);
  c = minimal();
  c["perturbation"]["cos"] = json::array({{{"k", 1}, {"amp", 1}}});
  CHECK_THROWS_AS(parse_config(c), InvalidInput);
}

TEST_CASE("perturbation shorthands") {
  json c = minimal();
  c["perturbation"] = json::parse(R"({"omega": "sqrt2", "order": 0.5,
      "cos": [{"k": 1, "amplitude": 2, "word": ["x0"]}],
      "sin": [{"k": 2, "amplitude": 1, "word": ["x0"]}],
      "terms": [{"coeff": 0.5, "word": ["n0"]}]})");
  RunConfig rc = parse_config(c);
  ModelHandle m = build_model(rc.model);
  QuasiPeriodicOperator v = build_perturbation(m, rc.drive);
  CHECK(v.coefficients().size() == 5);
  CHECK(v.is_symmetric());
  CHECK(rc.drive.support() == 2);
  c["perturbation"]["terms"] = json::parse(R"([{"k": 1, "word": ["a0"]}])");
  rc = parse_config(c);
  CHECK_THROWS_WITH_AS(build_perturbation(m, rc.drive), doctest::Contains("not symmetric"), InvalidInput);
}

TEST_CASE("exact values from numbers, strings, arrays and objects") {
  CHECK(parse_exact(json(0.5), "x").describe(0) == parse_exact(json("1/2"), "x").describe(0));
  CHECK(parse_exact(json::array({1, "sqrt2"}), "x").size() == 2);
  json obj = {{"generators", {"1", "sqrt2"}}, {"coeffs", {{1, "1/2"}}}};
  CHECK(parse_exact(obj, "x").approx()(0) == doctest::Approx(1.0 + std::sqrt(2.0) / 2.0));
}

TEST_CASE("minimal V = 0 config yields zero growth verdicts") {
  RunOptions o;
  o.out_dir = temp_dir("minimal");
  RunOutcome out = run_config(minimal(), o);
  CHECK(out.exit_code == 0);
  CHECK(out.manifest["status"] == "ok");
  for (const auto& f : out.manifest["stages"]["fits"]["raw"]) CHECK(std::abs(f["epsilon_hat"].get<double>()) < 1e-12);
  CHECK(fs::exists(out.manifest_path));
  CHECK(fs::exists(fs::path(*o.out_dir) / "unit_raw.csv"));
}

TEST_CASE("runs are deterministic and compare to zero deltas") {
  RunOptions o;
  o.out_dir = temp_dir("det");
  json a = run_config(minimal(), o).manifest;
  json b = run_config(minimal(), o).manifest;
  CHECK(strip_times(a) == strip_times(b));
  json report = compare_manifests(a, b);
  CHECK(report["identical"] == true);
  CHECK(report["max_abs_delta"] == 0.0);
}

TEST_CASE("compare refuses different drives") {
  RunOptions o;
  o.out_dir = temp_dir("cmp");
  json a = run_config(minimal(), o).manifest;
  json c = minimal();
  c["perturbation"]["omega"] = 2;
  json b = run_config(c, o).manifest;
  CHECK_THROWS_AS(compare_manifests(a, b), InvalidInput);
}

TEST_CASE("failing checks give exit code 4, numerical failures 3") {
  RunOptions o;
  o.out_dir = temp_dir("fail");
  json c = minimal();
  c["checks"]["delta"] = 0.25;
  RunOutcome out = run_config(c, o);
  CHECK(out.exit_code == 4);

  json r = minimal();
  r["perturbation"] = json::parse(R"({"omega": 1, "order": 0.5, "cos": [{"k": 1, "amplitude": 0.1, "word": ["x0"]}]})");
  r["normal_form"] = json::parse(R"({"regime": "order_one", "steps": 1})");
  r.erase("propagation");
  r.erase("checks");
  RunOutcome bad = run_config(r, o);
  CHECK(bad.exit_code == 3);
  CHECK(bad.manifest["failure_stage"] == "normal_form");
  CHECK(fs::exists(bad.manifest_path));
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("selftest passes") {
  for (const auto& line : selftest(3)) {
    INFO(line.name << ": " << line.detail);
    CHECK(line.pass);
  }
}

}
