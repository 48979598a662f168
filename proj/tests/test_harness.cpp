#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "snls/harness.hpp"

using namespace snls;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("snls_test_" + name);
  fs::remove_all(dir);
  return dir;
}

json minimal_decay() {
  return json::parse(R"({
    "preset": "decay",
    "equation": {"sigma": 1, "alpha_re": 1.0, "s": 2.0},
    "noise": {"a": 3.0, "b": 1.0, "c": 0.0, "d_exp": 1.0},
    "lyapunov": {"p": 0.5}
  })");
}

json small_noisy(const std::string& dir) {
  json doc = json::parse(R"({
    "preset": "no-blowup",
    "grid": {"dim": 1, "n": 8, "N": 32},
    "equation": {"sigma": 1, "alpha_re": 1.0, "s": 1.0},
    "noise": {"a": 2.0, "b": 1.0, "c": 0.0, "d_exp": 1.0},
    "initial": {"amplitude": 0.5, "modulation": 0.5},
    "scheme": {"dt": 1e-3, "T": 0.2, "record_stride": 20},
    "ensemble": {"paths": 12, "seed": 5},
    "moser": {"budget": 50}
  })");
  doc["output"]["dir"] = dir;
  return doc;
}

json report(const std::string& noise_kind, std::size_t crossed, double ci_high) {
  json r;
  r["preset"] = noise_kind == "none" ? "blowup-baseline" : "no-blowup";
  r["noise"] = noise_kind == "none" ? json("none") : json{{"a", 2.0}};
  r["physical"] = {{"grid", {{"n", 64}}}};
  r["exit"] = {{"crossed", crossed}, {"ci_high", ci_high}};
  return r;
}

}  // namespace

TEST_CASE("parse errors carry the field path") {
  json doc = minimal_decay();
  doc["equation"]["sigma"] = 1.5;
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("sigma must be a positive integer"), ConfigError);

  doc = minimal_decay();
  doc["equation"]["s"] = 0.4;
  try {
    parse_config(doc);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "equation.s");
    CHECK(std::string(e.what()).find("s must exceed d/2") != std::string::npos);
  }

  doc = minimal_decay();
  doc["equation"]["sigmaa"] = 1;
  CHECK_THROWS_WITH_AS(parse_config(doc), doctest::Contains("sigmaa"), ConfigError);

  doc = minimal_decay();
  doc["preset"] = "sideways";
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = minimal_decay();
  doc.erase("noise");
  CHECK_THROWS_AS(parse_config(doc), ConfigError);

  doc = minimal_decay();
  doc["grid"] = {{"n", 64}, {"N", 100}};
  CHECK_THROWS_AS(parse_config(doc), ConfigError);
}

TEST_CASE("minimal decay config fills defaults") {
  const ExperimentConfig cfg = parse_config(minimal_decay());
  CHECK(cfg.preset == Preset::Decay);
  CHECK(cfg.grid.n == 64);
  CHECK(cfg.grid.N == 256);
  CHECK(cfg.ensemble.paths == 256);
  CHECK(cfg.scheme.id == Scheme::ExponentialEulerMaruyama);
  CHECK(cfg.hypothesis() == Hypothesis::H5DoublePrime);
  CHECK(cfg.moment_p() == 0.5);
  CHECK(cfg.threshold(2.0) == doctest::Approx(2000.0));

  // the serialised form parses back to itself
  const json full = to_json(cfg);
  CHECK(to_json(parse_config(full)) == full);
}

TEST_CASE("refuted decay aborts before simulating") {
  json doc = minimal_decay();
  doc["noise"]["a"] = 2.0;
  doc["grid"] = {{"n", 16}, {"N", 64}};
  doc["moser"] = {{"budget", 200}};
  const fs::path dir = scratch("refuted");
  doc["output"]["dir"] = dir.string();
  const ExperimentConfig cfg = parse_config(doc);
  CHECK(estimate_moser(cfg) > 1.0);
  try {
    run_experiment(cfg);
    FAIL("expected certification failure");
  } catch (const CertificationFailure& e) {
    CHECK(e.report().verdict == Verdict::Refuted);
    CHECK(e.report().margin <= 0.0);
  }
  CHECK(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / "ensemble.csv"));
}

TEST_CASE("compare verdicts") {
  CHECK(compare_presets(report("none", 1, 1.0), report("noise", 0, 0.014))["verdict"] ==
        "noise-regularization observed");
  CHECK(compare_presets(report("noise", 40, 0.2), report("none", 1, 1.0))["verdict"] ==
        "noise-regularization not observed");
  CHECK(compare_presets(report("none", 0, 0.8), report("noise", 0, 0.014))["verdict"] ==
        "no baseline blow-up; contrast vacuous");
  CHECK_THROWS_AS(compare_presets(report("none", 1, 1.0), report("none", 1, 1.0)), std::invalid_argument);
  json other = report("noise", 0, 0.01);
  other["physical"]["grid"]["n"] = 32;
  CHECK_THROWS_AS(compare_presets(report("none", 1, 1.0), other), std::invalid_argument);
}

TEST_CASE("runs are reproducible") {
  const fs::path a = scratch("run_a");
  const fs::path b = scratch("run_b");
  const fs::path c = scratch("run_c");

  const ExperimentResult first = run_experiment(parse_config(small_noisy(a.string())));
  CHECK(first.report.at("paths") == 12);
  CHECK(fs::exists(a / "paths" / "path_00000.csv"));

  json threaded = small_noisy(b.string());
  threaded["ensemble"]["workers"] = 3;
  run_experiment(parse_config(threaded));
  CHECK(slurp(a / "ensemble.csv") == slurp(b / "ensemble.csv"));

  ExperimentConfig again = load_config(a / "manifest.json");
  again.output.dir = c.string();
  run_experiment(again);
  CHECK(slurp(a / "ensemble.csv") == slurp(c / "ensemble.csv"));
  CHECK(slurp(a / "report.json") == slurp(c / "report.json"));
  CHECK(slurp(a / "paths" / "path_00007.csv") == slurp(c / "paths" / "path_00007.csv"));
}

TEST_CASE("conservation preset") {
  json doc = json::parse(R"({
    "preset": "conservation",
    "grid": {"n": 32, "N": 128},
    "equation": {"sigma": 1, "alpha_re": -1.0, "s": 2.0},
    "scheme": {"dt": 1e-3, "T": 0.5}
  })");
  const fs::path dir = scratch("conservation");
  doc["output"]["dir"] = dir.string();
  const ExperimentResult r = run_experiment(parse_config(doc));
  CHECK(r.passed);
  CHECK(r.report["conservation"]["mass_drift"].get<double>() <= 1e-10);
  CHECK(r.report["noise"] == "none");
}
