// snls: run presets, certify noise hypotheses, compare reports.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "snls/harness.hpp"

namespace {

using snls::json;

json read_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file);
  return json::parse(in);
}

// Config document with the command-line overrides merged in; manifests are
// unwrapped to their config.
json config_document(const std::string& file, const json& overrides) {
  json doc = read_json(file);
  if (doc.is_object() && doc.contains("config") && doc.contains("code_version")) {
    doc = doc.at("config");
  }
  if (overrides.contains("seed")) doc["ensemble"]["seed"] = overrides["seed"];
  if (overrides.contains("paths")) {
    doc["ensemble"]["paths"] = overrides["paths"];
    // let the per-path default follow the new path count
    if (doc.contains("output") && doc["output"].is_object()) doc["output"].erase("per_path_csv");
  }
  if (overrides.contains("workers")) doc["ensemble"]["workers"] = overrides["workers"];
  if (overrides.contains("out")) doc["output"]["dir"] = overrides["out"];
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic NLS on the torus: simulation and verification harness"};
  app.require_subcommand(1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<int> workers;
  std::optional<std::string> out;

  auto* run = app.add_subcommand("run", "run an experiment preset");
  run->add_option("config", config_file, "config or manifest JSON")->required();
  run->add_option("--seed", seed, "master seed override");
  run->add_option("--paths", paths, "path count override");
  run->add_option("--workers", workers, "worker thread override");
  run->add_option("--out", out, "output directory override");

  auto* check = app.add_subcommand("check-hypothesis", "certify the configured noise");
  check->add_option("config", config_file, "config JSON")->required();

  std::string report_a, report_b;
  auto* compare = app.add_subcommand("compare", "contrast a deterministic and a noisy report");
  compare->add_option("reportA", report_a)->required();
  compare->add_option("reportB", report_b)->required();

  auto* estimate = app.add_subcommand("estimate-k", "estimate the Moser constant");
  estimate->add_option("config", config_file, "config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compare) {
      std::cout << snls::compare_presets(read_json(report_a), read_json(report_b)).dump(2) << '\n';
      return 0;
    }

    json overrides = json::object();
    if (seed) overrides["seed"] = *seed;
    if (paths) overrides["paths"] = *paths;
    if (workers) overrides["workers"] = *workers;
    if (out) overrides["out"] = *out;
    const snls::ExperimentConfig cfg =
        snls::parse_config(config_document(config_file, overrides));

    if (*estimate) {
      std::cout << json{{"K_hat", snls::estimate_moser(cfg)},
                        {"budget", cfg.moser.budget},
                        {"seed", cfg.moser.seed}}
                       .dump(2)
                << '\n';
      return 0;
    }
    if (*check) {
      const snls::HypothesisReport r = snls::certify(cfg, snls::estimate_moser(cfg));
      std::cout << snls::to_json(r).dump(2) << '\n';
      return r.verdict == snls::Verdict::Certified ? 0 : 2;
    }

    const snls::ExperimentResult result = snls::run_experiment(cfg, overrides);
    std::cout << result.report.dump(2) << '\n';
    return result.passed ? 0 : 1;
  } catch (const snls::CertificationFailure& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 2;
  } catch (const snls::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
