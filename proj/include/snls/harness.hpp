#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "snls/analysis.hpp"

namespace snls {

using json = nlohmann::json;

enum class Preset { NoBlowup, BlowupBaseline, Decay, Stationary, Conservation, HypothesisCheck };

std::string to_string(Preset preset);
Preset parse_preset(const std::string& name);

// Malformed or invalid configuration; `what()` starts with the field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : std::invalid_argument(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// The preset's noise hypothesis did not certify; nothing was simulated.
class CertificationFailure : public std::runtime_error {
 public:
  explicit CertificationFailure(HypothesisReport report);
  const HypothesisReport& report() const { return report_; }

 private:
  HypothesisReport report_;
};

struct GridConfig {
  int dim = 1;
  int n = 64;
  int N = 256;
};

// u0(x) = amplitude * (1 + modulation * cos x_1)
struct InitialConfig {
  double amplitude = 1.0;
  double modulation = 0.5;
};

struct SchemeBlock {
  Scheme id = Scheme::ExponentialEulerMaruyama;
  double dt = 1e-3;
  double T = 5.0;
  std::optional<double> M;           // absolute threshold
  std::optional<double> M_factor;    // threshold relative to |u0|_s
  int record_stride = 10;
};

struct EnsembleConfig {
  int paths = 256;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct MoserConfig {
  int budget = 2000;
  std::uint64_t seed = 7;
};

struct OutputConfig {
  std::string dir = "out";
  std::optional<bool> per_path_csv;  // unset: on for <= 32 paths
};

struct AnalysisConfig {
  double t_lo = 1.0;                  // decay fit window; default T / 5
  std::optional<double> t_hi;         // unset: T
  double lambda_fraction = 0.5;       // supermartingale test at lambda = fraction * p B~
  double exit_bound = 0.05;           // Wilson upper bound for the no-blowup verdict
  double mass_tol = 1e-10;
  double energy_tol = 1e-5;
  double scan_max = 1e4;
  bool fail_fast = true;
  std::optional<Hypothesis> hypothesis;  // unset: the preset's own
};

struct ExperimentConfig {
  Preset preset = Preset::Decay;
  GridConfig grid;
  EquationParams equation;
  std::optional<NoiseSpec> noise;
  LyapunovSpec lyapunov;
  InitialConfig initial;
  SchemeBlock scheme;
  EnsembleConfig ensemble;
  MoserConfig moser;
  OutputConfig output;
  AnalysisConfig analysis;

  double threshold(double hs0) const;
  std::optional<Hypothesis> hypothesis() const;
  double moment_p() const;
};

// Strict: unknown keys and wrong types are rejected with the field path.
ExperimentConfig parse_config(const json& doc);
// Accepts a config file or a manifest written by run_experiment.
ExperimentConfig load_config(const std::filesystem::path& file);
// Every field written out, defaults included.
json to_json(const ExperimentConfig& config);

json to_json(const HypothesisReport& report);
json to_json(const DecayTestReport& report);

SpectralField initial_field(const ExperimentConfig& config, const GridPtr& grid);

// K^ for the configured grid and equation.
double estimate_moser(const ExperimentConfig& config);

HypothesisReport certify(const ExperimentConfig& config, double K);

struct ExperimentResult {
  bool passed = false;
  json manifest;
  json report;
  std::optional<EnsembleEstimate> ensemble;
  std::filesystem::path dir;
};

// Runs the preset, writes manifest.json, report.json, ensemble.csv (and
// per-path files when enabled) under config.output.dir. Throws
// CertificationFailure when the required hypothesis does not certify and
// fail_fast is set.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const json& overrides = json::object());

// Contrast of a blowup-baseline report with a stochastic one.
json compare_presets(const json& report_a, const json& report_b);

std::string code_version();

}  // namespace snls
