#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <numbers>
#include <thread>

#include "snls/harness.hpp"

#ifndef SNLS_VERSION
#define SNLS_VERSION "dev"
#endif

namespace snls {
namespace fs = std::filesystem;
namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json optional_number(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json physical_block(const ExperimentConfig& cfg) {
  const json full = to_json(cfg);
  return {{"grid", full["grid"]}, {"equation", full["equation"]}, {"initial", full["initial"]}};
}

json exit_block(const EnsembleEstimate& ens, double t) {
  const ExitEstimate e = exit_probability(ens, t);
  return {{"t", t},
          {"crossed", e.crossed},
          {"paths", e.paths},
          {"exit_fraction", e.p_hat},
          {"ci_low", e.ci.low},
          {"ci_high", e.ci.high}};
}

std::vector<Trajectory> run_paths(const ExperimentConfig& cfg, const SpectralField& u0,
                                  const SchemeConfig& scheme, const RecordOptions& record) {
  const int paths = cfg.ensemble.paths;
  std::vector<std::optional<Trajectory>> slots(paths);
  std::vector<std::exception_ptr> errors(paths);
  std::atomic<int> next{0};

  auto work = [&] {
    for (int i = next.fetch_add(1); i < paths; i = next.fetch_add(1)) {
      try {
        PathRng rng(cfg.ensemble.seed, static_cast<std::uint64_t>(i));
        slots[i] = simulate_path(u0, scheme, cfg.equation, cfg.noise, rng, record);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const int workers = std::min(cfg.ensemble.workers, paths);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Trajectory> out;
  out.reserve(paths);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void write_ensemble_csv(const fs::path& file, const EnsembleEstimate& ens) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "t,mean_p_moment,ci_low,ci_high,exit_fraction,exit_ci_low,exit_ci_high\n";
  for (std::size_t j = 0; j < ens.times.size(); ++j) {
    out << num(ens.times[j]) << ',' << num(ens.mean_p_moment[j]) << ',' << num(ens.ci_low[j])
        << ',' << num(ens.ci_high[j]) << ',' << num(ens.exit_fraction[j]) << ','
        << num(ens.exit_ci_low[j]) << ',' << num(ens.exit_ci_high[j]) << '\n';
  }
}

void write_path_files(const fs::path& dir, std::size_t index, const Trajectory& tr) {
  char stem[32];
  std::snprintf(stem, sizeof stem, "path_%05zu", index);
  std::ofstream out(dir / (std::string(stem) + ".csv"));
  if (!out) throw std::runtime_error("cannot write per-path output in " + dir.string());
  out << "t,hs_norm,linf_norm,mass,energy,lyapunov\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out << num(tr.times[i]) << ',' << num(tr.hs_norm[i]) << ',' << num(tr.sup_norm[i]) << ','
        << num(tr.mass[i]) << ',' << (tr.energy ? num((*tr.energy)[i]) : "") << ','
        << (tr.lyapunov ? num((*tr.lyapunov)[i]) : "") << '\n';
  }
  write_json(dir / (std::string(stem) + ".json"),
             {{"path_index", index},
              {"blowup_time", optional_number(tr.blowup_time)},
              {"hard_overflow", tr.hard_overflow}});
}

struct MeanCI {
  double mean = 0.0;
  double low = 0.0;
  double high = 0.0;
};

MeanCI mean_ci(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("no samples");
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double half = xs.size() > 1 ? kZ95 * std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, mean - half, mean + half};
}

json stationary_analysis(const ExperimentConfig& cfg, const std::vector<Trajectory>& trs,
                         bool& passed) {
  const double p = cfg.moment_p();
  const double T = cfg.scheme.T;
  const double half_T = 0.5 * T;
  std::vector<double> half, full;
  std::size_t excluded = 0;
  for (const Trajectory& tr : trs) {
    if (detect_blowup(tr)) {
      ++excluded;
      continue;
    }
    half.push_back(time_average_moment(tr, p, half_T));
    full.push_back(time_average_moment(tr, p));
  }
  if (half.size() < 2) {
    passed = false;
    return {{"error", "fewer than two paths stayed below the threshold"},
            {"excluded_paths", excluded}};
  }
  const MeanCI a = mean_ci(half);
  const MeanCI b = mean_ci(full);
  const double change = std::abs(b.mean - a.mean);
  const double width = a.high - a.low;
  passed = change < width;
  return {{"p", p},
          {"T_half", half_T},
          {"T", T},
          {"mean_half", a.mean},
          {"ci_half", {a.low, a.high}},
          {"mean_full", b.mean},
          {"ci_full", {b.low, b.high}},
          {"change", change},
          {"ci_width_half", width},
          {"used_paths", half.size()},
          {"excluded_paths", excluded}};
}

json conservation_analysis(const ExperimentConfig& cfg, const Trajectory& tr, bool& passed) {
  const double m0 = tr.mass.front();
  const double e0 = tr.energy->front();
  double mass_drift = 0.0, energy_drift = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    mass_drift = std::max(mass_drift, std::abs(tr.mass[i] - m0) / m0);
    energy_drift = std::max(energy_drift, std::abs((*tr.energy)[i] - e0) / std::abs(e0));
  }
  const double final_energy = std::abs(tr.energy->back() - e0) / std::abs(e0);
  passed = !detect_blowup(tr) && mass_drift <= cfg.analysis.mass_tol &&
           energy_drift <= cfg.analysis.energy_tol;
  return {{"mass0", m0},
          {"energy0", e0},
          {"mass_drift", mass_drift},
          {"energy_drift", energy_drift},
          {"energy_drift_final", final_energy},
          {"mass_tol", cfg.analysis.mass_tol},
          {"energy_tol", cfg.analysis.energy_tol}};
}

}  // namespace

std::string code_version() { return std::string("snls ") + SNLS_VERSION; }

json to_json(const HypothesisReport& r) {
  json j = {{"hypothesis", to_string(r.hypothesis)},
            {"verdict", to_string(r.verdict)},
            {"margin", r.margin},
            {"worst_x", r.worst_x},
            {"K_used", r.K_used},
            {"p_used", optional_number(r.p_used)},
            {"spec", {{"a", r.spec.a}, {"b", r.spec.b}, {"c", r.spec.c}, {"d", r.spec.d_exp}}},
            {"params",
             {{"sigma", r.params.sigma},
              {"alpha_re", r.params.alpha.real()},
              {"alpha_im", r.params.alpha.imag()},
              {"s", r.params.s},
              {"dim", r.params.dim}}}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json to_json(const DecayTestReport& r) {
  return {{"test", r.test},
          {"verdict", r.passed ? "pass" : "fail"},
          {"lambda", r.lambda},
          {"p", r.p},
          {"first_violation_t", optional_number(r.first_violation_t)},
          {"details", r.details}};
}

SpectralField initial_field(const ExperimentConfig& cfg, const GridPtr& grid) {
  // A (1 + eps cos x_1) = A + (A eps / 2)(e^{i x_1} + e^{-i x_1}); a plane
  // wave e^{i k.x} has coefficient (2 pi)^{d/2}.
  const double A = cfg.initial.amplitude;
  const double eps = cfg.initial.modulation;
  SpectralField u = SpectralField::constant(grid, A);
  if (eps != 0.0) {
    const double w = 0.5 * A * eps * std::pow(2.0 * std::numbers::pi, 0.5 * grid->dim());
    u[{1, 0, 0}] += w;
    u[{-1, 0, 0}] += w;
  }
  return u;
}

double estimate_moser(const ExperimentConfig& cfg) {
  const GridPtr grid = make_grid(cfg.grid.dim, cfg.grid.n, cfg.grid.N);
  return estimate_moser_constant(cfg.equation, grid, cfg.moser.budget, cfg.moser.seed);
}

HypothesisReport certify(const ExperimentConfig& cfg, double K) {
  if (!cfg.noise) throw std::invalid_argument("certification needs a noise block");
  const auto id = cfg.hypothesis().value_or(Hypothesis::H5DoublePrime);
  return check_hypothesis(id, *cfg.noise, cfg.equation, K, cfg.lyapunov.p, cfg.analysis.scan_max);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const json& overrides) {
  const std::string started = utc_now();
  ExperimentResult result;
  result.dir = cfg.output.dir;
  fs::create_directories(result.dir);

  const GridPtr grid = make_grid(cfg.grid.dim, cfg.grid.n, cfg.grid.N);
  const SpectralField u0 = initial_field(cfg, grid);
  const double hs0 = sobolev_norm(u0, cfg.equation.s);
  const double M = cfg.threshold(hs0);

  json manifest;
  manifest["config"] = to_json(cfg);
  manifest["code_version"] = code_version();
  manifest["hs0"] = hs0;
  manifest["threshold_M"] = M;
  manifest["K_hat"] = nullptr;
  manifest["hypothesis"] = nullptr;

  json report;
  report["preset"] = to_string(cfg.preset);
  report["physical"] = physical_block(cfg);
  report["noise"] = manifest["config"]["noise"];
  report["hs0"] = hs0;
  report["threshold_M"] = M;

  auto finish = [&](bool passed) {
    report["passed"] = passed;
    manifest["invocation"] = {{"started_at", started},
                              {"finished_at", utc_now()},
                              {"overrides", overrides}};
    write_json(result.dir / "report.json", report);
    write_json(result.dir / "manifest.json", manifest);
    result.passed = passed;
    result.manifest = manifest;
    result.report = report;
  };

  std::optional<HypothesisReport> hyp;
  double K = 0.0;
  if (cfg.noise) {
    K = estimate_moser(cfg);
    manifest["K_hat"] = K;
    report["K_hat"] = K;
    manifest["suggested_dt"] = suggested_dt(u0, cfg.equation, cfg.noise, K);
    if (cfg.hypothesis()) {
      hyp = certify(cfg, K);
      manifest["hypothesis"] = to_json(*hyp);
      report["hypothesis"] = manifest["hypothesis"];
    }
  }

  if (cfg.preset == Preset::HypothesisCheck) {
    finish(hyp && hyp->verdict == Verdict::Certified);
    return result;
  }
  if (hyp && hyp->verdict != Verdict::Certified && cfg.analysis.fail_fast) {
    report["aborted"] = "certification";
    finish(false);
    throw CertificationFailure(*hyp);
  }

  const SchemeConfig scheme{cfg.scheme.id, cfg.scheme.dt, cfg.scheme.T, M,
                            cfg.scheme.record_stride};
  RecordOptions record;
  record.energy = cfg.equation.real_alpha();
  record.lyapunov = LyapunovProfile(cfg.lyapunov);

  const std::vector<Trajectory> trs = run_paths(cfg, u0, scheme, record);
  const double p = cfg.moment_p();
  EnsembleEstimate ens = build_ensemble(trs, p);
  report["paths"] = trs.size();
  report["p"] = p;
  report["exit"] = exit_block(ens, cfg.scheme.T);

  bool passed = false;
  switch (cfg.preset) {
    case Preset::BlowupBaseline: {
      const ExitEstimate e = exit_probability(ens, cfg.scheme.T);
      report["blowup_time"] = optional_number(detect_blowup(trs.front()));
      passed = e.crossed == e.paths;
      break;
    }
    case Preset::NoBlowup: {
      const ExitEstimate e = exit_probability(ens, cfg.scheme.T);
      report["exit_bound"] = cfg.analysis.exit_bound;
      passed = e.crossed == 0 && e.ci.high < cfg.analysis.exit_bound;
      break;
    }
    case Preset::Decay: {
      const double B = hyp ? hyp->margin : 0.0;
      const double target = p * B;
      const double t_hi = cfg.analysis.t_hi.value_or(cfg.scheme.T);
      const DecayFit fit = fit_decay_rate(ens, cfg.analysis.t_lo, t_hi);
      const DecayTestReport test =
          supermartingale_decay_test(ens, cfg.analysis.lambda_fraction * target, p);
      const bool fit_ok = fit.lambda_hat >= target - 3.0 * fit.stderr_;
      report["B_tilde"] = B;
      report["lambda_target"] = target;
      report["fit"] = {{"lambda_hat", fit.lambda_hat},
                       {"stderr", fit.stderr_},
                       {"t_lo", cfg.analysis.t_lo},
                       {"t_hi", t_hi},
                       {"passed", fit_ok}};
      report["tests"] = json::array({to_json(test)});
      passed = fit_ok && test.passed;
      break;
    }
    case Preset::Stationary: {
      report["time_average"] = stationary_analysis(cfg, trs, passed);
      break;
    }
    case Preset::Conservation: {
      report["conservation"] = conservation_analysis(cfg, trs.front(), passed);
      break;
    }
    case Preset::HypothesisCheck:
      break;
  }

  write_ensemble_csv(result.dir / "ensemble.csv", ens);
  if (cfg.output.per_path_csv.value_or(false)) {
    const fs::path dir = result.dir / "paths";
    fs::create_directories(dir);
    for (std::size_t i = 0; i < trs.size(); ++i) write_path_files(dir, i, trs[i]);
  }
  result.ensemble = std::move(ens);
  finish(passed);
  return result;
}

json compare_presets(const json& report_a, const json& report_b) {
  auto is_deterministic = [](const json& r) {
    return r.at("noise").is_string() && r.at("noise").get<std::string>() == "none";
  };
  const bool a_det = is_deterministic(report_a);
  const bool b_det = is_deterministic(report_b);
  if (a_det == b_det) {
    throw std::invalid_argument("compare needs one deterministic and one stochastic report");
  }
  const json& det = a_det ? report_a : report_b;
  const json& sto = a_det ? report_b : report_a;
  if (det.at("physical") != sto.at("physical")) {
    throw std::invalid_argument("reports differ in grid, equation or initial data");
  }
  for (const json* r : {&det, &sto}) {
    if (!r->contains("exit")) throw std::invalid_argument("report carries no exit statistics");
  }

  const json& de = det.at("exit");
  const json& se = sto.at("exit");
  const bool det_crossed = de.at("crossed").get<std::size_t>() > 0;
  const double upper = se.at("ci_high").get<double>();
  std::string verdict;
  if (!det_crossed) {
    verdict = "no baseline blow-up; contrast vacuous";
  } else if (upper < 0.05) {
    verdict = "noise-regularization observed";
  } else {
    verdict = "noise-regularization not observed";
  }
  return {{"deterministic", {{"preset", det.at("preset")},
                             {"exit", de},
                             {"blowup_time", det.value("blowup_time", json(nullptr))}}},
          {"stochastic", {{"preset", sto.at("preset")}, {"exit", se}}},
          {"physical", det.at("physical")},
          {"verdict", verdict}};
}

}  // namespace snls
