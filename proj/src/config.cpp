#include <cmath>
#include <fstream>
#include <set>

#include "snls/harness.hpp"

namespace snls {
namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers
// can be reported.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  std::optional<double> maybe_number(const std::string& key) {
    if (!obj_.contains(key) || obj_.at(key).is_null()) {
      seen_.insert(key);
      return std::nullopt;
    }
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long fallback,
                    const std::string& message = "expected an integer") {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_integer()) return v->get<long long>();
    if (v->is_number_float()) {
      const double x = v->get<double>();
      if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9.0e15) {
        return static_cast<long long>(x);
      }
    }
    throw ConfigError(field(key), message);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<long long>() >= 0) {
      return static_cast<std::uint64_t>(v->get<long long>());
    }
    throw ConfigError(field(key), "expected a non-negative integer seed");
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<bool> maybe_boolean(const std::string& key) {
    if (!obj_.contains(key) || obj_.at(key).is_null()) {
      seen_.insert(key);
      return std::nullopt;
    }
    return boolean(key, false);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

const json kEmpty = json::object();

const json& block(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return kEmpty;
  return *it;
}

template <typename F>
auto checked(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

bool is_deterministic_preset(Preset p) {
  return p == Preset::BlowupBaseline || p == Preset::Conservation;
}

}  // namespace

std::string to_string(Preset preset) {
  switch (preset) {
    case Preset::NoBlowup: return "no-blowup";
    case Preset::BlowupBaseline: return "blowup-baseline";
    case Preset::Decay: return "decay";
    case Preset::Stationary: return "stationary";
    case Preset::Conservation: return "conservation";
    case Preset::HypothesisCheck: return "hypothesis-check";
  }
  return "?";
}

Preset parse_preset(const std::string& name) {
  for (Preset p : {Preset::NoBlowup, Preset::BlowupBaseline, Preset::Decay, Preset::Stationary,
                   Preset::Conservation, Preset::HypothesisCheck}) {
    if (to_string(p) == name) return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

CertificationFailure::CertificationFailure(HypothesisReport report)
    : std::runtime_error(to_string(report.hypothesis) + " " + to_string(report.verdict) +
                         ", margin " + std::to_string(report.margin) +
                         (report.verdict == Verdict::Refuted ? " <= 0" : "") +
                         "; no paths were simulated"),
      report_(std::move(report)) {}

double ExperimentConfig::threshold(double hs0) const {
  if (scheme.M) return *scheme.M;
  return scheme.M_factor.value_or(1e3) * hs0;
}

std::optional<Hypothesis> ExperimentConfig::hypothesis() const {
  if (analysis.hypothesis) return analysis.hypothesis;
  switch (preset) {
    case Preset::NoBlowup: return Hypothesis::H5;
    case Preset::Decay: return Hypothesis::H5DoublePrime;
    case Preset::Stationary: return Hypothesis::H5Prime;
    case Preset::HypothesisCheck: return Hypothesis::H5DoublePrime;
    default: return std::nullopt;
  }
}

double ExperimentConfig::moment_p() const { return lyapunov.p; }

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  Reader top(doc, "");

  cfg.preset = checked("preset", [&] { return parse_preset(top.text("preset", "decay")); });

  {
    Reader r(block(doc, "grid"), "grid");
    top.find("grid");
    cfg.grid.dim = static_cast<int>(r.integer("dim", 1));
    cfg.grid.n = static_cast<int>(r.integer("n", 64));
    cfg.grid.N = static_cast<int>(r.integer("N", 4 * cfg.grid.n));
    r.finish();
    checked("grid", [&] { return make_grid(cfg.grid.dim, cfg.grid.n, cfg.grid.N); });
  }

  {
    Reader r(block(doc, "equation"), "equation");
    top.find("equation");
    const long long sigma = r.integer("sigma", 1, "sigma must be a positive integer");
    if (sigma < 1) throw ConfigError("equation.sigma", "sigma must be a positive integer");
    cfg.equation.sigma = static_cast<int>(sigma);
    cfg.equation.alpha = {r.number("alpha_re", 1.0), r.number("alpha_im", 0.0)};
    cfg.equation.s = r.number("s", 2.0);
    cfg.equation.dim = cfg.grid.dim;
    r.finish();
    if (!(cfg.equation.s > 0.5 * cfg.equation.dim)) {
      throw ConfigError("equation.s", "s must exceed d/2");
    }
    checked("equation", [&] { cfg.equation.validate(); return 0; });
  }

  {
    const json* v = top.find("noise");
    if (v && v->is_string()) {
      if (v->get<std::string>() != "none") {
        throw ConfigError("noise", "expected an object or \"none\"");
      }
    } else if (v) {
      Reader r(*v, "noise");
      NoiseSpec spec;
      spec.a = r.number("a", 1.0);
      spec.b = r.number("b", 1.0);
      spec.c = r.number("c", 0.0);
      spec.d_exp = r.number("d_exp", 1.0);
      r.finish();
      checked("noise", [&] { spec.validate(); return 0; });
      cfg.noise = spec;
    }
  }

  {
    Reader r(block(doc, "lyapunov"), "lyapunov");
    top.find("lyapunov");
    const std::string variant = r.text("variant", "power");
    if (variant == "power") {
      cfg.lyapunov.variant = LyapunovVariant::Power;
    } else if (variant == "log") {
      cfg.lyapunov.variant = LyapunovVariant::Log;
    } else {
      throw ConfigError("lyapunov.variant", "expected \"power\" or \"log\"");
    }
    cfg.lyapunov.R = r.number("R", 1.0);
    cfg.lyapunov.p = r.number("p", 0.5);
    cfg.lyapunov.a_floor = r.number("a_floor", 0.5);
    r.finish();
    if (!(cfg.lyapunov.p > 0.0 && cfg.lyapunov.p < 1.0)) {
      throw ConfigError("lyapunov.p", "p must lie in (0, 1)");
    }
    checked("lyapunov", [&] { cfg.lyapunov.validate(); return 0; });
  }

  {
    Reader r(block(doc, "initial"), "initial");
    top.find("initial");
    cfg.initial.amplitude = r.number("amplitude", 1.0);
    cfg.initial.modulation = r.number("modulation", 0.5);
    r.finish();
  }

  {
    Reader r(block(doc, "scheme"), "scheme");
    top.find("scheme");
    const std::string fallback = is_deterministic_preset(cfg.preset)
                                     ? to_string(Scheme::StrangSplit)
                                     : to_string(Scheme::ExponentialEulerMaruyama);
    cfg.scheme.id = checked("scheme.id", [&] { return parse_scheme(r.text("id", fallback)); });
    cfg.scheme.dt = r.number("dt", 1e-3);
    cfg.scheme.T = r.number("T", 5.0);
    cfg.scheme.M = r.maybe_number("M");
    cfg.scheme.M_factor = r.maybe_number("M_factor");
    const long long stride = r.integer("record_stride", 10);
    r.finish();
    if (cfg.scheme.M && cfg.scheme.M_factor) {
      throw ConfigError("scheme", "give either M or M_factor, not both");
    }
    if (!cfg.scheme.M && !cfg.scheme.M_factor) {
      cfg.scheme.M_factor = cfg.preset == Preset::BlowupBaseline ? 10.0 : 1e3;
    }
    if (cfg.scheme.M && !(*cfg.scheme.M > 0.0)) throw ConfigError("scheme.M", "must be positive");
    if (cfg.scheme.M_factor && !(*cfg.scheme.M_factor > 1.0)) {
      throw ConfigError("scheme.M_factor", "must exceed 1");
    }
    if (stride < 1) throw ConfigError("scheme.record_stride", "record_stride must be >= 1");
    cfg.scheme.record_stride = static_cast<int>(stride);
    checked("scheme", [&] {
      SchemeConfig{cfg.scheme.id, cfg.scheme.dt, cfg.scheme.T, 1.0, cfg.scheme.record_stride}
          .validate();
      return 0;
    });
  }

  {
    Reader r(block(doc, "ensemble"), "ensemble");
    top.find("ensemble");
    const long long paths = r.integer("paths", is_deterministic_preset(cfg.preset) ? 1 : 256);
    const long long workers = r.integer("workers", 1);
    cfg.ensemble.seed = r.seed("seed", 1);
    r.finish();
    if (paths < 1) throw ConfigError("ensemble.paths", "paths must be >= 1");
    if (workers < 1) throw ConfigError("ensemble.workers", "workers must be >= 1");
    cfg.ensemble.paths = static_cast<int>(paths);
    cfg.ensemble.workers = static_cast<int>(workers);
  }

  {
    Reader r(block(doc, "moser"), "moser");
    top.find("moser");
    const long long budget = r.integer("budget", 2000);
    cfg.moser.seed = r.seed("seed", 7);
    r.finish();
    if (budget < 1) throw ConfigError("moser.budget", "budget must be >= 1");
    cfg.moser.budget = static_cast<int>(budget);
  }

  {
    Reader r(block(doc, "output"), "output");
    top.find("output");
    cfg.output.dir = r.text("dir", "out");
    cfg.output.per_path_csv = r.maybe_boolean("per_path_csv");
    r.finish();
    if (!cfg.output.per_path_csv) cfg.output.per_path_csv = cfg.ensemble.paths <= 32;
  }

  {
    Reader r(block(doc, "analysis"), "analysis");
    top.find("analysis");
    auto& a = cfg.analysis;
    a.t_lo = r.number("t_lo", 0.2 * cfg.scheme.T);
    a.t_hi = r.maybe_number("t_hi");
    a.lambda_fraction = r.number("lambda_fraction", 0.5);
    a.exit_bound = r.number("exit_bound", 0.05);
    a.mass_tol = r.number("mass_tol", 1e-10);
    a.energy_tol = r.number("energy_tol", 1e-5);
    a.scan_max = r.number("scan_max", 1e4);
    a.fail_fast = r.boolean("fail_fast", true);
    if (const json* h = r.find("hypothesis")) {
      if (!h->is_string()) throw ConfigError("analysis.hypothesis", "expected a string");
      a.hypothesis = checked("analysis.hypothesis",
                             [&] { return parse_hypothesis(h->get<std::string>()); });
    }
    r.finish();
    if (!a.t_hi) a.t_hi = cfg.scheme.T;
    if (!(a.t_lo >= 0.0 && a.t_lo < *a.t_hi)) {
      throw ConfigError("analysis.t_lo", "decay window needs 0 <= t_lo < t_hi");
    }
    if (!(a.scan_max > 0.0)) throw ConfigError("analysis.scan_max", "must be positive");
  }

  top.finish();

  const bool needs_noise = cfg.preset == Preset::NoBlowup || cfg.preset == Preset::Decay ||
                           cfg.preset == Preset::Stationary ||
                           cfg.preset == Preset::HypothesisCheck;
  if (needs_noise && !cfg.noise) {
    throw ConfigError("noise", "preset " + to_string(cfg.preset) + " requires a noise block");
  }
  if (is_deterministic_preset(cfg.preset) && cfg.noise) {
    throw ConfigError("noise", "preset " + to_string(cfg.preset) + " is deterministic");
  }
  if (cfg.noise && cfg.scheme.id != Scheme::ExponentialEulerMaruyama) {
    throw ConfigError("scheme.id", "noisy runs use exponential-euler-maruyama");
  }
  if (cfg.preset == Preset::Conservation && !cfg.equation.real_alpha()) {
    throw ConfigError("equation.alpha_im", "conservation needs real alpha");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", file.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("code_version")) {
    return parse_config(doc.at("config"));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = to_string(c.preset);
  j["grid"] = {{"dim", c.grid.dim}, {"n", c.grid.n}, {"N", c.grid.N}};
  j["equation"] = {{"sigma", c.equation.sigma},
                   {"alpha_re", c.equation.alpha.real()},
                   {"alpha_im", c.equation.alpha.imag()},
                   {"s", c.equation.s}};
  if (c.noise) {
    j["noise"] = {{"a", c.noise->a}, {"b", c.noise->b}, {"c", c.noise->c},
                  {"d_exp", c.noise->d_exp}};
  } else {
    j["noise"] = "none";
  }
  j["lyapunov"] = {{"variant", c.lyapunov.variant == LyapunovVariant::Log ? "log" : "power"},
                   {"R", c.lyapunov.R},
                   {"p", c.lyapunov.p},
                   {"a_floor", c.lyapunov.a_floor}};
  j["initial"] = {{"amplitude", c.initial.amplitude}, {"modulation", c.initial.modulation}};
  json scheme = {{"id", to_string(c.scheme.id)},
                 {"dt", c.scheme.dt},
                 {"T", c.scheme.T},
                 {"record_stride", c.scheme.record_stride}};
  if (c.scheme.M) scheme["M"] = *c.scheme.M;
  if (c.scheme.M_factor) scheme["M_factor"] = *c.scheme.M_factor;
  j["scheme"] = scheme;
  j["ensemble"] = {{"paths", c.ensemble.paths},
                   {"seed", c.ensemble.seed},
                   {"workers", c.ensemble.workers}};
  j["moser"] = {{"budget", c.moser.budget}, {"seed", c.moser.seed}};
  j["output"] = {{"dir", c.output.dir}, {"per_path_csv", c.output.per_path_csv.value_or(false)}};
  j["analysis"] = {{"t_lo", c.analysis.t_lo},
                   {"t_hi", c.analysis.t_hi.value_or(c.scheme.T)},
                   {"lambda_fraction", c.analysis.lambda_fraction},
                   {"exit_bound", c.analysis.exit_bound},
                   {"mass_tol", c.analysis.mass_tol},
                   {"energy_tol", c.analysis.energy_tol},
                   {"scan_max", c.analysis.scan_max},
                   {"fail_fast", c.analysis.fail_fast}};
  if (c.hypothesis()) j["analysis"]["hypothesis"] = to_string(*c.hypothesis());
  return j;
}

}  // namespace snls
