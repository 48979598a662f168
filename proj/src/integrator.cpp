#include "snls/integrator.hpp"

#include <cmath>
#include <limits>

namespace snls {
namespace {

const cplx kI{0.0, 1.0};

void half_phase(std::vector<cplx>& values, const EquationParams& params, double tau) {
  const double a = params.alpha.real();
  for (cplx& z : values) {
    double w = 1.0;
    const double r2 = std::norm(z);
    for (int i = 0; i < params.sigma; ++i) w *= r2;
    z *= std::polar(1.0, -a * w * tau);
  }
}

void require_finite(const SpectralField& u) {
  if (!u.all_finite()) throw HardBlowup();
}

SpectralField em_step(const SpectralField& u, double dt, double dW, const EquationParams& params,
                      const std::optional<NoiseSpec>& noise, const LinearPropagator& flow) {
  SpectralField next = u;
  if (params.alpha != cplx{0.0, 0.0}) {
    auto [F, sup] = nonlinearity_with_sup(u, params);
    next -= F * (kI * params.alpha * dt);
    if (noise && dW != 0.0) next += u * (noise->multiplier(sup) * dW);
  } else if (noise && dW != 0.0) {
    next += noise_coefficient(u, *noise) * dW;
  }
  flow.apply(next);
  require_finite(next);
  return next;
}

SpectralField strang_step(const SpectralField& u, double dt, const EquationParams& params,
                          const LinearPropagator& flow) {
  if (!params.real_alpha()) throw std::invalid_argument("strang split requires real alpha");
  const int padded = dealiased_points(u.grid(), params.sigma);

  std::vector<cplx> values = u.samples(padded);
  half_phase(values, params, 0.5 * dt);
  SpectralField mid = SpectralField::from_samples(u.grid_ptr(), std::move(values), padded);
  flow.apply(mid);
  values = mid.samples(padded);
  half_phase(values, params, 0.5 * dt);
  SpectralField next = SpectralField::from_samples(u.grid_ptr(), std::move(values), padded);
  require_finite(next);
  return next;
}

struct Recorder {
  Trajectory& traj;
  const EquationParams& params;
  const RecordOptions& options;

  void record(double t, const SpectralField& u, double hs) {
    traj.times.push_back(t);
    traj.hs_norm.push_back(hs);
    traj.sup_norm.push_back(sup_norm(u));
    traj.mass.push_back(mass(u));
    if (traj.energy) traj.energy->push_back(energy(u, params));
    if (traj.lyapunov) traj.lyapunov->push_back(options.lyapunov(hs));
  }
};

template <typename NextIncrement>
Trajectory run_path(const SpectralField& u0, const SchemeConfig& scheme,
                    const EquationParams& params, const std::optional<NoiseSpec>& noise,
                    NextIncrement&& next_increment, const RecordOptions& options) {
  scheme.validate();
  params.validate();
  if (noise) noise->validate();
  if (params.dim != u0.grid().dim()) throw std::invalid_argument("params dim != grid dim");
  if (scheme.scheme == Scheme::StrangSplit && noise) {
    throw std::invalid_argument("strang-split-deterministic does not accept a noise block");
  }
  if (options.energy && !params.real_alpha()) {
    throw std::invalid_argument("energy diagnostics require real alpha");
  }

  const std::vector<double> weights = sobolev_weights(u0.grid(), params.s);
  const double hs0 = sobolev_norm(u0, weights);
  if (!(scheme.blowup_threshold > hs0)) {
    throw std::invalid_argument("blow-up threshold must exceed the initial H^s norm");
  }

  Trajectory traj(u0);
  traj.threshold = scheme.blowup_threshold;
  if (options.energy) traj.energy.emplace();
  if (options.lyapunov) traj.lyapunov.emplace();
  Recorder rec{traj, params, options};

  const LinearPropagator flow(u0.grid(), scheme.dt);
  SpectralField u = u0;
  rec.record(0.0, u, hs0);
  const long steps = scheme.steps();
  for (long step = 1; step <= steps; ++step) {
    const double t = static_cast<double>(step) * scheme.dt;
    try {
      if (scheme.scheme == Scheme::StrangSplit) {
        u = strang_step(u, scheme.dt, params, flow);
      } else {
        const double dW = noise ? next_increment() : 0.0;
        u = em_step(u, scheme.dt, dW, params, noise, flow);
      }
    } catch (const HardBlowup&) {
      traj.blowup_time = t;
      traj.hard_overflow = true;
      break;
    }
    const double hs = sobolev_norm(u, weights);
    if (hs >= scheme.blowup_threshold) {
      rec.record(t, u, hs);
      traj.blowup_time = t;
      break;
    }
    if (step % scheme.record_stride == 0 || step == steps) rec.record(t, u, hs);
  }
  traj.terminal = std::move(u);
  return traj;
}

}  // namespace

std::string to_string(Scheme scheme) {
  return scheme == Scheme::StrangSplit ? "strang-split-deterministic"
                                       : "exponential-euler-maruyama";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "exponential-euler-maruyama") return Scheme::ExponentialEulerMaruyama;
  if (name == "strang-split-deterministic") return Scheme::StrangSplit;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

void SchemeConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (dt > T) throw std::invalid_argument("dt must not exceed T");
  if (!(blowup_threshold > 0.0)) throw std::invalid_argument("blow-up threshold must be positive");
  if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
}

long SchemeConfig::steps() const { return std::lround(T / dt); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PathRng::PathRng(std::uint64_t master_seed, std::uint64_t path_index)
    : master_seed_(master_seed),
      path_index_(path_index),
      engine_(splitmix64(splitmix64(master_seed) ^ splitmix64(~path_index))) {}

double PathRng::increment(double dt) {
  ++draws_;
  return std::sqrt(dt) * gauss_(engine_);
}

SpectralField step_exponential_em(const SpectralField& u, double dt, double dW,
                                  const EquationParams& params,
                                  const std::optional<NoiseSpec>& noise) {
  return em_step(u, dt, dW, params, noise, LinearPropagator(u.grid(), dt));
}

SpectralField step_strang_split(const SpectralField& u, double dt, const EquationParams& params) {
  return strang_step(u, dt, params, LinearPropagator(u.grid(), dt));
}

Trajectory simulate_path(const SpectralField& u0, const SchemeConfig& scheme,
                         const EquationParams& params, const std::optional<NoiseSpec>& noise,
                         PathRng& rng, const RecordOptions& record) {
  return run_path(
      u0, scheme, params, noise, [&] { return rng.increment(scheme.dt); }, record);
}

Trajectory simulate_path(const SpectralField& u0, const SchemeConfig& scheme,
                         const EquationParams& params, const std::optional<NoiseSpec>& noise,
                         std::span<const double> increments, const RecordOptions& record) {
  if (noise && increments.size() < static_cast<std::size_t>(scheme.steps())) {
    throw std::invalid_argument("fewer increments than steps");
  }
  std::size_t next = 0;
  return run_path(
      u0, scheme, params, noise, [&] { return increments[next++]; }, record);
}

std::optional<double> detect_blowup(const Trajectory& traj) {
  if (traj.hard_overflow) return traj.blowup_time;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (traj.hs_norm[i] >= traj.threshold) return traj.times[i];
  }
  return std::nullopt;
}

double suggested_dt(const SpectralField& u0, const EquationParams& params,
                    const std::optional<NoiseSpec>& noise, double K) {
  const double m0 = sup_norm(u0);
  double rate = std::abs(params.alpha) * K * std::pow(m0, 2.0 * params.sigma);
  if (noise) rate += std::norm(noise->multiplier(m0));
  return rate > 0.0 ? 0.1 / rate : std::numeric_limits<double>::infinity();
}

}  // namespace snls
