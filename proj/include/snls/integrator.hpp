#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snls/dynamics.hpp"
#include "snls/spectral.hpp"

namespace snls {

enum class Scheme { ExponentialEulerMaruyama, StrangSplit };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct SchemeConfig {
  Scheme scheme = Scheme::ExponentialEulerMaruyama;
  double dt = 1e-3;
  double T = 1.0;
  double blowup_threshold = 1e3;  // soft threshold M on |u|_s
  int record_stride = 1;

  void validate() const;
  long steps() const;  // round(T / dt)
};

// Non-finite coefficients after a step.
class HardBlowup : public std::runtime_error {
 public:
  HardBlowup() : std::runtime_error("non-finite coefficients (overflow)") {}
};

// Brownian increments for one sample path. The engine seed is a SplitMix64
// hash of (master_seed, path_index), so equal pairs reproduce the same
// increments and distinct pairs give decorrelated streams.
class PathRng {
 public:
  PathRng(std::uint64_t master_seed, std::uint64_t path_index);

  double increment(double dt);  // a draw of N(0, dt)

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t path_index() const { return path_index_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t master_seed_;
  std::uint64_t path_index_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

// u+ = S(dt) [u - i alpha F(u) dt + phi(u) dW]; `noise` absent means phi = 0.
SpectralField step_exponential_em(const SpectralField& u, double dt, double dW,
                                  const EquationParams& params,
                                  const std::optional<NoiseSpec>& noise);

// Deterministic Strang step: half nonlinear phase, exact linear flow, half
// nonlinear phase. Real alpha only.
SpectralField step_strang_split(const SpectralField& u, double dt, const EquationParams& params);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> hs_norm;
  std::vector<double> sup_norm;
  std::vector<double> mass;
  std::optional<std::vector<double>> energy;
  std::optional<std::vector<double>> lyapunov;
  double threshold = 0.0;
  std::optional<double> blowup_time;
  bool hard_overflow = false;
  SpectralField terminal;

  explicit Trajectory(SpectralField state) : terminal(std::move(state)) {}
  std::size_t size() const { return times.size(); }
  bool operator==(const Trajectory&) const = default;
};

struct RecordOptions {
  bool energy = false;                     // needs real alpha
  std::function<double(double)> lyapunov;  // l(|u|_s), recorded when set
};

Trajectory simulate_path(const SpectralField& u0, const SchemeConfig& scheme,
                         const EquationParams& params, const std::optional<NoiseSpec>& noise,
                         PathRng& rng, const RecordOptions& record = {});

// Same path driven by caller-supplied increments (one per step).
Trajectory simulate_path(const SpectralField& u0, const SchemeConfig& scheme,
                         const EquationParams& params, const std::optional<NoiseSpec>& noise,
                         std::span<const double> increments, const RecordOptions& record = {});

// First recorded time with |u|_s >= threshold, or the overflow time.
std::optional<double> detect_blowup(const Trajectory& traj);

// dt <= 0.1 / (|alpha| K m0^{2 sigma} + |f(u0)|^2)
double suggested_dt(const SpectralField& u0, const EquationParams& params,
                    const std::optional<NoiseSpec>& noise, double K);

}  // namespace snls
