#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snls/dynamics.hpp"
#include "snls/integrator.hpp"

namespace snls {

enum class LyapunovVariant { Log, Power };

struct LyapunovSpec {
  LyapunovVariant variant = LyapunovVariant::Power;
  double R = 1.0;        // l is flat on [0, R)
  double a_floor = 0.5;  // l on [0, R); below log(2R) resp. (2R)^p
  double p = 0.5;        // power variant exponent in (0, 1)

  void validate() const;
};

// l: [0, inf) -> [a_floor, inf), non-decreasing C^2. Flat below R, log rho
// (resp. rho^p) above 2R, and a quintic Hermite bridge on [R, 2R] matching
// value, slope and curvature at both ends.
class LyapunovProfile {
 public:
  explicit LyapunovProfile(const LyapunovSpec& spec);

  double operator()(double rho) const;
  const LyapunovSpec& spec() const { return spec_; }

 private:
  double outer(double rho) const;

  LyapunovSpec spec_;
  std::array<double, 6> bridge_{};  // monomial coefficients in (rho - R) / R
};

double lyapunov_value(const SpectralField& u, const LyapunovSpec& lspec, double s);

// Upper bound on the Ito generator of V = l(|u|_s) for |u|_s > 2R and
// phi = f(u) u:
//   log:   |alpha| K m^{2 sigma} + |f|^2 / 2 - (Re f)^2
//   power: p |u|_s^p (|alpha| K m^{2 sigma} + |f|^2 / 2 - (2 - p)/2 (Re f)^2)
// with m = |u|_inf. Rejects |u|_s <= 2R.
double generator_drift(const SpectralField& u, const LyapunovSpec& lspec,
                       const EquationParams& params, const NoiseSpec& spec, double K);

constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct EnsembleEstimate {
  double p = 1.0;
  std::size_t paths = 0;
  std::vector<double> times;
  std::vector<double> mean_p_moment;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::size_t> samples;  // paths contributing at each time
  std::vector<double> exit_fraction;
  std::vector<double> exit_ci_low;
  std::vector<double> exit_ci_high;
  std::vector<std::optional<double>> blowup_times;  // per path, in path order

  bool operator==(const EnsembleEstimate&) const = default;
};

// Per-time statistics of |u(t)|_s^p over trajectories, folded in path order.
// Paths contribute to the moment only while they have not crossed the
// threshold; every path counts towards the exit fraction.
EnsembleEstimate build_ensemble(std::span<const Trajectory> trajectories, double p);

struct DecayTestReport {
  std::string test;
  bool passed = false;
  double lambda = 0.0;
  double p = 0.0;
  std::optional<double> first_violation_t;
  std::string details;
};

// e^{lambda t} E|u(t)|_s^p non-increasing between consecutive records, up to
// the (equally weighted) confidence-interval width at the later time.
DecayTestReport supermartingale_decay_test(const EnsembleEstimate& ens, double lambda, double p);

struct DecayFit {
  double lambda_hat = 0.0;
  double stderr_ = 0.0;
};

// Least-squares slope of -log E|u|^p over records with t in [t_lo, t_hi].
// Returns {+inf, 0} when a moment in the window is not positive.
DecayFit fit_decay_rate(const EnsembleEstimate& ens, double t_lo, double t_hi);

struct ExitEstimate {
  double p_hat = 0.0;
  Interval ci;
  std::size_t crossed = 0;
  std::size_t paths = 0;
};

ExitEstimate exit_probability(const EnsembleEstimate& ens, double t);

// (1/T) \int_0^T |u(t)|_s^p dt by the trapezoid rule on the records,
// restricted to [0, t_end] when given.
double time_average_moment(const Trajectory& traj, double p,
                           std::optional<double> t_end = std::nullopt);

}  // namespace snls
