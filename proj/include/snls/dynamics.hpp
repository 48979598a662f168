#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "snls/spectral.hpp"

namespace snls {

// Drift i alpha |u|^{2 sigma} u with integer sigma; alpha = +1 focusing,
// -1 defocusing, complex admitted.
struct EquationParams {
  int sigma = 1;
  cplx alpha{1.0, 0.0};
  double s = 2.0;  // Sobolev index, must exceed dim / 2
  int dim = 1;

  void validate() const;
  bool real_alpha() const { return alpha.imag() == 0.0; }
};

// Noise multiplier f(u) = h(|u|_inf) with
//   h(x) = a (1 + x)^b + i c (1 + x)^d_exp.
struct NoiseSpec {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;
  double d_exp = 1.0;

  void validate() const;
  cplx multiplier(double sup) const {
    return {a * std::pow(1.0 + sup, b), c * std::pow(1.0 + sup, d_exp)};
  }
};

// Padded collocation size per dimension for the degree 2 sigma + 1 product.
int dealiased_points(const Grid& grid, int sigma);

// P_n(|u|^{2 sigma} u), evaluated pseudospectrally on a (sigma + 1) N grid.
SpectralField nonlinearity(const SpectralField& u, const EquationParams& params);

struct NonlinearityAndSup {
  SpectralField F;
  double sup;  // sup_norm(u), read off the padded samples
};
NonlinearityAndSup nonlinearity_with_sup(const SpectralField& u, const EquationParams& params);

bool lipschitz_bound_check(const SpectralField& u, const SpectralField& v,
                           const EquationParams& params, double C);

// Sum_k |u_hat(k)|^2.
double mass(const SpectralField& u);
// 1/2 |grad u|^2 - alpha / (2 + 2 sigma) \int |u|^{2 + 2 sigma}; real alpha only.
double energy(const SpectralField& u, const EquationParams& params);

// phi(u) = f(u) u. The overload taking `sup` skips recomputing |u|_inf.
SpectralField noise_coefficient(const SpectralField& u, const NoiseSpec& spec);
SpectralField noise_coefficient(const SpectralField& u, const NoiseSpec& spec, double sup);

// |F(u)|_s / (|u|_inf^{2 sigma} |u|_s); u must be nonzero.
double moser_ratio(const SpectralField& u, const EquationParams& params);

// Random test fields with mixed smooth/rough spectra and varied amplitude.
SpectralField sample_field(const GridPtr& grid, std::mt19937_64& rng);

using FieldSampler = std::function<SpectralField(const GridPtr&, std::mt19937_64&)>;

constexpr double kMoserSafetyFactor = 1.5;

// 1.5 x the largest Moser ratio over `budget` sampled fields. Deterministic in
// `seed`; samples for a smaller budget are a prefix of a larger one.
double estimate_moser_constant(const EquationParams& params, const GridPtr& grid,
                               int budget, std::uint64_t seed,
                               const FieldSampler& sampler = sample_field);

enum class Hypothesis { H5, H5Prime, H5DoublePrime };
enum class Verdict { Certified, Refuted, Inconclusive };

std::string to_string(Hypothesis h);
std::string to_string(Verdict v);
Hypothesis parse_hypothesis(const std::string& name);

struct HypothesisReport {
  Hypothesis hypothesis = Hypothesis::H5DoublePrime;
  Verdict verdict = Verdict::Inconclusive;
  // -sup of the scalar residual; for H5' / H5'' this is B~ = -B.
  double margin = 0.0;
  double worst_x = 0.0;
  double K_used = 0.0;
  std::optional<double> p_used;
  NoiseSpec spec;
  EquationParams params;
  std::string note;
};

constexpr double kMarginTolerance = 1e-9;

// Scalar residual of the hypothesis at m = |u|_inf, with the nonlinear term
// majorized by |alpha| K (1 + m)^{2 sigma}:
//   |alpha| K (1+m)^{2 sigma} + c^2/2 (1+m)^{2d} - kappa a^2 (1+m)^{2b},
// kappa = 1/2 for H5 and (1 - p)/2 for H5', H5''.
double hypothesis_residual(Hypothesis id, const NoiseSpec& spec, const EquationParams& params,
                           double K, double p, double m);

HypothesisReport check_hypothesis(Hypothesis id, const NoiseSpec& spec,
                                  const EquationParams& params, double K, double p,
                                  double scan_max);

}  // namespace snls
