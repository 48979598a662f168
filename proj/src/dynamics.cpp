#include "snls/dynamics.hpp"

#include <algorithm>
#include <numbers>

namespace snls {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double int_pow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

void EquationParams::validate() const {
  if (sigma < 1) throw std::invalid_argument("sigma must be a positive integer");
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (!(s > 0.5 * dim)) throw std::invalid_argument("s must exceed d/2");
  if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) {
    throw std::invalid_argument("alpha must be finite");
  }
}

void NoiseSpec::validate() const {
  if (a == 0.0 || !std::isfinite(a)) throw std::invalid_argument("noise a must be nonzero");
  if (!(b >= 1.0)) throw std::invalid_argument("noise b must be >= 1");
  if (!(d_exp >= 1.0)) throw std::invalid_argument("noise d must be >= 1");
  if (!std::isfinite(c)) throw std::invalid_argument("noise c must be finite");
}

int dealiased_points(const Grid& grid, int sigma) { return (sigma + 1) * grid.points(); }

SpectralField nonlinearity(const SpectralField& u, const EquationParams& params) {
  return nonlinearity_with_sup(u, params).F;
}

NonlinearityAndSup nonlinearity_with_sup(const SpectralField& u, const EquationParams& params) {
  const int padded = dealiased_points(u.grid(), params.sigma);
  std::vector<cplx> values = u.samples(padded);
  const double sup = sup_norm_of_samples(u.grid(), values, params.sigma + 1);
  for (cplx& z : values) z *= int_pow(std::norm(z), params.sigma);
  return {SpectralField::from_samples(u.grid_ptr(), std::move(values), padded), sup};
}

bool lipschitz_bound_check(const SpectralField& u, const SpectralField& v,
                           const EquationParams& params, double C) {
  if (!u.same_grid(v)) throw GridMismatch();
  const double s = params.s;
  const double lhs = sobolev_norm(nonlinearity(u, params) - nonlinearity(v, params), s);
  const double rhs = C *
                     (int_pow(sobolev_norm(u, s), 2 * params.sigma) +
                      int_pow(sobolev_norm(v, s), 2 * params.sigma)) *
                     sobolev_norm(u - v, s);
  return lhs <= rhs;
}

double mass(const SpectralField& u) {
  double acc = 0.0;
  auto uc = u.coeffs();
  for (const Mode& m : u.grid().modes()) acc += std::norm(uc[m.index]);
  return acc;
}

double energy(const SpectralField& u, const EquationParams& params) {
  if (!params.real_alpha()) throw std::invalid_argument("energy requires real alpha");
  double kinetic = 0.0;
  auto uc = u.coeffs();
  for (const Mode& m : u.grid().modes()) kinetic += m.k2 * std::norm(uc[m.index]);

  // |u|^{2 sigma + 2} is a trigonometric polynomial of degree (2 sigma + 2) n,
  // integrated exactly by the trapezoid rule on the padded grid.
  const int padded = dealiased_points(u.grid(), params.sigma);
  const int d = u.grid().dim();
  double sum = 0.0;
  for (const cplx& z : u.samples(padded)) sum += int_pow(std::norm(z), params.sigma + 1);
  const double cell = std::pow(kTwoPi / padded, d);
  const double potential = sum * cell;
  return 0.5 * kinetic - params.alpha.real() / (2.0 + 2.0 * params.sigma) * potential;
}

SpectralField noise_coefficient(const SpectralField& u, const NoiseSpec& spec, double sup) {
  return u * spec.multiplier(sup);
}

SpectralField noise_coefficient(const SpectralField& u, const NoiseSpec& spec) {
  return noise_coefficient(u, spec, sup_norm(u));
}

double moser_ratio(const SpectralField& u, const EquationParams& params) {
  const double hs = sobolev_norm(u, params.s);
  const double sup = sup_norm(u);
  if (hs == 0.0 || sup == 0.0) throw std::invalid_argument("Moser ratio of a zero field");
  const double num = sobolev_norm(nonlinearity(u, params), params.s);
  // Scale out the amplitude before exponentiating to keep the ratio finite for
  // very large or very small fields.
  return (num / hs) / int_pow(sup, 2 * params.sigma);
}

SpectralField sample_field(const GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SpectralField u(grid);
  auto uc = u.coeffs();
  const auto modes = grid->modes();
  const double amplitude = std::pow(10.0, 2.0 * unit(rng) - 1.0);

  if (unit(rng) < 0.25) {
    // Sparse: a handful of random modes with comparable weight.
    const int count = 1 + static_cast<int>(unit(rng) * 4.0);
    for (int i = 0; i < count; ++i) {
      auto pick = static_cast<std::size_t>(unit(rng) * static_cast<double>(modes.size()));
      pick = std::min(pick, modes.size() - 1);
      uc[modes[pick].index] += amplitude * std::polar(1.0 + gauss(rng) * 0.25,
                                                      kTwoPi * unit(rng));
    }
  } else {
    // Power-law spectrum <k>^{-decay} cut at a random band limit.
    const double decay = 4.0 * unit(rng);
    const double cutoff = 1.0 + unit(rng) * static_cast<double>(grid->radius() - 1);
    for (const Mode& m : modes) {
      if (m.k2 > cutoff * cutoff) continue;
      const double weight = std::pow(1.0 + m.k2, -0.5 * decay);
      uc[m.index] = amplitude * weight * cplx{gauss(rng), gauss(rng)};
    }
  }
  return u;
}

double estimate_moser_constant(const EquationParams& params, const GridPtr& grid, int budget,
                               std::uint64_t seed, const FieldSampler& sampler) {
  if (budget < 1) throw std::invalid_argument("Moser budget must be >= 1");
  if (params.dim != grid->dim()) throw std::invalid_argument("params dim != grid dim");
  std::mt19937_64 rng(seed);
  double best = 0.0;
  int used = 0;
  for (int i = 0; i < budget; ++i) {
    SpectralField u = sampler(grid, rng);
    if (u.is_zero()) continue;
    best = std::max(best, moser_ratio(u, params));
    ++used;
  }
  if (used == 0) throw std::invalid_argument("Moser sample is degenerate (all fields zero)");
  return kMoserSafetyFactor * best;
}

}  // namespace snls
