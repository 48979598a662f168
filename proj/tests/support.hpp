#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "snls/spectral.hpp"

namespace snls::test {

inline constexpr double kPi = std::numbers::pi;

// Gaussian coefficients on `count` randomly chosen retained modes (all modes
// when count is 0), decaying like <k>^-decay.
inline SpectralField random_field(const GridPtr& grid, std::mt19937_64& rng, std::size_t count = 0,
                                  double decay = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField u(grid);
  auto modes = grid->modes();
  std::vector<std::size_t> pick(modes.size());
  for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
  if (count > 0 && count < pick.size()) {
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(count);
  }
  for (std::size_t i : pick) {
    const Mode& m = modes[i];
    u.coeffs()[m.index] = std::pow(1.0 + m.k2, -0.5 * decay) * cplx{g(rng), g(rng)};
  }
  return u;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace snls::test
