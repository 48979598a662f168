#include "snls/spectral.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "snls/fft.hpp"

namespace snls {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

int wrap(int k, int points) { return k >= 0 ? k : k + points; }

std::size_t cube_index(const Wavevector& k, int dim, int points) {
  std::size_t idx = 0;
  for (int i = 0; i < dim; ++i) {
    idx = idx * static_cast<std::size_t>(points) +
          static_cast<std::size_t>(wrap(k[static_cast<std::size_t>(i)], points));
  }
  return idx;
}

void require_resolvable(const Grid& g, int points) {
  if (points < 2 * g.radius() + 1) {
    throw std::invalid_argument("sample grid of " + std::to_string(points) +
                                " points aliases retained modes of radius " +
                                std::to_string(g.radius()));
  }
}

}  // namespace

Grid::Grid(int dim, int radius, int points)
    : dim_(dim), radius_(radius), points_(points), size_(ipow(points, dim)) {
  const int half = points / 2;
  Wavevector k{0, 0, 0};
  for (std::size_t idx = 0; idx < size_; ++idx) {
    std::size_t rem = idx;
    double k2 = 0.0;
    for (int i = dim - 1; i >= 0; --i) {
      int j = static_cast<int>(rem % static_cast<std::size_t>(points));
      rem /= static_cast<std::size_t>(points);
      k[static_cast<std::size_t>(i)] = j < half ? j : j - points;
      k2 += static_cast<double>(k[static_cast<std::size_t>(i)]) * k[static_cast<std::size_t>(i)];
    }
    if (k2 <= static_cast<double>(radius) * radius) modes_.push_back({idx, k, k2});
  }
}

std::size_t Grid::index_of(const Wavevector& k) const {
  for (int i = 0; i < 3; ++i) {
    int ki = k[static_cast<std::size_t>(i)];
    if (i >= dim_ ? ki != 0 : (ki >= points_ / 2 || ki < -points_ / 2)) {
      throw std::out_of_range("wavevector outside the grid");
    }
  }
  return cube_index(k, dim_, points_);
}

bool Grid::retains(const Wavevector& k) const {
  long k2 = 0;
  for (int i = 0; i < 3; ++i) {
    long ki = k[static_cast<std::size_t>(i)];
    if (i >= dim_ && ki != 0) return false;
    k2 += ki * ki;
  }
  return k2 <= static_cast<long>(radius_) * radius_;
}

GridPtr make_grid(int dim, int radius, int points) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (radius < 1) throw std::invalid_argument("truncation radius must be positive");
  if (points < 2 || points % 2 != 0) {
    throw std::invalid_argument("collocation points per dimension must be even");
  }
  if (points < 2 * radius + 2) {
    throw std::invalid_argument("N = " + std::to_string(points) + " < 2n + 2 = " +
                                std::to_string(2 * radius + 2) + " (mode wraparound)");
  }
  return std::make_shared<const Grid>(dim, radius, points);
}

SpectralField::SpectralField(GridPtr grid)
    : grid_(std::move(grid)), coeffs_(grid_->size(), cplx{0.0, 0.0}) {}

SpectralField SpectralField::basis(GridPtr grid, const Wavevector& k) {
  if (!grid->retains(k)) throw std::invalid_argument("basis wavevector is not retained");
  SpectralField u(std::move(grid));
  u[k] = 1.0;
  return u;
}

SpectralField SpectralField::constant(GridPtr grid, cplx value) {
  SpectralField u(std::move(grid));
  const int d = u.grid().dim();
  u.coeffs_[0] = value * std::pow(kTwoPi, 0.5 * d);
  return u;
}

SpectralField SpectralField::from_samples(GridPtr grid, std::span<const cplx> samples,
                                          int points) {
  return from_samples(std::move(grid), std::vector<cplx>(samples.begin(), samples.end()), points);
}

SpectralField SpectralField::from_samples(GridPtr grid, std::vector<cplx>&& work, int points) {
  require_resolvable(*grid, points);
  const int d = grid->dim();
  const std::size_t total = ipow(points, d);
  if (work.size() != total) throw std::invalid_argument("sample count mismatch");

  fft::forward(d, points, work);
  const double scale = std::pow(kTwoPi, 0.5 * d) / static_cast<double>(total);

  SpectralField u(std::move(grid));
  for (const Mode& m : u.grid().modes()) {
    u.coeffs_[m.index] = work[cube_index(m.k, d, points)] * scale;
  }
  return u;
}

std::vector<cplx> SpectralField::samples(int points) const {
  require_resolvable(*grid_, points);
  const int d = grid_->dim();
  std::vector<cplx> work(ipow(points, d), cplx{0.0, 0.0});
  const double scale = std::pow(kTwoPi, -0.5 * d);
  for (const Mode& m : grid_->modes()) {
    work[cube_index(m.k, d, points)] = coeffs_[m.index] * scale;
  }
  fft::inverse(d, points, work);
  return work;
}

bool SpectralField::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const cplx& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
  });
}

bool SpectralField::is_zero() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(),
                     [](const cplx& c) { return c == cplx{0.0, 0.0}; });
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (!same_grid(other)) throw GridMismatch();
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (!same_grid(other)) throw GridMismatch();
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= other.coeffs_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(cplx scale) {
  for (auto& c : coeffs_) c *= scale;
  return *this;
}

cplx sobolev_inner(const SpectralField& u, const SpectralField& v, double s) {
  if (!u.same_grid(v)) throw GridMismatch();
  cplx acc{0.0, 0.0};
  auto uc = u.coeffs();
  auto vc = v.coeffs();
  for (const Mode& m : u.grid().modes()) {
    acc += bessel_weight(m.k2, s) * uc[m.index] * std::conj(vc[m.index]);
  }
  return acc;
}

std::vector<double> sobolev_weights(const Grid& grid, double s) {
  std::vector<double> w(grid.size(), 0.0);
  for (const Mode& m : grid.modes()) w[m.index] = bessel_weight(m.k2, s);
  return w;
}

double sobolev_norm(const SpectralField& u, double s) {
  double acc = 0.0;
  auto uc = u.coeffs();
  for (const Mode& m : u.grid().modes()) acc += bessel_weight(m.k2, s) * std::norm(uc[m.index]);
  return std::sqrt(acc);
}

double sobolev_norm(const SpectralField& u, std::span<const double> weights) {
  if (weights.size() != u.grid().size()) throw std::invalid_argument("weight table size mismatch");
  double acc = 0.0;
  auto uc = u.coeffs();
  for (const Mode& m : u.grid().modes()) acc += weights[m.index] * std::norm(uc[m.index]);
  return std::sqrt(acc);
}

double sup_norm(const SpectralField& u) {
  double best = 0.0;
  for (const cplx& x : u.samples()) best = std::max(best, std::norm(x));
  return std::sqrt(best);
}

double sup_norm_of_samples(const Grid& grid, std::span<const cplx> samples, int refine) {
  const int d = grid.dim();
  const std::size_t fine = static_cast<std::size_t>(refine) * static_cast<std::size_t>(grid.points());
  if (samples.size() != ipow(static_cast<int>(fine), d)) {
    throw std::invalid_argument("sample count mismatch");
  }
  const std::size_t stride = static_cast<std::size_t>(refine);
  const std::size_t n = static_cast<std::size_t>(grid.points());
  double best = 0.0;
  if (d == 1) {
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::norm(samples[i * stride]));
  } else if (d == 2) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        best = std::max(best, std::norm(samples[(i * stride) * fine + j * stride]));
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
          best = std::max(best, std::norm(samples[((i * stride) * fine + j * stride) * fine + k * stride]));
  }
  return std::sqrt(best);
}

SpectralField project(const SpectralField& u, int m) {
  if (m > u.grid().radius()) {
    throw std::invalid_argument("projection radius exceeds grid truncation");
  }
  SpectralField out = u;
  const double cut = static_cast<double>(m) * m;
  auto oc = out.coeffs();
  for (const Mode& mode : u.grid().modes()) {
    if (mode.k2 > cut) oc[mode.index] = 0.0;
  }
  return out;
}

void linear_propagate_inplace(SpectralField& u, double t) {
  if (t == 0.0) return;
  auto uc = u.coeffs();
  for (const Mode& m : u.grid().modes()) uc[m.index] *= std::polar(1.0, m.k2 * t);
}

LinearPropagator::LinearPropagator(const Grid& grid, double t) : t_(t) {
  phases_.reserve(grid.retained_count());
  for (const Mode& m : grid.modes()) phases_.push_back(std::polar(1.0, m.k2 * t));
}

void LinearPropagator::apply(SpectralField& u) const {
  auto modes = u.grid().modes();
  if (modes.size() != phases_.size()) throw GridMismatch();
  auto uc = u.coeffs();
  for (std::size_t i = 0; i < modes.size(); ++i) uc[modes[i].index] *= phases_[i];
}

SpectralField linear_propagate(const SpectralField& u, double t) {
  SpectralField out = u;
  linear_propagate_inplace(out, t);
  return out;
}

}  // namespace snls
