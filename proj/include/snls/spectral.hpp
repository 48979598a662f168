#pragma once

// Fourier-Galerkin representation of periodic fields on the d-torus
// (R / 2 pi Z)^d.
//
// Coefficient convention: u_hat(k) = (2 pi)^{-d/2} \int u(x) e^{-i k.x} dx, so
// the basis e_k(x) = (2 pi)^{-d/2} e^{i k.x} is orthonormal in L^2 and has
// coefficient 1 at k. Coefficients live densely on an N^d FFT cube; only the
// Euclidean ball |k|_2 <= n is ever nonzero.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace snls {

using cplx = std::complex<double>;
using Wavevector = std::array<int, 3>;

class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("fields live on different grids") {}
};

struct Mode {
  std::size_t index;  // position in the N^d cube
  Wavevector k;       // unused trailing components are 0
  double k2;          // |k|_2^2
};

class Grid {
 public:
  Grid(int dim, int radius, int points);

  int dim() const { return dim_; }
  int radius() const { return radius_; }
  int points() const { return points_; }
  std::size_t size() const { return size_; }

  // Retained modes |k|_2 <= radius, in cube order.
  std::span<const Mode> modes() const { return modes_; }
  std::size_t retained_count() const { return modes_.size(); }

  // Cube index of a wavevector with |k_i| < points/2; throws otherwise.
  std::size_t index_of(const Wavevector& k) const;
  bool retains(const Wavevector& k) const;

  bool operator==(const Grid& other) const {
    return dim_ == other.dim_ && radius_ == other.radius_ && points_ == other.points_;
  }

 private:
  int dim_;
  int radius_;
  int points_;
  std::size_t size_;
  std::vector<Mode> modes_;
};

using GridPtr = std::shared_ptr<const Grid>;

// Validates d in {1,2,3}, even N, N >= 2n + 2.
GridPtr make_grid(int dim, int radius, int points);

class SpectralField {
 public:
  explicit SpectralField(GridPtr grid);

  // e_k, the orthonormal Fourier basis element.
  static SpectralField basis(GridPtr grid, const Wavevector& k);
  // Constant field u(x) = value.
  static SpectralField constant(GridPtr grid, cplx value);
  // Forward transform of samples on a `points`^d collocation grid
  // (points >= 2n + 1), keeping only retained modes.
  static SpectralField from_samples(GridPtr grid, std::span<const cplx> samples,
                                    int points);
  static SpectralField from_samples(GridPtr grid, std::span<const cplx> samples) {
    return from_samples(grid, samples, grid->points());
  }
  // Same, transforming `samples` in place instead of copying.
  static SpectralField from_samples(GridPtr grid, std::vector<cplx>&& samples, int points);

  // Samples u(x_j), x_j = 2 pi j / points, on a `points`^d grid
  // (points >= 2n + 1 so retained modes do not alias).
  std::vector<cplx> samples(int points) const;
  std::vector<cplx> samples() const { return samples(grid_->points()); }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  bool same_grid(const SpectralField& other) const {
    return grid_ == other.grid_ || *grid_ == *other.grid_;
  }

  std::span<cplx> coeffs() { return coeffs_; }
  std::span<const cplx> coeffs() const { return coeffs_; }
  cplx& operator[](const Wavevector& k) { return coeffs_[grid_->index_of(k)]; }
  cplx operator[](const Wavevector& k) const { return coeffs_[grid_->index_of(k)]; }

  bool all_finite() const;
  bool is_zero() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(cplx scale);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(SpectralField a, cplx s) { return a *= s; }
  friend SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

  bool operator==(const SpectralField& other) const {
    return same_grid(other) && coeffs_ == other.coeffs_;
  }

 private:
  GridPtr grid_;
  std::vector<cplx> coeffs_;
};

// <k>^{2s} = (1 + |k|^2)^s
inline double bessel_weight(double k2, double s) { return std::pow(1.0 + k2, s); }

// <k>^{2s} per cube index (zero outside the retained ball).
std::vector<double> sobolev_weights(const Grid& grid, double s);

// (u, v)_s = sum_k <k>^{2s} u_hat(k) conj(v_hat(k))
cplx sobolev_inner(const SpectralField& u, const SpectralField& v, double s);
double sobolev_norm(const SpectralField& u, double s);
double sobolev_norm(const SpectralField& u, std::span<const double> weights);

// Max of |u(x_j)| over the N^d collocation points. A lower bound on the
// true L^infinity norm.
double sup_norm(const SpectralField& u);
// Max modulus over the collocation sub-lattice of samples taken on a grid
// refined by an integer factor `refine` (points = refine * N).
double sup_norm_of_samples(const Grid& grid, std::span<const cplx> samples, int refine);

// P_m: zero every coefficient with |k|_2 > m. Requires m <= grid radius.
SpectralField project(const SpectralField& u, int m);

// Exact flow of du = -i Delta u dt: u_hat(k) -> e^{+i |k|^2 t} u_hat(k).
SpectralField linear_propagate(const SpectralField& u, double t);
void linear_propagate_inplace(SpectralField& u, double t);

// linear_propagate for a fixed (grid, t) with the phases precomputed.
class LinearPropagator {
 public:
  LinearPropagator(const Grid& grid, double t);
  void apply(SpectralField& u) const;
  double time() const { return t_; }

 private:
  double t_;
  std::vector<cplx> phases_;  // one per retained mode, in grid.modes() order
};

}  // namespace snls
