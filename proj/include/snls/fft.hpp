#pragma once

#include <complex>
#include <span>

namespace snls::fft {

using cplx = std::complex<double>;

// Unnormalized in-place transforms on a dense cube of `points`^dim samples
// stored row-major. forward uses e^{-ikx}, inverse uses e^{+ikx}.
// Plans are created once per (dim, points, direction) and shared; execution
// is safe from concurrent threads.
void forward(int dim, int points, std::span<cplx> data);
void inverse(int dim, int points, std::span<cplx> data);

}  // namespace snls::fft
