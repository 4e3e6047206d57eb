#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace faraday::fft {

std::size_t next_pow2(std::size_t n);

/// In-place complex DFT, forward sign convention exp(-i 2 pi k n / N).
void forward(std::complex<double>* data, std::size_t n);

/// In-place inverse DFT including the 1/N normalization.
void inverse(std::complex<double>* data, std::size_t n);

/// 2D transforms on a row-major n_y x n_x array. Rows and columns are
/// transformed independently (parallel across lines), so results are
/// identical for any worker count.
void forward_2d(std::complex<double>* data, std::size_t ny, std::size_t nx);
void inverse_2d(std::complex<double>* data, std::size_t ny, std::size_t nx);

/// Convenience copies.
std::vector<std::complex<double>> forward_copy(const std::vector<std::complex<double>>& in);

} // namespace faraday::fft
