#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cg {

using cdouble = std::complex<double>;

// In-place radix-2 FFT; n must be a power of two.
void fft_inplace(cdouble* data, std::size_t n, bool inverse);

// 2D FFT over a row-major width x height grid; both dims powers of two.
void fft2_inplace(std::vector<cdouble>& data, std::size_t width, std::size_t height, bool inverse);

std::size_t next_pow2(std::size_t n);

}  // namespace cg
