#include "fft.hpp"

#include <cmath>

#include "common.hpp"

namespace cg {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_inplace(cdouble* data, std::size_t n, bool inverse) {
    if (n == 0 || (n & (n - 1)) != 0) fail_invalid("fft size must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cdouble wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble u = data[i + k];
                const cdouble v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) data[i] *= inv;
    }
}

void fft2_inplace(std::vector<cdouble>& data, std::size_t width, std::size_t height, bool inverse) {
    if (data.size() != width * height) fail_invalid("fft2 buffer size mismatch");
    for (std::size_t y = 0; y < height; ++y) fft_inplace(data.data() + y * width, width, inverse);
    std::vector<cdouble> col(height);
    for (std::size_t x = 0; x < width; ++x) {
        for (std::size_t y = 0; y < height; ++y) col[y] = data[y * width + x];
        fft_inplace(col.data(), height, inverse);
        for (std::size_t y = 0; y < height; ++y) data[y * width + x] = col[y];
    }
}

}  // namespace cg
