#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cg {

// Real-valued raster with 1 (gray) or 3 (rgb) channels, values in [0,1]
// for anything that gets written to disk. Row-major, channel-interleaved.
struct Image2D {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    Image2D() = default;
    Image2D(int w, int h, int c = 1, double fill = 0.0)
        : width(w), height(h), channels(c),
          values(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c = 0) {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return values[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool inside(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }
};

// Binary segmentation mask; 1 = vessel, 0 = background.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;

    Mask() = default;
    Mask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// netpbm binary formats. P5 reads to 1 channel, P6 to 3; maxval 255 reads
// one byte per sample, larger maxval two bytes big-endian.
Image2D read_pnm(const std::string& path);
void write_pgm(const Image2D& img, const std::string& path, int bits = 8);
void write_ppm(const Image2D& img, const std::string& path);

// Strict {0,255} P5 mask.
Mask read_mask_pgm(const std::string& path);
void write_mask_pgm(const Mask& mask, const std::string& path);

}  // namespace cg
