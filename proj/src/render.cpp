#include "render.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace cg {
namespace {

struct Rgb {
    double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - f * s);
    const double t = v * (1.0 - (1.0 - f) * s);
    switch (static_cast<int>(i) % 6) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

// blue-white-red diverging map over [-1, 1]
Rgb diverging(double t) {
    t = std::clamp(t, -1.0, 1.0);
    if (t < 0.0) return {1.0 + t, 1.0 + t, 1.0};
    return {1.0, 1.0 - t, 1.0 - t};
}

const Rgb kPalette[] = {
    {0.894, 0.102, 0.110}, {0.216, 0.494, 0.722}, {0.302, 0.686, 0.290},
    {0.596, 0.306, 0.639}, {1.000, 0.498, 0.000}, {0.651, 0.337, 0.157},
    {0.969, 0.506, 0.749}, {0.400, 0.761, 0.647}, {0.988, 0.553, 0.384},
    {0.553, 0.627, 0.796}, {0.906, 0.541, 0.765}, {0.651, 0.847, 0.329},
    {1.000, 0.851, 0.184}, {0.898, 0.769, 0.580}, {0.702, 0.702, 0.702},
    {0.122, 0.470, 0.706}, {0.682, 0.780, 0.910}, {0.199, 0.628, 0.173},
    {0.792, 0.698, 0.839}, {0.494, 0.184, 0.557},
};

void put(Image2D& img, int x, int y, const Rgb& c) {
    img.at(x, y, 0) = c.r;
    img.at(x, y, 1) = c.g;
    img.at(x, y, 2) = c.b;
}

}  // namespace

Image2D render_orientation(const OrientationMap& orientation, const Mask& mask) {
    require(orientation.width == mask.width && orientation.height == mask.height,
            "render_orientation: dimensions differ");
    Image2D img(orientation.width, orientation.height, 3, 1.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!mask.at(x, y)) continue;
            const double hue = static_cast<double>(orientation.at(x, y)) / orientation.n_theta;
            put(img, x, y, hsv_to_rgb(hue, 0.9, 0.9));
        }
    return img;
}

Image2D render_curvature(const VolumeMap& kappa, const OrientationMap& orientation,
                         const Mask& mask) {
    require(kappa.width == mask.width && kappa.height == mask.height,
            "render_curvature: dimensions differ");
    double peak = 0.0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y))
                peak = std::max(peak, std::abs(kappa.at(x, y, orientation.at(x, y))));
    if (peak <= 0.0) peak = 1.0;
    Image2D img(kappa.width, kappa.height, 3, 1.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            if (!mask.at(x, y)) continue;
            put(img, x, y, diverging(kappa.at(x, y, orientation.at(x, y)) / peak));
        }
    return img;
}

Image2D render_clusters(const LiftedFeatureMap& lifted, const ClusterResult& clusters) {
    require(lifted.points.size() == clusters.labels.size(),
            "render_clusters: result does not match the lifted map");
    Image2D img(lifted.width, lifted.height, 3, 1.0);
    constexpr int n_palette = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));
    for (std::size_t i = 0; i < lifted.points.size(); ++i) {
        const LiftedPoint& p = lifted.points[i];
        const int label = clusters.labels[i];
        const Rgb c = label == kNoiseLabel ? Rgb{0.5, 0.5, 0.5} : kPalette[(label - 1) % n_palette];
        put(img, p.x, p.y, c);
    }
    return img;
}

Image2D render_kernel(const KernelGrid& grid) {
    Image2D proj = project2d(grid, true);
    for (double& v : proj.values) v = 1.0 - v;  // dark mass on white
    return proj;
}

}  // namespace cg
