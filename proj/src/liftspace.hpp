#pragma once

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "image.hpp"

namespace cg {

// Discrete line orientations: theta_j = -pi/2 + j*pi/n_theta, j = 0..n_theta-1.
inline double orientation_bin_value(int bin, int n_theta) {
    return -3.14159265358979323846 / 2.0 + bin * 3.14159265358979323846 / n_theta;
}

struct CakeParams {
    int spline_order = 3;        // degree of the angular B-spline profile
    double low_sigma = 0.05;     // rad/px, low-frequency taper scale
    double pass_rho = 1.728;     // rad/px, end of the flat passband (0.55 * pi)
    double high_sigma = 0.366;   // rad/px, Gaussian roll-off beyond pass_rho
};

// Oriented quadrature filter bank whose wedges tile the Fourier plane.
// Filter k is filter 0 rotated by k*pi/n_theta; over conjugate wedge pairs
// the summed squared magnitudes equal the radial envelope squared, which is
// 1 on the passband annulus.
struct FilterBank {
    int n_theta = 0;
    int spatial_size = 0;  // odd
    CakeParams params;
    // spatial convolution kernels, centered, row-major spatial_size^2 each
    std::vector<std::vector<std::complex<double>>> kernels;

    // Frequency response of filter k sampled on the bank's own DFT grid
    // (used by the coverage checks; wx, wy in rad/px).
    static double radial_envelope(double rho, const CakeParams& p);
    double response(int k, double wx, double wy) const;
};

FilterBank cake_wavelet_bank(int n_theta, int spatial_size, const CakeParams& params = {});

// Complex orientation-score volume U_I(x, y, theta).
struct OrientationScore {
    int width = 0;
    int height = 0;
    int n_theta = 0;
    // slice-major: values[theta][y * width + x]
    std::vector<std::vector<std::complex<double>>> values;

    std::complex<double> at(int x, int y, int t) const {
        return values[t][static_cast<std::size_t>(y) * width + x];
    }
};

OrientationScore orientation_score(const Image2D& image, const FilterBank& bank);

// Per-pixel dominant orientation bin (argmax of Re(-U), smallest bin wins ties).
struct OrientationMap {
    int width = 0;
    int height = 0;
    int n_theta = 0;
    std::vector<std::uint16_t> bins;

    std::uint16_t at(int x, int y) const { return bins[static_cast<std::size_t>(y) * width + x]; }
    double theta(int x, int y) const { return orientation_bin_value(at(x, y), n_theta); }
};

OrientationMap dominant_orientation(const OrientationScore& score);

// kappa(x, y, theta) in 1/px and the ridge confidence s_sigma(x, y, theta).
struct VolumeMap {
    int width = 0;
    int height = 0;
    int n_theta = 0;
    std::vector<std::vector<double>> values;  // [theta][y * width + x]

    double at(int x, int y, int t) const {
        return values[t][static_cast<std::size_t>(y) * width + x];
    }
    double& at(int x, int y, int t) {
        return values[t][static_cast<std::size_t>(y) * width + x];
    }
};

struct CurvatureParams {
    double beta = 0.1;       // rad/px, angular-to-spatial balance of the Hessian
    double kappa_cap = 0.5;  // 1/px
    double c1_floor = 1e-8;  // below this the tangent is treated as vertical
    // Gaussian smoothing across orientation bins applied with the spatial
    // derivatives; keeps the discrete angular stencils consistent with the
    // bank's angular profile.
    double angular_sigma_bins = 1.3;
};

// Exponential-curve fit at one scale: curvature map and confidence map.
std::pair<VolumeMap, VolumeMap> curvature_confidence(const OrientationScore& score, double sigma,
                                                     const CurvatureParams& params = {});

// Per (x, y, theta) takes the curvature from the scale with the largest
// confidence; ties go to the smallest scale.
VolumeMap multiscale_curvature(const OrientationScore& score, const std::vector<double>& scales,
                               const CurvatureParams& params = {});

struct PixelCoord {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
};

// All mask==1 pixels in row-major order.
std::vector<PixelCoord> interest_points(const Mask& mask);

struct LiftedPoint {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint16_t theta_bin = 0;
    double f = 0.0;      // normalized intensity
    double kappa = 0.0;  // 1/px
};

struct LiftedFeatureMap {
    int width = 0;
    int height = 0;
    int n_theta = 0;
    std::vector<LiftedPoint> points;

    double theta_of(const LiftedPoint& p) const { return orientation_bin_value(p.theta_bin, n_theta); }
};

LiftedFeatureMap lift5d(const Image2D& image, const OrientationMap& orientation,
                        const VolumeMap& kappa_map, const Mask& mask);

// Points with |x - cx| <= s_o and |y - cy| <= s_o; the window is clipped at
// the image border, no padding points are invented.
LiftedFeatureMap crop_patch(const LiftedFeatureMap& lifted, int cx, int cy, int s_o);

// Luminosity/contrast normalization of each channel (local mean/std over a
// Gaussian window, clipped at +-3 std, mapped to [0,1]) followed by the
// pixelwise combination sqrt(g^2 + r^2), rescaled to [0,1].
Image2D preprocess(const Image2D& red, const Image2D& green, double norm_sigma = 16.0);

// Skeleton branch points (>= 3 skeleton neighbors), deduplicated within 5 px.
std::vector<PixelCoord> fallback_junctions(const Mask& mask);

// Zhang-Suen morphological thinning; exposed for tests.
Mask skeletonize(const Mask& mask);

}  // namespace cg
