#include "liftspace.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>

#include "common.hpp"
#include "fft.hpp"

namespace cg {
namespace {

// Centered cardinal B-spline of degree 3, support [-2, 2]; shifted copies on
// an integer lattice sum to 1 exactly.
double bspline3(double t) {
    const double a = std::abs(t);
    if (a >= 2.0) return 0.0;
    if (a <= 1.0) return (4.0 - 6.0 * a * a + 3.0 * a * a * a) / 6.0;
    const double b = 2.0 - a;
    return b * b * b / 6.0;
}

double wrap_2pi_signed(double a) {
    double t = std::fmod(a, 2.0 * kPi);
    if (t <= -kPi) t += 2.0 * kPi;
    if (t > kPi) t -= 2.0 * kPi;
    return t;
}

// 1D Gaussian and its derivatives, normalized so the smoothing kernel sums
// to one; radius 4 sigma.
struct GaussKernels {
    int radius = 0;
    std::vector<double> g0, g1, g2;
};

GaussKernels gauss_kernels(double sigma) {
    GaussKernels k;
    k.radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    const int n = 2 * k.radius + 1;
    k.g0.resize(n);
    k.g1.resize(n);
    k.g2.resize(n);
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i)
        sum += std::exp(-0.5 * i * i / (sigma * sigma));
    const double s2 = sigma * sigma;
    for (int i = -k.radius; i <= k.radius; ++i) {
        const double g = std::exp(-0.5 * i * i / s2) / sum;
        k.g0[i + k.radius] = g;
        // correlation-form taps: sum_i k(i) f(x+i) approximates f^(n)(x)
        k.g1[i + k.radius] = (static_cast<double>(i) / s2) * g;
        k.g2[i + k.radius] = ((static_cast<double>(i) * i - s2) / (s2 * s2)) * g;
    }
    return k;
}

int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

// Separable pass along x then y with the given 1D kernels.
std::vector<double> conv_separable(const std::vector<double>& src, int w, int h,
                                   const std::vector<double>& kx, const std::vector<double>& ky,
                                   int radius) {
    std::vector<double> tmp(src.size()), dst(src.size());
    for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * w;
        double* out = tmp.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kx[i + radius] * row[reflect_index(x + i, w)];
            out[x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        double* out = dst.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += ky[i + radius] * tmp[static_cast<std::size_t>(reflect_index(y + i, h)) * w + x];
            out[x] = acc;
        }
    }
    return dst;
}

}  // namespace

double FilterBank::radial_envelope(double rho, const CakeParams& p) {
    if (rho <= 0.0) return 0.0;
    double env = 1.0 - std::exp(-0.5 * rho * rho / (p.low_sigma * p.low_sigma));
    if (rho > p.pass_rho) {
        const double d = rho - p.pass_rho;
        env *= std::exp(-0.5 * d * d / (p.high_sigma * p.high_sigma));
    }
    return env;
}

double FilterBank::response(int k, double wx, double wy) const {
    const double rho = std::hypot(wx, wy);
    const double env = radial_envelope(rho, params);
    if (env == 0.0) return 0.0;
    const double dphi = kPi / n_theta;
    // wedge center perpendicular to the line orientation of bin k
    const double phi_k = orientation_bin_value(k, n_theta) + kPi / 2.0;
    const double d = wrap_2pi_signed(std::atan2(wy, wx) - phi_k) / dphi;
    const double b = bspline3(d);
    return b <= 0.0 ? 0.0 : env * std::sqrt(b);
}

FilterBank cake_wavelet_bank(int n_theta, int spatial_size, const CakeParams& params) {
    require(n_theta >= 2, "cake bank needs n_theta >= 2");
    require(spatial_size >= 3 && spatial_size % 2 == 1, "cake bank needs an odd spatial size >= 3");

    FilterBank bank;
    bank.n_theta = n_theta;
    bank.spatial_size = spatial_size;
    bank.params = params;
    bank.kernels.resize(n_theta);

    const int S = spatial_size;
    const int half = S / 2;
    // signed DFT frequencies of an S-point grid, rad/px
    std::vector<double> freq(S);
    for (int i = 0; i < S; ++i) {
        const int signed_i = i <= half ? i : i - S;
        freq[i] = 2.0 * kPi * signed_i / S;
    }
    // twiddle matrix for the centered inverse DFT, e^{+i w d}
    std::vector<cdouble> twiddle(static_cast<std::size_t>(S) * S);
    for (int i = 0; i < S; ++i)
        for (int d = -half; d <= half; ++d)
            twiddle[static_cast<std::size_t>(i) * S + (d + half)] =
                std::exp(cdouble(0.0, freq[i] * d));

    std::vector<cdouble> spectrum(static_cast<std::size_t>(S) * S);
    std::vector<cdouble> partial(static_cast<std::size_t>(S) * S);
    for (int k = 0; k < n_theta; ++k) {
        for (int iy = 0; iy < S; ++iy)
            for (int ix = 0; ix < S; ++ix)
                spectrum[static_cast<std::size_t>(iy) * S + ix] =
                    bank.response(k, freq[ix], freq[iy]);
        // separable centered inverse DFT
        for (int iy = 0; iy < S; ++iy)
            for (int dx = 0; dx < S; ++dx) {
                cdouble acc(0.0, 0.0);
                for (int ix = 0; ix < S; ++ix)
                    acc += spectrum[static_cast<std::size_t>(iy) * S + ix] *
                           twiddle[static_cast<std::size_t>(ix) * S + dx];
                partial[static_cast<std::size_t>(iy) * S + dx] = acc;
            }
        auto& kernel = bank.kernels[k];
        kernel.resize(static_cast<std::size_t>(S) * S);
        const double norm = 1.0 / (static_cast<double>(S) * S);
        for (int dx = 0; dx < S; ++dx)
            for (int dy = 0; dy < S; ++dy) {
                cdouble acc(0.0, 0.0);
                for (int iy = 0; iy < S; ++iy)
                    acc += partial[static_cast<std::size_t>(iy) * S + dx] *
                           twiddle[static_cast<std::size_t>(iy) * S + dy];
                kernel[static_cast<std::size_t>(dy) * S + dx] = acc * norm;
            }
    }
    return bank;
}

OrientationScore orientation_score(const Image2D& image, const FilterBank& bank) {
    require(image.channels == 1, "orientation_score expects a single-channel image");
    require(image.width >= 1 && image.height >= 1, "empty image");
    for (double v : image.values)
        if (!std::isfinite(v)) fail_invalid("orientation_score: non-finite pixel");

    const int W = image.width, H = image.height, S = bank.spatial_size;
    const std::size_t P = next_pow2(static_cast<std::size_t>(W + S - 1));
    const std::size_t Q = next_pow2(static_cast<std::size_t>(H + S - 1));

    std::vector<cdouble> img_hat(P * Q, cdouble(0.0, 0.0));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            img_hat[static_cast<std::size_t>(y) * P + x] = image.at(x, y);
    fft2_inplace(img_hat, P, Q, false);

    OrientationScore score;
    score.width = W;
    score.height = H;
    score.n_theta = bank.n_theta;
    score.values.assign(bank.n_theta, {});

    const int r = S / 2;
    parallel_for(0, bank.n_theta, [&](std::int64_t k) {
        std::vector<cdouble> buf(P * Q, cdouble(0.0, 0.0));
        // kernel centered at the origin with wrapped negative offsets
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const std::size_t yy = static_cast<std::size_t>((dy + static_cast<int>(Q)) % static_cast<int>(Q));
                const std::size_t xx = static_cast<std::size_t>((dx + static_cast<int>(P)) % static_cast<int>(P));
                buf[yy * P + xx] = bank.kernels[k][static_cast<std::size_t>(dy + r) * S + (dx + r)];
            }
        fft2_inplace(buf, P, Q, false);
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= img_hat[i];
        fft2_inplace(buf, P, Q, true);
        auto& slice = score.values[k];
        slice.resize(static_cast<std::size_t>(W) * H);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                slice[static_cast<std::size_t>(y) * W + x] = buf[static_cast<std::size_t>(y) * P + x];
    });
    return score;
}

OrientationMap dominant_orientation(const OrientationScore& score) {
    OrientationMap map;
    map.width = score.width;
    map.height = score.height;
    map.n_theta = score.n_theta;
    map.bins.assign(static_cast<std::size_t>(score.width) * score.height, 0);
    // responses below the floor count as exact zeros, so a flat image ties
    // every bin and the smallest index wins
    constexpr double kFloor = 1e-12;
    for (std::size_t i = 0; i < map.bins.size(); ++i) {
        auto response = [&](int t) {
            const double v = -score.values[t][i].real();
            return std::abs(v) < kFloor ? 0.0 : v;
        };
        double best = response(0);
        int best_t = 0;
        for (int t = 1; t < score.n_theta; ++t) {
            const double v = response(t);
            if (v > best) {
                best = v;
                best_t = t;
            }
        }
        map.bins[i] = static_cast<std::uint16_t>(best_t);
    }
    return map;
}

std::pair<VolumeMap, VolumeMap> curvature_confidence(const OrientationScore& score, double sigma,
                                                     const CurvatureParams& params) {
    require(sigma > 0.0, "curvature scale must be positive");
    const int W = score.width, H = score.height, T = score.n_theta;
    const std::size_t plane = static_cast<std::size_t>(W) * H;
    const double dtheta = kPi / T;

    // V = Re(-U), smoothed across orientation bins (periodic), then Gaussian
    // derivatives at the requested spatial scale
    std::vector<std::vector<double>> smooth(T, std::vector<double>(plane, 0.0));
    {
        const double sa = std::max(params.angular_sigma_bins, 1e-6);
        const int ar = std::max(1, static_cast<int>(std::ceil(3.0 * sa)));
        std::vector<double> ak(2 * ar + 1);
        double asum = 0.0;
        for (int i = -ar; i <= ar; ++i) asum += ak[i + ar] = std::exp(-0.5 * i * i / (sa * sa));
        for (double& a : ak) a /= asum;
        parallel_for(0, T, [&](std::int64_t t) {
            for (int i = -ar; i <= ar; ++i) {
                const int src = ((static_cast<int>(t) + i) % T + T) % T;
                const double w = ak[i + ar];
                for (std::size_t j = 0; j < plane; ++j)
                    smooth[t][j] += w * -score.values[src][j].real();
            }
        });
    }

    const GaussKernels gk = gauss_kernels(sigma);
    enum { D00, DX, DY, DXX, DXY, DYY, NDERIV };
    std::vector<std::array<std::vector<double>, NDERIV>> deriv(T);
    parallel_for(0, T, [&](std::int64_t t) {
        const std::vector<double>& v = smooth[t];
        deriv[t][D00] = conv_separable(v, W, H, gk.g0, gk.g0, gk.radius);
        deriv[t][DX] = conv_separable(v, W, H, gk.g1, gk.g0, gk.radius);
        deriv[t][DY] = conv_separable(v, W, H, gk.g0, gk.g1, gk.radius);
        deriv[t][DXX] = conv_separable(v, W, H, gk.g2, gk.g0, gk.radius);
        deriv[t][DXY] = conv_separable(v, W, H, gk.g1, gk.g1, gk.radius);
        deriv[t][DYY] = conv_separable(v, W, H, gk.g0, gk.g2, gk.radius);
    });

    VolumeMap kappa, conf;
    for (VolumeMap* m : {&kappa, &conf}) {
        m->width = W;
        m->height = H;
        m->n_theta = T;
        m->values.assign(T, std::vector<double>(plane, 0.0));
    }

    const double beta = params.beta;
    parallel_for(0, T, [&](std::int64_t t) {
        const int tp = (static_cast<int>(t) + 1) % T;
        const int tm = (static_cast<int>(t) + T - 1) % T;
        const double theta = orientation_bin_value(static_cast<int>(t), T);
        const double c = std::cos(theta), s = std::sin(theta);
        for (std::size_t i = 0; i < plane; ++i) {
            const double vx = deriv[t][DX][i], vy = deriv[t][DY][i];
            const double vxx = deriv[t][DXX][i], vxy = deriv[t][DXY][i], vyy = deriv[t][DYY][i];
            const double vtt =
                (deriv[tp][D00][i] - 2.0 * deriv[t][D00][i] + deriv[tm][D00][i]) / (dtheta * dtheta);
            const double vxt = (deriv[tp][DX][i] - deriv[tm][DX][i]) / (2.0 * dtheta);
            const double vyt = (deriv[tp][DY][i] - deriv[tm][DY][i]) / (2.0 * dtheta);

            // left-invariant Hessian in the rotating frame; the mixed terms
            // use the flat derivatives (the commutator corrections vanish on
            // the ridge and only add off-ridge noise to the fit)
            const double h11 = c * c * vxx + 2.0 * c * s * vxy + s * s * vyy;
            const double h33 = s * s * vxx - 2.0 * c * s * vxy + c * c * vyy;
            const double h13 = c * s * (vyy - vxx) + (c * c - s * s) * vxy;
            const double h12 = c * vxt + s * vyt;
            const double h23 = -s * vxt + c * vyt;
            const double h22 = vtt;

            Eigen::Matrix3d hb;
            hb << h11, beta * h12, h13,
                  beta * h12, beta * beta * h22, beta * h23,
                  h13, beta * h23, h33;
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(hb);
            const Eigen::Vector3d evals = es.eigenvalues();
            int best = 0;
            for (int j = 1; j < 3; ++j)
                if (std::abs(evals[j]) < std::abs(evals[best])) best = j;
            const Eigen::Vector3d w = es.eigenvectors().col(best);

            // kappa = c2/c1 is invariant under the eigenvector sign ambiguity
            double k_val;
            if (std::abs(w[0]) <= params.c1_floor) {
                // near-vertical tangent in the lifted space
                const double sign = w[0] * w[1];
                k_val = std::copysign(params.kappa_cap, sign == 0.0 ? 1.0 : sign);
            } else {
                k_val = std::clamp(beta * w[1] / w[0], -params.kappa_cap, params.kappa_cap);
            }
            kappa.values[t][i] = k_val;
            conf.values[t][i] = std::max(0.0, -sigma * sigma * (vxx + vyy));
        }
    });
    return {std::move(kappa), std::move(conf)};
}

VolumeMap multiscale_curvature(const OrientationScore& score, const std::vector<double>& scales,
                               const CurvatureParams& params) {
    require(!scales.empty(), "multiscale_curvature needs at least one scale");
    std::vector<double> sorted = scales;
    std::sort(sorted.begin(), sorted.end());

    VolumeMap best_kappa, best_conf;
    bool first = true;
    for (double sigma : sorted) {
        auto [kappa, conf] = curvature_confidence(score, sigma, params);
        if (first) {
            best_kappa = std::move(kappa);
            best_conf = std::move(conf);
            first = false;
            continue;
        }
        for (int t = 0; t < score.n_theta; ++t)
            for (std::size_t i = 0; i < best_conf.values[t].size(); ++i)
                if (conf.values[t][i] > best_conf.values[t][i]) {
                    best_conf.values[t][i] = conf.values[t][i];
                    best_kappa.values[t][i] = kappa.values[t][i];
                }
    }
    return best_kappa;
}

std::vector<PixelCoord> interest_points(const Mask& mask) {
    std::vector<PixelCoord> points;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y))
                points.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)});
    return points;
}

LiftedFeatureMap lift5d(const Image2D& image, const OrientationMap& orientation,
                        const VolumeMap& kappa_map, const Mask& mask) {
    require(image.width == mask.width && image.height == mask.height,
            "lift5d: image/mask dimensions differ");
    require(orientation.width == image.width && orientation.height == image.height,
            "lift5d: orientation map dimensions differ");
    require(kappa_map.width == image.width && kappa_map.height == image.height,
            "lift5d: curvature map dimensions differ");

    LiftedFeatureMap lifted;
    lifted.width = image.width;
    lifted.height = image.height;
    lifted.n_theta = orientation.n_theta;
    for (const PixelCoord& p : interest_points(mask)) {
        LiftedPoint lp;
        lp.x = p.x;
        lp.y = p.y;
        lp.theta_bin = orientation.at(p.x, p.y);
        lp.f = std::clamp(image.at(p.x, p.y), 0.0, 1.0);
        lp.kappa = kappa_map.at(p.x, p.y, lp.theta_bin);
        lifted.points.push_back(lp);
    }
    return lifted;
}

LiftedFeatureMap crop_patch(const LiftedFeatureMap& lifted, int cx, int cy, int s_o) {
    require(cx >= 0 && cx < lifted.width && cy >= 0 && cy < lifted.height,
            "crop_patch: center outside image");
    require(s_o >= 0, "crop_patch: negative half-size");
    LiftedFeatureMap patch;
    patch.width = lifted.width;
    patch.height = lifted.height;
    patch.n_theta = lifted.n_theta;
    for (const LiftedPoint& p : lifted.points)
        if (std::abs(static_cast<int>(p.x) - cx) <= s_o && std::abs(static_cast<int>(p.y) - cy) <= s_o)
            patch.points.push_back(p);
    return patch;
}

Image2D preprocess(const Image2D& red, const Image2D& green, double norm_sigma) {
    require(red.width == green.width && red.height == green.height,
            "preprocess: channel dimensions differ");
    require(red.channels == 1 && green.channels == 1, "preprocess expects gray channels");
    for (const Image2D* ch : {&red, &green})
        for (double v : ch->values)
            if (!std::isfinite(v)) fail_invalid("preprocess: non-finite pixel");

    const int W = red.width, H = red.height;
    const GaussKernels gk = gauss_kernels(norm_sigma);
    auto normalize = [&](const Image2D& src) {
        std::vector<double> sq(src.values.size());
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = src.values[i] * src.values[i];
        const std::vector<double> mean = conv_separable(src.values, W, H, gk.g0, gk.g0, gk.radius);
        const std::vector<double> mean_sq = conv_separable(sq, W, H, gk.g0, gk.g0, gk.radius);
        std::vector<double> out(src.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double var = std::max(0.0, mean_sq[i] - mean[i] * mean[i]);
            const double sd = std::sqrt(var);
            const double z = sd > 1e-9 ? (src.values[i] - mean[i]) / sd : 0.0;
            out[i] = (std::clamp(z, -3.0, 3.0) + 3.0) / 6.0;
        }
        return out;
    };

    const std::vector<double> ng = normalize(green);
    const std::vector<double> nr = normalize(red);
    Image2D combined(W, H, 1);
    for (std::size_t i = 0; i < combined.values.size(); ++i)
        combined.values[i] = std::sqrt(ng[i] * ng[i] + nr[i] * nr[i]);

    const auto [mn, mx] = std::minmax_element(combined.values.begin(), combined.values.end());
    if (*mx > *mn) {
        const double span = *mx - *mn;
        const double lo = *mn;
        for (double& v : combined.values) v = (v - lo) / span;
    } else {
        for (double& v : combined.values) v = std::clamp(v, 0.0, 1.0);
    }
    return combined;
}

Mask skeletonize(const Mask& mask) {
    const int W = mask.width, H = mask.height;
    Mask skel = mask;
    auto at = [&](int x, int y) -> int {
        return (x >= 0 && x < W && y >= 0 && y < H) ? skel.at(x, y) : 0;
    };
    bool changed = true;
    std::vector<PixelCoord> to_clear;
    while (changed) {
        changed = false;
        for (int phase = 0; phase < 2; ++phase) {
            to_clear.clear();
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < W; ++x) {
                    if (!at(x, y)) continue;
                    const int p2 = at(x, y - 1), p3 = at(x + 1, y - 1), p4 = at(x + 1, y);
                    const int p5 = at(x + 1, y + 1), p6 = at(x, y + 1), p7 = at(x - 1, y + 1);
                    const int p8 = at(x - 1, y), p9 = at(x - 1, y - 1);
                    const int b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9;
                    if (b < 2 || b > 6) continue;
                    int a = 0;
                    const int seq[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
                    for (int i = 0; i < 8; ++i)
                        if (seq[i] == 0 && seq[i + 1] == 1) ++a;
                    if (a != 1) continue;
                    if (phase == 0) {
                        if (p2 * p4 * p6 != 0 || p4 * p6 * p8 != 0) continue;
                    } else {
                        if (p2 * p4 * p8 != 0 || p2 * p6 * p8 != 0) continue;
                    }
                    to_clear.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)});
                }
            for (const PixelCoord& p : to_clear) skel.at(p.x, p.y) = 0;
            if (!to_clear.empty()) changed = true;
        }
    }
    return skel;
}

std::vector<PixelCoord> fallback_junctions(const Mask& mask) {
    const Mask skel = skeletonize(mask);
    const int W = skel.width, H = skel.height;
    auto at = [&](int x, int y) -> int {
        return (x >= 0 && x < W && y >= 0 && y < H) ? skel.at(x, y) : 0;
    };
    std::vector<PixelCoord> raw;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            if (!at(x, y)) continue;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if ((dx || dy) && at(x + dx, y + dy)) ++n;
            if (n >= 3) raw.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y)});
        }
    std::vector<PixelCoord> kept;
    for (const PixelCoord& p : raw) {
        bool close = false;
        for (const PixelCoord& q : kept) {
            const double dx = static_cast<double>(p.x) - q.x;
            const double dy = static_cast<double>(p.y) - q.y;
            if (dx * dx + dy * dy <= 25.0) {
                close = true;
                break;
            }
        }
        if (!close) kept.push_back(p);
    }
    return kept;
}

}  // namespace cg
