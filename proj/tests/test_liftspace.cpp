#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "common.hpp"
#include "fft.hpp"
#include "liftspace.hpp"
#include "test_util.hpp"

using namespace cg;
using testutil::bar_image;
using testutil::circle_image;
using testutil::dark_mask;
using testutil::rotate_image;

namespace {

const FilterBank& shared_bank() {
    static const FilterBank bank = cake_wavelet_bank(18, 51);
    return bank;
}

std::vector<double> centerline_abs_kappa(const Image2D& img, double radius) {
    const OrientationScore score = orientation_score(img, shared_bank());
    const OrientationMap omap = dominant_orientation(score);
    const VolumeMap kmap = multiscale_curvature(score, {1.5, 2.5, 3.5});
    std::vector<double> vals;
    const double c = (img.width - 1) / 2.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (std::abs(std::hypot(x - c, y - c) - radius) <= 0.5)
                vals.push_back(std::abs(kmap.at(x, y, omap.at(x, y))));
    std::sort(vals.begin(), vals.end());
    return vals;
}

}  // namespace

TEST_CASE("cake bank: construction contract") {
    CHECK_THROWS_AS(cake_wavelet_bank(1, 51), Error);
    CHECK_THROWS_AS(cake_wavelet_bank(18, 50), Error);
    const FilterBank& bank = shared_bank();
    CHECK(bank.kernels.size() == 18);
    for (const auto& k : bank.kernels) CHECK(k.size() == 51u * 51u);
}

TEST_CASE("cake bank: quadrature-pair coverage is flat on the annulus") {
    const FilterBank& bank = shared_bank();
    double lo = 1e9, hi = -1e9;
    for (double rho = 0.35; rho <= 1.6; rho += 0.025)
        for (double phi = 0.0; phi < 2.0 * kPi; phi += 0.02) {
            const double wx = rho * std::cos(phi), wy = rho * std::sin(phi);
            double sum = 0.0;
            for (int k = 0; k < 18; ++k) {
                const double a = bank.response(k, wx, wy);
                const double b = bank.response(k, -wx, -wy);
                sum += a * a + b * b;
            }
            lo = std::min(lo, sum);
            hi = std::max(hi, sum);
        }
    CHECK(lo >= 0.99);
    CHECK(hi <= 1.01);
}

TEST_CASE("cake bank: filter k is filter 0 rotated by k*pi/n") {
    const FilterBank& bank = shared_bank();
    const int S = bank.spatial_size;
    for (int k : {3, 9, 14}) {
        Image2D mag0(S, S, 1, 0.0), magk(S, S, 1, 0.0);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                mag0.at(x, y) = std::abs(bank.kernels[0][static_cast<std::size_t>(y) * S + x]);
                magk.at(x, y) = std::abs(bank.kernels[k][static_cast<std::size_t>(y) * S + x]);
            }
        const Image2D rot = rotate_image(mag0, k * kPi / 18.0, 0.0);
        double num = 0.0, den = 0.0;
        for (int y = 5; y < S - 5; ++y)
            for (int x = 5; x < S - 5; ++x) {
                num += (magk.at(x, y) - rot.at(x, y)) * (magk.at(x, y) - rot.at(x, y));
                den += magk.at(x, y) * magk.at(x, y);
            }
        CHECK(num / den < 0.01);  // interpolation tolerance
    }
}

TEST_CASE("orientation score: zero image gives zero score") {
    Image2D img(64, 48, 1, 0.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    for (const auto& slice : score.values)
        for (const auto& v : slice) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("orientation score: dark horizontal bar peaks at the theta=0 bin") {
    const Image2D img = bar_image(101, 0.0, 3.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    int best = 0;
    double best_v = -1e300;
    for (int t = 0; t < 18; ++t) {
        const double v = -score.at(50, 50, t).real();
        if (v > best_v) {
            best_v = v;
            best = t;
        }
    }
    CHECK(best == 9);
    CHECK(orientation_bin_value(9, 18) == doctest::Approx(0.0));
}

TEST_CASE("orientation score: summed responses reconstruct the band-passed image") {
    const Image2D img = bar_image(101, 0.6, 4.0);
    const FilterBank& bank = shared_bank();
    const OrientationScore score = orientation_score(img, bank);

    // direct band-pass with the bank's summed spectrum on the padded grid
    const int W = img.width, H = img.height, S = bank.spatial_size;
    const std::size_t P = next_pow2(static_cast<std::size_t>(W + S - 1));
    const std::size_t Q = next_pow2(static_cast<std::size_t>(H + S - 1));
    std::vector<cdouble> ref(P * Q, cdouble(0, 0));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) ref[static_cast<std::size_t>(y) * P + x] = img.at(x, y);
    fft2_inplace(ref, P, Q, false);
    std::vector<cdouble> ksum(P * Q, cdouble(0, 0));
    const int r = S / 2;
    for (int k = 0; k < bank.n_theta; ++k)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const std::size_t yy =
                    static_cast<std::size_t>((dy + static_cast<int>(Q)) % static_cast<int>(Q));
                const std::size_t xx =
                    static_cast<std::size_t>((dx + static_cast<int>(P)) % static_cast<int>(P));
                ksum[yy * P + xx] += bank.kernels[k][static_cast<std::size_t>(dy + r) * S + (dx + r)];
            }
    fft2_inplace(ksum, P, Q, false);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] *= ksum[i];
    fft2_inplace(ref, P, Q, true);

    double num = 0.0, den = 0.0;
    for (int y = 10; y < H - 10; ++y)
        for (int x = 10; x < W - 10; ++x) {
            cdouble sum(0, 0);
            for (int t = 0; t < bank.n_theta; ++t) sum += score.at(x, y, t);
            const cdouble expect = ref[static_cast<std::size_t>(y) * P + x];
            num += std::norm(sum - expect);
            den += std::norm(expect);
        }
    CHECK(std::sqrt(num / den) < 0.05);
}

TEST_CASE("dominant orientation: constant image ties to bin 0") {
    // beyond the filter support from every border the DC-free kernels give
    // exactly zero response, so all bins tie
    Image2D img(128, 128, 1, 0.7);
    const OrientationScore score = orientation_score(img, shared_bank());
    const OrientationMap omap = dominant_orientation(score);
    int zero_bins = 0, total = 0;
    for (int y = 30; y < 98; ++y)
        for (int x = 30; x < 98; ++x) {
            ++total;
            zero_bins += omap.at(x, y) == 0 ? 1 : 0;
        }
    CHECK(zero_bins == total);
}

TEST_CASE("dominant orientation: bars at 30 and 90 degrees within one bin") {
    for (double deg : {30.0, 90.0}) {
        const double ang = deg * kPi / 180.0;
        const Image2D img = bar_image(101, ang, 3.0);
        const OrientationScore score = orientation_score(img, shared_bank());
        const OrientationMap omap = dominant_orientation(score);
        const double want = wrap_orientation(ang);
        const double c = 50.0;
        const double nx = -std::sin(ang), ny = std::cos(ang);
        int total = 0, good = 0;
        for (int y = 15; y < 86; ++y)
            for (int x = 15; x < 86; ++x) {
                if (std::abs((x - c) * nx + (y - c) * ny) > 0.5) continue;
                ++total;
                const double got = orientation_bin_value(omap.at(x, y), 18);
                if (std::abs(wrap_orientation(got - want)) <= kPi / 18.0 + 1e-9) ++good;
            }
        REQUIRE(total > 0);
        CHECK(good == total);
    }
}

TEST_CASE("rotation covariance: rotating the image by one bin shifts the map by one bin") {
    const double ang = 20.0 * kPi / 180.0;
    const Image2D img = bar_image(101, ang, 3.0);
    const Image2D rot = rotate_image(img, kPi / 18.0);
    const OrientationMap m0 = dominant_orientation(orientation_score(img, shared_bank()));
    const OrientationMap m1 = dominant_orientation(orientation_score(rot, shared_bank()));
    const double ang2 = ang + kPi / 18.0;
    const double nx = -std::sin(ang2), ny = std::cos(ang2);
    int total = 0, agree = 0;
    for (int y = 25; y < 76; ++y)
        for (int x = 25; x < 76; ++x) {
            if (std::abs((x - 50.0) * nx + (y - 50.0) * ny) > 0.5) continue;
            ++total;
            if (m1.at(x, y) == (m0.at(50, 50) + 1) % 18) ++agree;
        }
    REQUIRE(total > 10);
    CHECK(static_cast<double>(agree) / total >= 0.9);
}

TEST_CASE("curvature: straight line has near-zero curvature at matched scale") {
    const Image2D img = bar_image(151, 0.3, 3.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    const OrientationMap omap = dominant_orientation(score);
    auto [kmap, conf] = curvature_confidence(score, 1.5);
    std::vector<double> vals;
    const double nx = -std::sin(0.3), ny = std::cos(0.3);
    for (int y = 20; y < 131; ++y)
        for (int x = 20; x < 131; ++x) {
            if (std::abs((x - 75.0) * nx + (y - 75.0) * ny) > 0.5) continue;
            vals.push_back(std::abs(kmap.at(x, y, omap.at(x, y))));
        }
    std::sort(vals.begin(), vals.end());
    CHECK(vals[vals.size() / 2] < 0.005);
    for (const auto& slice : conf.values)
        for (double v : slice) CHECK(v >= 0.0);
}

TEST_CASE("curvature: circle radii 50 and 25 within 15 percent of 1/r") {
    {
        const std::vector<double> vals = centerline_abs_kappa(circle_image(201, 50.0, 3.0), 50.0);
        const double median = vals[vals.size() / 2];
        CHECK(median > 0.02 * 0.85);
        CHECK(median < 0.02 * 1.15);
    }
    {
        const std::vector<double> vals = centerline_abs_kappa(circle_image(151, 25.0, 3.0), 25.0);
        const double median = vals[vals.size() / 2];
        CHECK(median > 0.04 * 0.85);
        CHECK(median < 0.04 * 1.15);
    }
}

TEST_CASE("curvature sign: ccw-adjusted sign is consistent along the circle") {
    const Image2D img = circle_image(201, 50.0, 3.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    const OrientationMap omap = dominant_orientation(score);
    const VolumeMap kmap = multiscale_curvature(score, {1.5, 2.5, 3.5});
    int pos = 0, neg = 0;
    for (int y = 0; y < 201; ++y)
        for (int x = 0; x < 201; ++x) {
            if (std::abs(std::hypot(x - 100.0, y - 100.0) - 50.0) > 0.5) continue;
            const double k = kmap.at(x, y, omap.at(x, y));
            // re-sign the canonical-direction curvature to ccw traversal
            const double a = wrap_angle(std::atan2(y - 100.0, x - 100.0) + kPi / 2.0);
            const bool flip = a < -kPi / 2.0 || a >= kPi / 2.0;
            ((flip ? -k : k) > 0 ? pos : neg)++;
        }
    CHECK(static_cast<double>(std::max(pos, neg)) / (pos + neg) >= 0.9);
}

TEST_CASE("multiscale: single scale equals that scale's map") {
    const Image2D img = bar_image(81, 0.4, 3.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    const VolumeMap multi = multiscale_curvature(score, {2.5});
    auto [single, conf] = curvature_confidence(score, 2.5);
    for (int t = 0; t < 18; ++t)
        for (std::size_t i = 0; i < multi.values[t].size(); ++i)
            CHECK(multi.values[t][i] == single.values[t][i]);
}

TEST_CASE("multiscale: 7px bar takes curvature from the most confident scale (3.5)") {
    const Image2D img = bar_image(101, 0.0, 7.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    std::pair<VolumeMap, VolumeMap> per[3] = {curvature_confidence(score, 1.5),
                                              curvature_confidence(score, 2.5),
                                              curvature_confidence(score, 3.5)};
    const VolumeMap multi = multiscale_curvature(score, {1.5, 2.5, 3.5});
    int votes[3] = {0, 0, 0};
    for (int x = 20; x < 81; ++x) {
        int best = 0;
        for (int s = 1; s < 3; ++s)
            if (per[s].second.at(x, 50, 9) > per[best].second.at(x, 50, 9)) best = s;
        ++votes[best];
        CHECK(multi.at(x, 50, 9) == per[best].first.at(x, 50, 9));
    }
    CHECK(votes[2] == 61);  // sigma = 3.5 wins everywhere on the centerline
}

TEST_CASE("multiscale: exact confidence ties resolve to the smallest scale") {
    const Image2D img = bar_image(101, 0.0, 3.0);
    const OrientationScore score = orientation_score(img, shared_bank());
    std::pair<VolumeMap, VolumeMap> per[2] = {curvature_confidence(score, 1.5),
                                              curvature_confidence(score, 2.5)};
    const VolumeMap multi = multiscale_curvature(score, {1.5, 2.5});
    // far-background pixels have confidence floored to 0 at every scale, so
    // the smallest scale must win there
    int tie_pixels = 0;
    for (int x = 0; x < 101; x += 3)
        for (int y : {2, 98})
            for (int t = 0; t < 18; t += 5)
                if (per[0].second.at(x, y, t) == 0.0 && per[1].second.at(x, y, t) == 0.0) {
                    ++tie_pixels;
                    CHECK(multi.at(x, y, t) == per[0].first.at(x, y, t));
                }
    CHECK(tie_pixels > 0);
}

TEST_CASE("interest points: row-major enumeration of mask pixels") {
    Mask empty(8, 8, 0);
    CHECK(interest_points(empty).empty());
    Mask full(10, 10, 1);
    const auto pts = interest_points(full);
    CHECK(pts.size() == 100);
    CHECK(pts[0].x == 0);
    CHECK(pts[0].y == 0);
    CHECK(pts[1].x == 1);
    CHECK(pts[10].y == 1);
    Mask some(16, 16, 0);
    some.at(3, 2) = 1;
    some.at(7, 9) = 1;
    some.at(15, 15) = 1;
    CHECK(interest_points(some).size() == 3);
}

TEST_CASE("lift5d: one point per interest pixel with map values attached") {
    const Image2D img = circle_image(151, 40.0, 3.0);
    const Mask mask = dark_mask(img);
    const OrientationScore score = orientation_score(img, shared_bank());
    const OrientationMap omap = dominant_orientation(score);
    const VolumeMap kmap = multiscale_curvature(score, {1.5, 2.5, 3.5});
    const LiftedFeatureMap lifted = lift5d(img, omap, kmap, mask);
    CHECK(lifted.points.size() == interest_points(mask).size());
    std::vector<std::pair<int, int>> coords;
    for (const LiftedPoint& p : lifted.points) coords.push_back({p.x, p.y});
    std::sort(coords.begin(), coords.end());
    CHECK(std::adjacent_find(coords.begin(), coords.end()) == coords.end());
    Mask none(151, 151, 0);
    CHECK(lift5d(img, omap, kmap, none).points.empty());
}

TEST_CASE("crop_patch: strict window, clamping, idempotence") {
    LiftedFeatureMap lifted;
    lifted.width = 120;
    lifted.height = 120;
    lifted.n_theta = 18;
    for (int i = 0; i < 120; i += 2)
        lifted.points.push_back(
            {static_cast<std::uint16_t>(i), static_cast<std::uint16_t>(i / 2), 0, 0.5, 0.0});

    const LiftedFeatureMap patch = crop_patch(lifted, 60, 30, 25);
    CHECK(!patch.points.empty());
    for (const LiftedPoint& p : patch.points) {
        CHECK(std::abs(p.x - 60) <= 25);
        CHECK(std::abs(p.y - 30) <= 25);
    }
    LiftedFeatureMap edge;
    edge.width = 120;
    edge.height = 120;
    edge.n_theta = 18;
    edge.points.push_back({86, 30, 0, 0.1, 0.0});  // dx = +26: outside the 51x51 window
    edge.points.push_back({85, 30, 0, 0.1, 0.0});  // dx = +25: inside
    const LiftedFeatureMap edge_patch = crop_patch(edge, 60, 30, 25);
    CHECK(edge_patch.points.size() == 1);
    CHECK(edge_patch.points[0].x == 85);

    const LiftedFeatureMap corner = crop_patch(lifted, 0, 0, 25);
    for (const LiftedPoint& p : corner.points) {
        CHECK(p.x <= 25);
        CHECK(p.y <= 25);
    }
    const LiftedFeatureMap again = crop_patch(patch, 60, 30, 25);
    CHECK(again.points.size() == patch.points.size());
    CHECK_THROWS_AS(crop_patch(lifted, -5, 0, 25), Error);
}

TEST_CASE("fallback junctions: bar none, plus one, Y one") {
    Mask bar(61, 61, 0);
    for (int x = 5; x < 56; ++x)
        for (int w = -1; w <= 1; ++w) bar.at(x, 30 + w) = 1;
    CHECK(fallback_junctions(bar).empty());

    Mask plus(61, 61, 0);
    for (int i = 5; i < 56; ++i)
        for (int w = -1; w <= 1; ++w) {
            plus.at(i, 30 + w) = 1;
            plus.at(30 + w, i) = 1;
        }
    const auto pj = fallback_junctions(plus);
    REQUIRE(pj.size() == 1);
    CHECK(std::hypot(pj[0].x - 30.0, pj[0].y - 30.0) <= 3.0);

    Mask wye(61, 61, 0);
    for (int i = 0; i < 26; ++i)
        for (int w = -1; w <= 1; ++w) wye.at(30 + w, 30 + i) = 1;
    for (int i = 0; i < 22; ++i)
        for (int w = -1; w <= 1; ++w) {
            wye.at(30 - i + w, 30 - i) = 1;
            wye.at(30 + i + w, 30 - i) = 1;
        }
    const auto yj = fallback_junctions(wye);
    CHECK(yj.size() == 1);
}
