#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "affinity.hpp"
#include "common.hpp"

using namespace cg;

namespace {

KernelBank small_bank(double kappa_min, double kappa_max) {
    PathParams p;
    p.steps = 20;
    p.paths = 40000;
    p.sigma_kappa_diff = 0.002;
    p.seed = 31;
    return build_bank(kappa_min, kappa_max, 0.05, grid_dims_for(p, 18), p);
}

LiftedFeatureMap patch_of(std::vector<LiftedPoint> pts) {
    LiftedFeatureMap m;
    m.width = 64;
    m.height = 64;
    m.n_theta = 18;
    m.points = std::move(pts);
    return m;
}

}  // namespace

TEST_CASE("affinity: single point gives the 1x1 zero matrix") {
    const KernelBank bank = small_bank(0.0, 0.0);
    const AffinityMatrix m = build_affinity(patch_of({{10, 10, 9, 0.5, 0.0}}), bank, {});
    CHECK(m.n == 1);
    CHECK(m.at(0, 0) == 0.0);
}

TEST_CASE("affinity: empty patch is rejected") {
    const KernelBank bank = small_bank(0.0, 0.0);
    CHECK_THROWS_AS(build_affinity(patch_of({}), bank, {}), Error);
}

TEST_CASE("affinity: collinear same-orientation pair beats orthogonal pair") {
    const KernelBank bank = small_bank(0.0, 0.0);  // kappa = 0 only
    const AffinityMatrix collinear =
        build_affinity(patch_of({{20, 20, 9, 0.5, 0.0}, {25, 20, 9, 0.5, 0.0}}), bank, {});
    const AffinityMatrix orthogonal =
        build_affinity(patch_of({{20, 20, 9, 0.5, 0.0}, {25, 20, 0, 0.5, 0.0}}), bank, {});
    CHECK(collinear.at(0, 1) > orthogonal.at(0, 1));
    CHECK(collinear.at(0, 1) > 0.0);
}

TEST_CASE("affinity: bitwise symmetry and zero diagonal") {
    const KernelBank bank = small_bank(-0.1, 0.1);
    std::vector<LiftedPoint> pts;
    for (int i = 0; i < 24; ++i)
        pts.push_back({static_cast<std::uint16_t>(10 + 2 * i), static_cast<std::uint16_t>(10 + i),
                       static_cast<std::uint16_t>(i % 18), 0.1 * (i % 10), 0.01 * (i % 7) - 0.03});
    const AffinityMatrix m = build_affinity(patch_of(std::move(pts)), bank, {});
    for (std::size_t i = 0; i < m.n; ++i) {
        CHECK(m.at(i, i) == 0.0);
        for (std::size_t j = 0; j < m.n; ++j) {
            CHECK(m.at(i, j) == m.at(j, i));
            CHECK(m.at(i, j) >= 0.0);
        }
    }
}

TEST_CASE("affinity: widening the intensity gap never increases the weight") {
    const KernelBank bank = small_bank(0.0, 0.0);
    KernelWeights w;
    w.sigma_int = 0.275;
    double prev = 1e300;
    for (double df : {0.0, 0.1, 0.2, 0.4, 0.8}) {
        const AffinityMatrix m = build_affinity(
            patch_of({{20, 20, 9, 0.1, 0.0}, {26, 20, 9, 0.1 + df, 0.0}}), bank, w);
        CHECK(m.at(0, 1) <= prev);
        prev = m.at(0, 1);
    }
}

TEST_CASE("affinity: dump writes raw f64 plus a sidecar") {
    const KernelBank bank = small_bank(0.0, 0.0);
    const AffinityMatrix m = build_affinity(
        patch_of({{20, 20, 9, 0.5, 0.0}, {24, 20, 9, 0.5, 0.0}, {30, 21, 8, 0.4, 0.0}}), bank, {});
    const std::string bin = "/tmp/cg_test_affinity.bin", side = "/tmp/cg_test_affinity.json";
    dump_affinity(m, bin, side);
    std::ifstream in(bin, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(data.size() == m.n * m.n * sizeof(double));
    const double* vals = reinterpret_cast<const double*>(data.data());
    for (std::size_t i = 0; i < m.n * m.n; ++i) CHECK(vals[i] == m.values[i]);
    std::ifstream sj(side);
    std::string sidecar((std::istreambuf_iterator<char>(sj)), std::istreambuf_iterator<char>());
    CHECK(sidecar.find("\"n\": 3") != std::string::npos);
    std::remove(bin.c_str());
    std::remove(side.c_str());
}
