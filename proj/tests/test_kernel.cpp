#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "common.hpp"
#include "kernel.hpp"

using cg::GridDims;
using cg::KernelBank;
using cg::KernelGrid;
using cg::PathParams;
using cg::Pose;

namespace {

PathParams quick_params(int steps, std::uint64_t paths, double sigma, std::uint64_t seed = 7) {
    PathParams p;
    p.steps = steps;
    p.paths = paths;
    p.sigma_kappa_diff = sigma;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("straight transport: sigma=0, kappa=0 stays on the +x axis") {
    const PathParams p = quick_params(20, 10, 0.0);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelGrid grid = cg::simulate_paths(0.0, dims, p);
    const int cx = dims.nx / 2, cy = dims.ny / 2;
    const int t0 = 9;  // theta = 0 bin of 18
    double on_axis = 0.0;
    for (int s = 0; s < 20; ++s) on_axis += grid.at(cx + s, cy, t0);
    CHECK(on_axis == doctest::Approx(grid.mass()).epsilon(1e-12));
    CHECK(grid.mass() == doctest::Approx(1.0).epsilon(1e-12));
    // y-marginal is a point mass at the center row
    for (int y = 0; y < dims.ny; ++y) {
        if (y == cy) continue;
        for (int x = 0; x < dims.nx; ++x)
            for (int t = 0; t < 18; ++t) CHECK(grid.at(x, y, t) == 0.0);
    }
}

TEST_CASE("deterministic arc: kappa=0.04 deposits track the radius-25 circle") {
    // analytic arc (sin(ks)/k, (1-cos(ks))/k); every deposit must stay within
    // one cell of the same-arclength point for any H <= 40
    const double k = 0.04;
    for (int steps : {10, 25, 40}) {
        const PathParams p = quick_params(steps, 1, 0.0);
        const GridDims dims = cg::grid_dims_for(p, 18);
        const KernelGrid grid = cg::simulate_paths(k, dims, p);
        CHECK(grid.deposits == static_cast<std::uint64_t>(steps) * cg::kDepositUnit);

        // recompute the Euler states to know which cell holds each deposit
        double x = 0.0, y = 0.0, theta = 0.0;
        for (int s = 0; s < steps; ++s) {
            if (s > 0) {
                const double nx = x + std::cos(theta);
                const double ny = y + std::sin(theta);
                theta += k;
                x = nx;
                y = ny;
            }
            const long ix = cg::round_away(x);
            const long iy = cg::round_away(y);
            const double ax = std::sin(k * s) / k;
            const double ay = (1.0 - std::cos(k * s)) / k;
            CHECK(std::abs(ix - ax) <= 1.0);
            CHECK(std::abs(iy - ay) <= 1.0);
            // and the grid really has mass in that cell
            const int t_bin = cg::round_away(cg::wrap_orientation(theta) * 18.0 / cg::kPi) + 9;
            CHECK(grid.at(dims.nx / 2 + static_cast<int>(ix), dims.ny / 2 + static_cast<int>(iy),
                          t_bin % 18) > 0.0);
        }
    }
}

TEST_CASE("curved slices bend toward sign(kappa0)") {
    const PathParams p = quick_params(40, 100000, 0.001);
    const GridDims dims = cg::grid_dims_for(p, 18);
    for (double k0 : {0.08, -0.08}) {
        const KernelGrid grid = cg::simulate_paths(k0, dims, p);
        const cg::Image2D proj = cg::project2d(grid, false);
        double mean_y = 0.0, mass = 0.0;
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                mean_y += proj.at(x, y) * (y - dims.ny / 2);
                mass += proj.at(x, y);
            }
        mean_y /= mass;
        CHECK(mean_y * k0 > 0.0);
    }
    // kappa0 = 0: mean |y| below 3 cells
    const KernelGrid grid = cg::simulate_paths(0.0, dims, p);
    const cg::Image2D proj = cg::project2d(grid, false);
    double mean_y = 0.0, mass = 0.0;
    for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x) {
            mean_y += proj.at(x, y) * (y - dims.ny / 2);
            mass += proj.at(x, y);
        }
    CHECK(std::abs(mean_y / mass) < 3.0);
}

TEST_CASE("mass accounting: deposits + spill = paths * steps") {
    // tiny grid so that plenty of mass walks out
    const PathParams p = quick_params(30, 2000, 0.01);
    GridDims dims;
    dims.nx = 21;
    dims.ny = 21;
    dims.n_theta = 18;
    const KernelGrid grid = cg::simulate_paths(0.0, dims, p);
    CHECK(grid.deposits + grid.spilled == grid.total_states);
    CHECK(grid.spilled > 0);
    CHECK(grid.mass() + grid.spill_fraction() == 1.0);
    double sum = 0.0;
    for (double v : grid.cells) sum += v;
    CHECK(sum == doctest::Approx(grid.mass()).epsilon(1e-9));
}

TEST_CASE("determinism: same seed gives bit-identical grids") {
    const PathParams p = quick_params(25, 30000, 0.002, 99);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelGrid a = cg::simulate_paths(0.05, dims, p);
    const KernelGrid b = cg::simulate_paths(0.05, dims, p);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i] == b.cells[i]);
    CHECK(a.deposits == b.deposits);
}

TEST_CASE("sign equivariance: mirrored noise equals the mirrored grid, cell-exact") {
    const PathParams p = quick_params(30, 20000, 0.003, 1234);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelGrid plus = cg::simulate_paths(0.06, dims, p);
    const KernelGrid minus = cg::detail::simulate_paths_mirrored(-0.06, dims, p);
    // (y, theta, kappa) -> (-y, -theta, -kappa): cell (x, y, t) maps to
    // (x, ny-1-y, (n-t) mod n)
    for (int t = 0; t < dims.n_theta; ++t)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                const int mt = (dims.n_theta - t) % dims.n_theta;
                CHECK(plus.at(x, y, t) == minus.at(x, dims.ny - 1 - y, mt));
            }
}

TEST_CASE("convergence: independent kernels at n=1e5 agree better than at n=1e3") {
    const GridDims dims = cg::grid_dims_for(quick_params(25, 1, 0.0), 18);
    for (double k0 : {0.0, 0.1}) {
        double dist[2];
        int slot = 0;
        for (std::uint64_t n : {std::uint64_t(1000), std::uint64_t(100000)}) {
            const KernelGrid a = cg::simulate_paths(k0, dims, quick_params(25, n, 0.005, 11));
            const KernelGrid b = cg::simulate_paths(k0, dims, quick_params(25, n, 0.005, 22));
            double l1 = 0.0;
            for (std::size_t i = 0; i < a.cells.size(); ++i) l1 += std::abs(a.cells[i] - b.cells[i]);
            dist[slot++] = l1;
        }
        CHECK(dist[1] < dist[0]);
    }
}

TEST_CASE("bank lattice arithmetic") {
    const PathParams p = quick_params(10, 50, 0.0);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelBank one = cg::build_bank(0.0, 0.0, 0.05, dims, p);
    CHECK(one.slices() == 1);
    const KernelBank nine = cg::build_bank(-0.2, 0.2, 0.05, dims, p);
    CHECK(nine.slices() == 9);
    CHECK(nine.kappa_of(0) == doctest::Approx(-0.2));
    CHECK(nine.kappa_of(8) == doctest::Approx(0.2));
    // nearest-slice selection, ties toward the smaller kappa
    CHECK(nine.nearest_slice(0.02) == 4);
    CHECK(nine.nearest_slice(0.031) == 5);
    CHECK(nine.nearest_slice(0.025) == 4);
    CHECK(nine.nearest_slice(9.0) == 8);
    CHECK(nine.nearest_slice(-9.0) == 0);
}

TEST_CASE("bank file round trip is bit identical") {
    const PathParams p = quick_params(12, 5000, 0.004, 5);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelBank bank = cg::build_bank(-0.1, 0.1, 0.05, dims, p);
    const std::string path = "/tmp/cg_test_bank.k5d";
    cg::save_bank(bank, path);
    const KernelBank loaded = cg::load_bank(path);
    REQUIRE(loaded.slices() == bank.slices());
    for (int s = 0; s < bank.slices(); ++s) {
        REQUIRE(loaded.grids[s].cells.size() == bank.grids[s].cells.size());
        for (std::size_t i = 0; i < bank.grids[s].cells.size(); ++i)
            CHECK(loaded.grids[s].cells[i] == bank.grids[s].cells[i]);
        CHECK(loaded.grids[s].deposits == bank.grids[s].deposits);
    }
    // a second save produces the same bytes
    const std::string path2 = "/tmp/cg_test_bank2.k5d";
    cg::save_bank(bank, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
    // corruption is detected
    std::string bad = b1;
    bad[bad.size() / 2] ^= 0x40;
    {
        std::ofstream out(path2, std::ios::binary);
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    CHECK_THROWS_AS(cg::load_bank(path2), cg::Error);
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("eval_gamma interpolation identities") {
    const PathParams p = quick_params(15, 20000, 0.002, 3);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelBank bank = cg::build_bank(0.0, 0.0, 0.05, dims, p);
    const KernelGrid& grid = bank.grids[0];
    const int cx = dims.nx / 2, cy = dims.ny / 2;

    // query at a cell center returns that cell
    const double v = cg::eval_gamma(bank, Pose{0, 0, 0}, Pose{4, 0, 0}, 0.0);
    CHECK(v == doctest::Approx(grid.at(cx + 4, cy, 9)).epsilon(1e-12));

    // midway along x: mean of the two cells (same theta plane)
    const double mid = cg::eval_gamma(bank, Pose{0, 0, 0}, Pose{4.5, 0, 0}, 0.0);
    CHECK(mid ==
          doctest::Approx(0.5 * (grid.at(cx + 4, cy, 9) + grid.at(cx + 5, cy, 9))).epsilon(1e-12));

    // left-invariance: a rotated frame sees the same relative kernel
    const double rotated =
        cg::eval_gamma(bank, Pose{10, 3, 0.7}, Pose{10 + 4 * std::cos(0.7), 3 + 4 * std::sin(0.7), 0.7}, 0.0);
    CHECK(rotated == doctest::Approx(v).epsilon(1e-9));

    // beyond the grid support
    CHECK(cg::eval_gamma(bank, Pose{0, 0, 0}, Pose{1000, 0, 0}, 0.0) == 0.0);
}

TEST_CASE("connectivity weight: analytic factors and exact symmetry") {
    const PathParams p = quick_params(20, 50000, 0.002, 8);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelBank bank = cg::build_bank(-0.1, 0.1, 0.05, dims, p);
    cg::KernelWeights w;
    w.sigma_kappa_exp = 1.0;
    w.sigma_int = 0.25;

    cg::LiftedPoint a{10, 10, 9, 0.5, 0.0};
    cg::LiftedPoint b{15, 10, 9, 0.5, 0.0};
    const double base = cg::connectivity_weight(a, b, 18, bank, w);
    CHECK(base > 0.0);

    // equal f and kappa: weight is the symmetrized kernel mean
    const double gf = cg::eval_gamma(bank, Pose{10, 10, 0}, Pose{15, 10, 0}, 0.0);
    const double gb = cg::eval_gamma(bank, Pose{15, 10, 0}, Pose{10, 10, 0}, 0.0);
    CHECK(base == doctest::Approx(0.5 * (gf + gb)).epsilon(1e-12));

    // |f difference| = sigma_int scales by e^-1
    cg::LiftedPoint c = b;
    c.f = a.f + w.sigma_int;
    const double scaled = cg::connectivity_weight(a, c, 18, bank, w);
    CHECK(scaled == doctest::Approx(base * std::exp(-1.0)).epsilon(1e-12));

    // far beyond the grid: zero
    cg::LiftedPoint far_q{200, 200, 9, 0.5, 0.0};
    CHECK(cg::connectivity_weight(a, far_q, 18, bank, w) == 0.0);

    // exact symmetry
    for (const cg::LiftedPoint& q : {b, c, cg::LiftedPoint{12, 14, 3, 0.8, 0.07}}) {
        const double pq = cg::connectivity_weight(a, q, 18, bank, w);
        const double qp = cg::connectivity_weight(q, a, 18, bank, w);
        CHECK(pq == qp);
    }
}

TEST_CASE("project2d: single path preserves mass; normalization peaks at 1") {
    const PathParams p = quick_params(12, 1, 0.0);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelGrid grid = cg::simulate_paths(0.03, dims, p);
    const cg::Image2D raw = cg::project2d(grid, false);
    double sum = 0.0;
    for (double v : raw.values) sum += v;
    CHECK(sum == doctest::Approx(grid.mass()).epsilon(1e-12));
    const cg::Image2D norm = cg::project2d(grid, true);
    double mx = 0.0;
    for (double v : norm.values) mx = std::max(mx, v);
    CHECK(mx == doctest::Approx(1.0));
}

TEST_CASE("project2d: kappa=0 slice is x-axis symmetric within MC tolerance") {
    const PathParams p = quick_params(40, 100000, 0.001, 21);
    const GridDims dims = cg::grid_dims_for(p, 18);
    const KernelGrid grid = cg::simulate_paths(0.0, dims, p);
    const cg::Image2D proj = cg::project2d(grid, false);
    double l1 = 0.0, mass = 0.0;
    for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x) {
            l1 += std::abs(proj.at(x, y) - proj.at(x, dims.ny - 1 - y));
            mass += proj.at(x, y);
        }
    CHECK(l1 < 0.05 * mass);
}
