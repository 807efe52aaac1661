#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "image.hpp"
#include "liftspace.hpp"

namespace cg {

struct PathParams {
    double step_len = 1.0;          // pixels per step
    int steps = 17;                 // states per path, start included
    std::uint64_t paths = 100000;   // Monte Carlo repetitions
    double sigma_kappa_diff = 0.001;  // std of the per-step curvature increment
    std::uint64_t seed = 1;
};

struct GridDims {
    int nx = 0;
    int ny = 0;
    int n_theta = 18;
};

// Default grid that contains every state of a straight path.
GridDims grid_dims_for(const PathParams& params, int n_theta);

// Each deposited state counts kDepositUnit integer units, split linearly
// between the two nearest orientation bins; integer accumulation keeps the
// histogram independent of the thread schedule.
constexpr std::uint64_t kDepositUnit = 65536;

// Passage histogram of the direction process started at (0, 0, theta=0) with
// initial curvature kappa0. A state deposits into its nearest (x, y) cell
// with the weight split across the two nearest theta bins (the lifted data
// the kernel is evaluated against has bin-quantized orientations, so the
// histogram must resolve sub-bin orientation mass). Cell value =
// passage weight / (paths * steps); mass + spill fraction is exactly 1.
struct KernelGrid {
    double kappa0 = 0.0;
    int nx = 0;
    int ny = 0;
    int n_theta = 0;
    std::vector<double> cells;       // x-fastest: [(t * ny + y) * nx + x]
    std::uint64_t deposits = 0;      // in kDepositUnit units
    std::uint64_t spilled = 0;       // in kDepositUnit units
    std::uint64_t total_states = 0;  // paths * steps * kDepositUnit

    double at(int ix, int iy, int it) const {
        return cells[(static_cast<std::size_t>(it) * ny + iy) * nx + ix];
    }
    double mass() const {
        return total_states ? static_cast<double>(deposits) / static_cast<double>(total_states) : 0.0;
    }
    double spill_fraction() const { return total_states ? 1.0 - mass() : 0.0; }
};

KernelGrid simulate_paths(double kappa0, const GridDims& dims, const PathParams& params);

namespace detail {
// Same simulation with every normal draw negated; with identical seeds the
// result is the exact (y, theta, kappa) mirror of the +kappa0 grid.
KernelGrid simulate_paths_mirrored(double kappa0, const GridDims& dims, const PathParams& params);
}  // namespace detail

// Family of kernel grids over a uniform curvature lattice.
struct KernelBank {
    double kappa_min = 0.0;
    double kappa_step = 0.05;
    GridDims dims;
    PathParams params;
    std::vector<KernelGrid> grids;

    int slices() const { return static_cast<int>(grids.size()); }
    double kappa_of(int slice) const { return kappa_min + slice * kappa_step; }
    // nearest lattice slice; exact midpoints resolve to the smaller kappa
    int nearest_slice(double kappa) const;
};

KernelBank build_bank(double kappa_min, double kappa_max, double kappa_step, const GridDims& dims,
                      const PathParams& params);

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// Gamma'_kappa((x,y,theta) -> (x',y',theta')): the pair is moved to
// kernel-relative coordinates (displacement rotated by -theta, orientation
// difference wrapped to the pi period) and the nearest-kappa grid is
// interpolated trilinearly. Zero outside the grid support.
double eval_gamma(const KernelBank& bank, const Pose& from, const Pose& to, double kappa);

struct KernelWeights {
    double sigma_kappa_exp = 1.0;
    double sigma_int = 0.275;
};

// The symmetrized 5D connectivity weight. Exactly symmetric in (p, q).
double connectivity_weight(const LiftedPoint& p, const LiftedPoint& q, int n_theta,
                           const KernelBank& bank, const KernelWeights& weights);

// Sum over orientations; optionally max-normalized for display.
Image2D project2d(const KernelGrid& grid, bool normalize = true);

// Bank container: magic "K5D1", little-endian header (version, nx, ny,
// n_theta, n_kappa, kappa_min, kappa_step, step_len, steps, paths,
// sigma_kappa_diff, seed), the grids as f64 x-fastest, trailing CRC32.
void save_bank(const KernelBank& bank, const std::string& path);
KernelBank load_bank(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t size);

}  // namespace cg
