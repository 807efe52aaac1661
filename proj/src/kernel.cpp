#include "kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <thread>

#include "common.hpp"
#include "rng.hpp"

namespace cg {
namespace {

constexpr std::uint64_t kPathBlock = 8192;

void validate(const PathParams& p) {
    require(p.step_len > 0.0, "step length must be positive");
    require(p.steps >= 1, "path must have at least one state");
    require(p.paths >= 1, "path count must be positive");
    require(p.sigma_kappa_diff >= 0.0, "curvature diffusion must be non-negative");
}

// Linear split of a folded heading across its two nearest orientation bins.
// For even n_theta the arithmetic is symmetric under theta -> -theta, which
// the mirror equivariance of the simulator relies on.
struct ThetaSplit {
    int lo = 0;
    int hi = 0;
    std::uint64_t w_hi = 0;  // weight of the upper bin, in kDepositUnit units
};

inline ThetaSplit fold_theta(double theta, int n_theta, double inv_dtheta) {
    const double t = wrap_orientation(theta);
    double pos;  // fractional bin coordinate
    long shift;
    if ((n_theta & 1) == 0) {
        pos = t * inv_dtheta;  // in [-n/2, n/2)
        shift = n_theta / 2;
    } else {
        pos = (t + kPi / 2.0) * inv_dtheta;  // in [0, n)
        shift = 0;
    }
    const double base = std::floor(pos);
    const double frac = pos - base;
    ThetaSplit split;
    long lo = static_cast<long>(base) + shift;
    lo = ((lo % n_theta) + n_theta) % n_theta;
    split.lo = static_cast<int>(lo);
    split.hi = static_cast<int>((lo + 1) % n_theta);
    split.w_hi = static_cast<std::uint64_t>(round_away(frac * static_cast<double>(kDepositUnit)));
    return split;
}

KernelGrid simulate_impl(double kappa0, const GridDims& dims, const PathParams& params,
                         bool negate_noise) {
    validate(params);
    require(dims.nx >= 1 && dims.ny >= 1 && dims.n_theta >= 2, "bad kernel grid dims");
    require(dims.nx % 2 == 1 && dims.ny % 2 == 1, "kernel grid dims must be odd");

    const int nx = dims.nx, ny = dims.ny, nt = dims.n_theta;
    const int cx = nx / 2, cy = ny / 2;
    const double ds = params.step_len;
    const double sigma = params.sigma_kappa_diff;
    const double inv_dtheta = static_cast<double>(nt) / kPi;
    const std::size_t plane = static_cast<std::size_t>(nx) * ny;
    const std::size_t n_cells = plane * nt;

    const std::uint64_t n_blocks = (params.paths + kPathBlock - 1) / kPathBlock;
    unsigned n_threads = std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = static_cast<unsigned>(std::min<std::uint64_t>(n_threads, n_blocks));

    std::vector<std::vector<std::uint64_t>> partial(n_threads);
    std::vector<std::uint64_t> partial_spill(n_threads, 0);
    std::vector<std::thread> pool;
    const double noise_sign = negate_noise ? -1.0 : 1.0;

    auto run_block = [&](std::uint64_t block, std::vector<std::uint64_t>& counts,
                         std::uint64_t& spill) {
        Rng rng(substream_seed(params.seed, block));
        const std::uint64_t first = block * kPathBlock;
        const std::uint64_t last = std::min(first + kPathBlock, params.paths);
        for (std::uint64_t p = first; p < last; ++p) {
            double x = 0.0, y = 0.0, theta = 0.0, kappa = kappa0;
            for (int s = 0; s < params.steps; ++s) {
                if (s > 0) {
                    const double nx_pos = x + ds * std::cos(theta);
                    const double ny_pos = y + ds * std::sin(theta);
                    const double n_theta_val = theta + ds * kappa;
                    const double n_kappa =
                        sigma > 0.0 ? kappa + ds * noise_sign * sigma * rng.next_normal() : kappa;
                    x = nx_pos;
                    y = ny_pos;
                    theta = n_theta_val;
                    kappa = n_kappa;
                }
                const long ix = cx + round_away(x);
                const long iy = cy + round_away(y);
                if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) {
                    spill += kDepositUnit;
                    continue;
                }
                const ThetaSplit split = fold_theta(theta, nt, inv_dtheta);
                const std::size_t base = static_cast<std::size_t>(iy) * nx + ix;
                counts[static_cast<std::size_t>(split.lo) * plane + base] += kDepositUnit - split.w_hi;
                if (split.w_hi)
                    counts[static_cast<std::size_t>(split.hi) * plane + base] += split.w_hi;
            }
        }
    };

    // Blocks have fixed seeds, so the result does not depend on how they are
    // distributed over threads; integer merges commute.
    for (unsigned w = 0; w < n_threads; ++w) {
        partial[w].assign(n_cells, 0);
        pool.emplace_back([&, w] {
            for (std::uint64_t b = w; b < n_blocks; b += n_threads)
                run_block(b, partial[w], partial_spill[w]);
        });
    }
    for (auto& th : pool) th.join();

    KernelGrid grid;
    grid.kappa0 = kappa0;
    grid.nx = nx;
    grid.ny = ny;
    grid.n_theta = nt;
    grid.total_states =
        params.paths * static_cast<std::uint64_t>(params.steps) * kDepositUnit;
    grid.cells.assign(n_cells, 0.0);
    std::uint64_t total = 0, spilled = 0;
    std::vector<std::uint64_t> counts(n_cells, 0);
    for (unsigned w = 0; w < n_threads; ++w) {
        spilled += partial_spill[w];
        for (std::size_t i = 0; i < n_cells; ++i) counts[i] += partial[w][i];
    }
    const double inv_mass = 1.0 / static_cast<double>(grid.total_states);
    for (std::size_t i = 0; i < n_cells; ++i) {
        total += counts[i];
        grid.cells[i] = static_cast<double>(counts[i]) * inv_mass;
    }
    grid.deposits = total;
    grid.spilled = spilled;
    return grid;
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(buf, bits);
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;
    std::string path;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) fail_format("k5d truncated: " + path);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
};

}  // namespace

GridDims grid_dims_for(const PathParams& params, int n_theta) {
    const int reach = static_cast<int>(std::ceil(params.steps * params.step_len));
    GridDims dims;
    dims.nx = 2 * reach + 1;
    dims.ny = dims.nx;
    dims.n_theta = n_theta;
    return dims;
}

KernelGrid simulate_paths(double kappa0, const GridDims& dims, const PathParams& params) {
    return simulate_impl(kappa0, dims, params, false);
}

namespace detail {
KernelGrid simulate_paths_mirrored(double kappa0, const GridDims& dims, const PathParams& params) {
    return simulate_impl(kappa0, dims, params, true);
}
}  // namespace detail

int KernelBank::nearest_slice(double kappa) const {
    if (grids.size() <= 1) return 0;
    const double u = (kappa - kappa_min) / kappa_step;
    long idx = static_cast<long>(std::ceil(u - 0.5));  // exact ties take the smaller kappa
    idx = std::clamp<long>(idx, 0, static_cast<long>(grids.size()) - 1);
    return static_cast<int>(idx);
}

KernelBank build_bank(double kappa_min, double kappa_max, double kappa_step, const GridDims& dims,
                      const PathParams& params) {
    require(kappa_min <= kappa_max, "kappa_min must not exceed kappa_max");
    require(kappa_step > 0.0, "kappa_step must be positive");
    validate(params);

    KernelBank bank;
    bank.kappa_min = kappa_min;
    bank.kappa_step = kappa_step;
    bank.dims = dims;
    bank.params = params;
    const int n_slices =
        1 + static_cast<int>(std::floor((kappa_max - kappa_min) / kappa_step + 0.5));
    bank.grids.reserve(n_slices);
    for (int s = 0; s < n_slices; ++s) {
        PathParams slice_params = params;
        slice_params.seed = substream_seed(params.seed, static_cast<std::uint64_t>(s));
        bank.grids.push_back(simulate_paths(kappa_min + s * kappa_step, dims, slice_params));
    }
    return bank;
}

double eval_gamma(const KernelBank& bank, const Pose& from, const Pose& to, double kappa) {
    require(!bank.grids.empty(), "empty kernel bank");
    const KernelGrid& grid = bank.grids[bank.nearest_slice(kappa)];

    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    const double c = std::cos(from.theta), s = std::sin(from.theta);
    const double rx = c * dx + s * dy;
    const double ry = -s * dx + c * dy;
    const double dtheta = wrap_orientation(to.theta - from.theta);

    const double gx = grid.nx / 2 + rx;
    const double gy = grid.ny / 2 + ry;
    const double gt = (dtheta + kPi / 2.0) * grid.n_theta / kPi;

    const int x0 = static_cast<int>(std::floor(gx));
    const int y0 = static_cast<int>(std::floor(gy));
    const int t0 = static_cast<int>(std::floor(gt));
    const double fx = gx - x0, fy = gy - y0, ft = gt - t0;

    double value = 0.0;
    for (int di = 0; di < 2; ++di)
        for (int dj = 0; dj < 2; ++dj)
            for (int dk = 0; dk < 2; ++dk) {
                const int ix = x0 + di, iy = y0 + dj;
                if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) continue;
                int it = (t0 + dk) % grid.n_theta;
                if (it < 0) it += grid.n_theta;
                const double w = (di ? fx : 1.0 - fx) * (dj ? fy : 1.0 - fy) * (dk ? ft : 1.0 - ft);
                if (w != 0.0) value += w * grid.at(ix, iy, it);
            }
    return value;
}

double connectivity_weight(const LiftedPoint& p, const LiftedPoint& q, int n_theta,
                           const KernelBank& bank, const KernelWeights& weights) {
    require(weights.sigma_kappa_exp > 0.0 && weights.sigma_int > 0.0,
            "kernel weight scales must be positive");
    const double dk = p.kappa - q.kappa;
    const double df = p.f - q.f;
    const double factor = std::exp(-dk * dk / (weights.sigma_kappa_exp * weights.sigma_kappa_exp)) *
                          std::exp(-df * df / (weights.sigma_int * weights.sigma_int));
    const Pose pp{static_cast<double>(p.x), static_cast<double>(p.y),
                  orientation_bin_value(p.theta_bin, n_theta)};
    const Pose qq{static_cast<double>(q.x), static_cast<double>(q.y),
                  orientation_bin_value(q.theta_bin, n_theta)};
    const double forward = eval_gamma(bank, pp, qq, p.kappa);
    const double backward = eval_gamma(bank, qq, pp, q.kappa);
    return factor * 0.5 * (forward + backward);
}

Image2D project2d(const KernelGrid& grid, bool normalize) {
    Image2D img(grid.nx, grid.ny, 1);
    for (int t = 0; t < grid.n_theta; ++t)
        for (int y = 0; y < grid.ny; ++y)
            for (int x = 0; x < grid.nx; ++x) img.at(x, y) += grid.at(x, y, t);
    if (normalize) {
        const double mx = *std::max_element(img.values.begin(), img.values.end());
        if (mx > 0.0)
            for (double& v : img.values) v /= mx;
    }
    return img;
}

std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xffffffffu;
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

void save_bank(const KernelBank& bank, const std::string& path) {
    std::string buf;
    buf += "K5D1";
    put_u32(buf, 1u);  // version
    put_u32(buf, static_cast<std::uint32_t>(bank.dims.nx));
    put_u32(buf, static_cast<std::uint32_t>(bank.dims.ny));
    put_u32(buf, static_cast<std::uint32_t>(bank.dims.n_theta));
    put_u32(buf, static_cast<std::uint32_t>(bank.slices()));
    put_f64(buf, bank.kappa_min);
    put_f64(buf, bank.kappa_step);
    put_f64(buf, bank.params.step_len);
    put_u32(buf, static_cast<std::uint32_t>(bank.params.steps));
    put_u64(buf, bank.params.paths);
    put_f64(buf, bank.params.sigma_kappa_diff);
    put_u64(buf, bank.params.seed);
    for (const KernelGrid& grid : bank.grids)
        for (double v : grid.cells) put_f64(buf, v);
    const std::uint32_t crc = crc32(reinterpret_cast<const unsigned char*>(buf.data()), buf.size());
    put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write bank file: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) fail_io("short write to " + path);
}

KernelBank load_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open bank file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 8 || data.compare(0, 4, "K5D1") != 0)
        fail_format("not a k5d file: " + path);
    const std::uint32_t stored_crc =
        crc32(reinterpret_cast<const unsigned char*>(data.data()), data.size() - 4);
    Reader tail{reinterpret_cast<const unsigned char*>(data.data()) + data.size() - 4,
                reinterpret_cast<const unsigned char*>(data.data()) + data.size(), path};
    if (tail.u32() != stored_crc) fail_format("k5d checksum mismatch: " + path);

    Reader r{reinterpret_cast<const unsigned char*>(data.data()) + 4,
             reinterpret_cast<const unsigned char*>(data.data()) + data.size() - 4, path};
    const std::uint32_t version = r.u32();
    if (version != 1) fail_format("unsupported k5d version: " + path);

    KernelBank bank;
    bank.dims.nx = static_cast<int>(r.u32());
    bank.dims.ny = static_cast<int>(r.u32());
    bank.dims.n_theta = static_cast<int>(r.u32());
    const std::uint32_t n_slices = r.u32();
    bank.kappa_min = r.f64();
    bank.kappa_step = r.f64();
    bank.params.step_len = r.f64();
    bank.params.steps = static_cast<int>(r.u32());
    bank.params.paths = r.u64();
    bank.params.sigma_kappa_diff = r.f64();
    bank.params.seed = r.u64();
    if (bank.dims.nx < 1 || bank.dims.ny < 1 || bank.dims.n_theta < 2 || bank.kappa_step <= 0.0)
        fail_format("k5d header out of range: " + path);

    const std::size_t n_cells =
        static_cast<std::size_t>(bank.dims.nx) * bank.dims.ny * bank.dims.n_theta;
    bank.grids.resize(n_slices);
    for (std::uint32_t s = 0; s < n_slices; ++s) {
        KernelGrid& grid = bank.grids[s];
        grid.kappa0 = bank.kappa_of(static_cast<int>(s));
        grid.nx = bank.dims.nx;
        grid.ny = bank.dims.ny;
        grid.n_theta = bank.dims.n_theta;
        grid.total_states =
            bank.params.paths * static_cast<std::uint64_t>(bank.params.steps) * kDepositUnit;
        grid.cells.resize(n_cells);
        double mass = 0.0;
        for (std::size_t i = 0; i < n_cells; ++i) {
            grid.cells[i] = r.f64();
            mass += grid.cells[i];
        }
        // cell values are integer counts over total_states, so the rounded
        // sum recovers the exact deposit count
        grid.deposits = static_cast<std::uint64_t>(
            std::llround(mass * static_cast<double>(grid.total_states)));
        grid.spilled = grid.total_states - std::min(grid.total_states, grid.deposits);
    }
    return bank;
}

}  // namespace cg
