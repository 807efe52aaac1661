#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

#include "common.hpp"

namespace cg {
namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Discretization discretize(const LiftedFeatureMap& patch, double kappa_step, double step_len) {
    require(!patch.points.empty(), "discretize: empty patch");
    require(kappa_step > 0.0, "discretize: kappa step must be positive");

    int min_x = patch.points[0].x, max_x = min_x;
    int min_y = patch.points[0].y, max_y = min_y;
    double min_k = patch.points[0].kappa, max_k = min_k;
    for (const LiftedPoint& p : patch.points) {
        min_x = std::min<int>(min_x, p.x);
        max_x = std::max<int>(max_x, p.x);
        min_y = std::min<int>(min_y, p.y);
        max_y = std::max<int>(max_y, p.y);
        min_k = std::min(min_k, p.kappa);
        max_k = std::max(max_k, p.kappa);
    }
    Discretization d;
    const int extent = std::max(max_x - min_x, max_y - min_y) + 1;
    d.steps = std::max(3, static_cast<int>(std::lround(extent / 3.0)));
    d.kappa_min = kappa_step * std::floor(min_k / kappa_step);
    d.kappa_max = kappa_step * std::ceil(max_k / kappa_step);
    PathParams sizing;
    sizing.steps = d.steps;
    sizing.step_len = step_len;
    d.dims = grid_dims_for(sizing, patch.n_theta);
    return d;
}

PipelineResult run_pipeline(const LiftedFeatureMap& patch,
                            std::shared_ptr<const KernelBank> cached_bank,
                            const PipelineParams& params) {
    require(!patch.points.empty(), "pipeline: empty patch");
    PipelineResult result;
    result.n_points = patch.points.size();

    auto t0 = std::chrono::steady_clock::now();
    result.disc = discretize(patch, params.kappa_step, params.paths.step_len);
    if (params.steps_override > 0) {
        result.disc.steps = params.steps_override;
        PathParams sizing = params.paths;
        sizing.steps = result.disc.steps;
        result.disc.dims = grid_dims_for(sizing, patch.n_theta);
    }
    result.t_disc = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    if (cached_bank) {
        require(!cached_bank->grids.empty(), "pipeline: cached bank is empty");
        result.bank = std::move(cached_bank);
    } else {
        PathParams path_params = params.paths;
        path_params.steps = result.disc.steps;
        result.bank = std::make_shared<KernelBank>(build_bank(
            result.disc.kappa_min, result.disc.kappa_max, params.kappa_step, result.disc.dims,
            path_params));
    }
    result.t_kernel = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const AffinityMatrix affinity = build_affinity(patch, *result.bank, params.weights);
    result.t_affinity = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.clusters = select_k_and_cluster(affinity, params.spectral);
    // comparing n_c candidate sizes is part of the method; report per candidate
    result.t_clust = seconds_since(t0) / static_cast<double>(params.spectral.max_k);

    const GridDims& dims = result.bank->dims;
    result.w_disc = static_cast<double>(dims.nx) * dims.ny * dims.n_theta;
    result.w_kernel = result.w_disc * result.bank->slices();
    result.w_affinity = static_cast<double>(result.n_points) * result.n_points;
    result.w_clust = result.w_affinity;
    return result;
}

std::string result_to_json(const PipelineResult& result) {
    nlohmann::json j;
    j["K"] = result.clusters.k;
    j["Q_clust"] = result.clusters.q_clust;
    j["labels"] = result.clusters.labels;
    j["noise"] = result.clusters.noise;
    nlohmann::json costs = nlohmann::json::object();
    for (const auto& [k, cost] : result.clusters.costs) costs[std::to_string(k)] = cost;
    j["costs"] = std::move(costs);
    j["timings"] = {{"t_disc", result.t_disc},
                    {"t_kernel", result.t_kernel},
                    {"t_affinity", result.t_affinity},
                    {"t_clust", result.t_clust}};
    return j.dump(2) + "\n";
}

}  // namespace cg
