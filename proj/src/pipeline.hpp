#pragma once

#include <memory>
#include <string>

#include "affinity.hpp"
#include "cluster.hpp"
#include "kernel.hpp"
#include "liftspace.hpp"

namespace cg {

struct PipelineParams {
    KernelWeights weights;
    SpectralParams spectral;
    PathParams paths;          // used when no cached bank is supplied
    double kappa_step = 0.05;  // lattice step for in-run bank builds
    int steps_override = 0;    // > 0 replaces the extent/3 step-count rule
};

// Kernel lattice and grid sizing derived from the data, following the rule
// that the step count is one third of the patch extent and the curvature
// lattice spans the patch's curvature range.
struct Discretization {
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    int steps = 0;
    GridDims dims;
};

Discretization discretize(const LiftedFeatureMap& patch, double kappa_step, double step_len);

struct PipelineResult {
    ClusterResult clusters;
    std::shared_ptr<const KernelBank> bank;
    Discretization disc;
    std::size_t n_points = 0;
    // stage seconds; t_clust is already divided by the candidate count n_c
    double t_disc = 0.0, t_kernel = 0.0, t_affinity = 0.0, t_clust = 0.0;
    // Table-II stage weights
    double w_disc = 1.0, w_kernel = 1.0, w_affinity = 1.0, w_clust = 1.0;
};

// lift -> (cached or in-run) kernel -> affinity -> clustering, timed per stage.
PipelineResult run_pipeline(const LiftedFeatureMap& patch,
                            std::shared_ptr<const KernelBank> cached_bank,
                            const PipelineParams& params);

// Result JSON per the cluster interface:
// {"K", "Q_clust", "labels", "noise", "costs", "timings"}.
std::string result_to_json(const PipelineResult& result);

}  // namespace cg
