#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <utility>
#include <vector>

#include "affinity.hpp"

namespace cg {

constexpr int kNoiseLabel = 0;

struct SpectralParams {
    int max_k = 20;            // largest candidate group count (n_c)
    int min_cluster_size = 0;  // 0 = auto: max(5, 0.01 * N)
    // A candidate K is accepted when its alignment is near-perfect,
    // J_K / N <= 1 + selection_tol, and every group of its partition is
    // weakly cut from the rest (normalized cut <= ncut_max). The largest
    // accepted K wins; no accepted candidate means the component is one
    // group. An elongated structure can always be fragmented at moderate
    // alignment cost, but fragment boundaries sever strong links, which the
    // cut test rejects.
    double selection_tol = 0.03;
    double ncut_max = 0.02;
    // Candidate group counts only reach as far as eigenvalues of the
    // normalized affinity stay above this floor; eigenvectors far from the
    // top of the spectrum carry no cluster structure.
    double eigenvalue_floor = 0.5;
    int max_sweeps = 200;
    double step = 0.1;
    double tol = 1e-8;      // convergence tolerance on the normalized cost
    bool use_argmin = false;  // plain argmin instead of the plateau rule
};

// Top eigenpairs of D^{-1/2} A D^{-1/2} restricted to points with positive
// degree; zero-degree points are listed separately and excluded downstream.
struct Spectrum {
    std::vector<std::size_t> active;    // indices into the affinity matrix
    std::vector<std::size_t> isolated;  // zero-degree points (pre-assigned noise)
    Eigen::VectorXd eigenvalues;        // descending
    Eigen::MatrixXd eigenvectors;       // n_active x m, column j pairs with eigenvalue j
};

Spectrum normalized_spectrum(const AffinityMatrix& affinity, int m);

// Gradient descent over Givens angles minimizing
// J(Z) = sum_ij Z_ij^2 / max_j|Z_ij|^2 with Z = V R. J >= N always, with
// equality exactly when every row is axis-aligned.
struct Alignment {
    double cost = 0.0;            // J
    Eigen::MatrixXd rotated;      // Z = V R at the best angles found
    std::vector<int> assignment;  // per row, argmax_j |Z_ij|
    bool converged = true;
};

Alignment alignment_cost(const Eigen::MatrixXd& V, const SpectralParams& params = {});

struct ClusterResult {
    int k = 0;
    double q_clust = 0.0;
    std::vector<int> labels;  // per input point: 1..k, or kNoiseLabel
    std::vector<std::size_t> noise;
    // (candidate K, raw J_K); empty when the affinity graph splits into
    // exact components, which are then clustered independently
    std::vector<std::pair<int, double>> costs;
    bool rotation_converged = true;
    std::size_t n_active = 0;
    double selected_cost = 0.0;  // raw J of the selected grouping
};

ClusterResult select_k_and_cluster(const AffinityMatrix& affinity,
                                   const SpectralParams& params = {});

}  // namespace cg
