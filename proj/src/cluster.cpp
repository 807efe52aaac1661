#include "cluster.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace cg {
namespace {

// Right-multiply R by the Givens rotation on column pair (i, j).
void apply_givens(Eigen::MatrixXd& r, int i, int j, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (int row = 0; row < r.rows(); ++row) {
        const double a = r(row, i), b = r(row, j);
        r(row, i) = c * a + s * b;
        r(row, j) = -s * a + c * b;
    }
}

// Left-multiply M by the Givens rotation (rows i and j).
void apply_givens_left(Eigen::MatrixXd& m, int i, int j, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    for (int col = 0; col < m.cols(); ++col) {
        const double a = m(i, col), b = m(j, col);
        m(i, col) = c * a - s * b;
        m(j, col) = s * a + c * b;
    }
}

Eigen::MatrixXd compose_rotation(const std::vector<std::pair<int, int>>& pairs,
                                 const std::vector<double>& angles, int k) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(k, k);
    for (std::size_t a = 0; a < pairs.size(); ++a)
        apply_givens(r, pairs[a].first, pairs[a].second, angles[a]);
    return r;
}

}  // namespace

Spectrum normalized_spectrum(const AffinityMatrix& affinity, int m) {
    const std::size_t n = affinity.n;
    require(m >= 1, "normalized_spectrum: need at least one eigenpair");

    Spectrum spec;
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double a = affinity.at(i, j);
            if (a < 0.0 || !std::isfinite(a)) fail_invalid("affinity must be finite and non-negative");
            d += a;
        }
        degree[i] = d;
        if (d > 0.0)
            spec.active.push_back(i);
        else
            spec.isolated.push_back(i);
    }
    const std::size_t na = spec.active.size();
    if (na == 0) return spec;

    Eigen::MatrixXd lap(na, na);
    for (std::size_t a = 0; a < na; ++a) {
        const double da = 1.0 / std::sqrt(degree[spec.active[a]]);
        for (std::size_t b = 0; b < na; ++b) {
            const double db = 1.0 / std::sqrt(degree[spec.active[b]]);
            lap(a, b) = affinity.at(spec.active[a], spec.active[b]) * da * db;
        }
    }

    const int keep = std::min<int>(m, static_cast<int>(na));
    const auto dense_solve = [&] {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
        if (solver.info() != Eigen::Success) fail_numeric("eigendecomposition failed");
        spec.eigenvalues.resize(keep);
        spec.eigenvectors.resize(na, keep);
        for (int j = 0; j < keep; ++j) {
            const int src = static_cast<int>(na) - 1 - j;  // solver sorts ascending
            spec.eigenvalues[j] = solver.eigenvalues()[src];
            spec.eigenvectors.col(j) = solver.eigenvectors().col(src);
        }
    };

    if (na <= 400) {
        dense_solve();
        return spec;
    }

    // Lanczos with full reorthogonalization for the top eigenpairs; the
    // spectrum of L lies in [-1, 1] and only the largest few matter. Falls
    // back to the dense solver when the Ritz residuals do not converge.
    const int dim = static_cast<int>(na);
    const int max_iters = std::min(dim, 60 + 16 * keep);
    Eigen::MatrixXd basis(dim, max_iters);
    Eigen::VectorXd alpha(max_iters), beta(max_iters);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = 1.0 + 0.01 * std::sin(0.7 * i + 0.3);
    v.normalize();

    int iters = 0;
    bool converged = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri_solver;
    for (int j = 0; j < max_iters; ++j) {
        basis.col(j) = v;
        Eigen::VectorXd w = lap * v;
        if (j > 0) w -= beta[j - 1] * basis.col(j - 1);
        alpha[j] = v.dot(w);
        w -= alpha[j] * v;
        // full reorthogonalization, twice
        for (int pass = 0; pass < 2; ++pass)
            w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        beta[j] = w.norm();
        iters = j + 1;

        const bool invariant = beta[j] < 1e-13;
        if (j + 1 >= 2 * keep && (invariant || (j + 1) % 10 == 0 || j + 1 == max_iters)) {
            Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(iters, iters);
            for (int i = 0; i < iters; ++i) {
                tri(i, i) = alpha[i];
                if (i + 1 < iters) tri(i, i + 1) = tri(i + 1, i) = beta[i];
            }
            tri_solver.compute(tri);
            bool all_tight = true;
            for (int r = 0; r < keep; ++r) {
                const double resid =
                    std::abs(beta[iters - 1] * tri_solver.eigenvectors()(iters - 1, iters - 1 - r));
                if (resid > 1e-10) {
                    all_tight = false;
                    break;
                }
            }
            if (all_tight || invariant) {
                converged = all_tight || iters >= keep;
                break;
            }
        }
        if (invariant) break;
        v = w / beta[j];
    }

    if (!converged || iters < keep) {
        dense_solve();
        return spec;
    }
    spec.eigenvalues.resize(keep);
    spec.eigenvectors.resize(na, keep);
    for (int r = 0; r < keep; ++r) {
        spec.eigenvalues[r] = tri_solver.eigenvalues()[iters - 1 - r];
        spec.eigenvectors.col(r) =
            basis.leftCols(iters) * tri_solver.eigenvectors().col(iters - 1 - r);
        spec.eigenvectors.col(r).normalize();
    }
    return spec;
}

namespace {

// d/dZ of J = sum_i (sum_j Z_ij^2) / m_i^2 with m_i = |Z_{i, argmax}|.
Eigen::MatrixXd cost_gradient_wrt_z(const Eigen::MatrixXd& z) {
    const int n = static_cast<int>(z.rows());
    Eigen::MatrixXd w = z;
    for (int i = 0; i < n; ++i) {
        int mc = 0;
        const double m = z.row(i).cwiseAbs().maxCoeff(&mc);
        if (m < 1e-150) {  // vacuous row: no mass in these eigenvectors
            w.row(i).setZero();
            continue;
        }
        const double s = z.row(i).squaredNorm();
        w.row(i) *= 2.0 / (m * m);
        w(i, mc) -= 2.0 * s / (m * m * m) * (z(i, mc) >= 0.0 ? 1.0 : -1.0);
    }
    return w;
}

double cost_of(const Eigen::MatrixXd& z) {
    double j = 0.0;
    for (int i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).cwiseAbs().maxCoeff();
        // rows without mass in the candidate eigenvectors count as aligned
        j += m < 1e-150 ? 1.0 : z.row(i).squaredNorm() / (m * m);
    }
    return j;
}

// Z <- Z * (S^T G(i,j,delta) S) as a rank-2 update; u, v are rows i, j of S.
void apply_conjugated_rotation(Eigen::MatrixXd& z, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& v, double delta) {
    const double c = std::cos(delta) - 1.0, s = std::sin(delta);
    const Eigen::VectorXd zu = z * u;
    const Eigen::VectorXd zv = z * v;
    z.noalias() += (c * zu + s * zv) * u.transpose();
    z.noalias() += (c * zv - s * zu) * v.transpose();
}

}  // namespace

Alignment alignment_cost(const Eigen::MatrixXd& v, const SpectralParams& params) {
    const int k = static_cast<int>(v.cols());
    const int n = static_cast<int>(v.rows());
    require(k >= 2, "alignment_cost needs at least two eigenvectors");
    require(n >= 1, "alignment_cost: empty eigenvector matrix");

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
    const std::size_t t = pairs.size();
    std::vector<double> angles(t, 0.0);

    Alignment out;
    out.converged = false;
    double prev_cost = cost_of(v) / n;

    for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
        // fresh products at sweep start to avoid rank-2 drift
        Eigen::MatrixXd r = compose_rotation(pairs, angles, k);
        Eigen::MatrixXd z_full = v * r;
        Eigen::MatrixXd z_left = v;  // V * G_1..G_{a-1}
        double cost = cost_of(z_full) / n;

        for (std::size_t a = 0; a < t; ++a) {
            const int i = pairs[a].first, j = pairs[a].second;
            // suffix S = G_{a+1}..G_T with the current angles
            Eigen::MatrixXd suffix = Eigen::MatrixXd::Identity(k, k);
            for (std::size_t b = t; b-- > a + 1;)
                apply_givens_left(suffix, pairs[b].first, pairs[b].second, angles[b]);
            const Eigen::VectorXd su = suffix.row(i).transpose();
            const Eigen::VectorXd sv = suffix.row(j).transpose();

            // dZ/dtheta_a = (Z_left dG) S: rank two in columns i and j
            const double ca = std::cos(angles[a]), sa = std::sin(angles[a]);
            const Eigen::VectorXd du = -sa * z_left.col(i) + ca * z_left.col(j);
            const Eigen::VectorXd dv = -ca * z_left.col(i) - sa * z_left.col(j);
            const Eigen::MatrixXd w = cost_gradient_wrt_z(z_full);
            double grad = (du.dot(w * su) + dv.dot(w * sv)) / n;

            // deterministic probe when the analytic gradient vanishes on a
            // symmetric saddle
            double step = params.step;
            double delta = -step * grad;
            if (std::abs(grad) < 1e-14) {
                Eigen::MatrixXd probe = z_full;
                apply_conjugated_rotation(probe, su, sv, params.step);
                const double up = cost_of(probe) / n;
                probe = z_full;
                apply_conjugated_rotation(probe, su, sv, -params.step);
                const double down = cost_of(probe) / n;
                if (std::min(up, down) >= cost) continue;
                delta = up < down ? params.step : -params.step;
            }
            for (int half = 0; half < 12; ++half) {
                Eigen::MatrixXd trial = z_full;
                apply_conjugated_rotation(trial, su, sv, delta);
                const double trial_cost = cost_of(trial) / n;
                if (trial_cost < cost) {
                    z_full = std::move(trial);
                    cost = trial_cost;
                    angles[a] += delta;
                    break;
                }
                delta *= 0.5;
            }
            apply_givens(z_left, i, j, angles[a]);
        }

        if (std::abs(prev_cost - cost) < params.tol) {
            out.converged = true;
            prev_cost = cost;
            break;
        }
        prev_cost = cost;
    }

    const Eigen::MatrixXd r = compose_rotation(pairs, angles, k);
    out.rotated = v * r;
    out.cost = cost_of(out.rotated);
    out.assignment.resize(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        out.rotated.row(i).cwiseAbs().maxCoeff(&best);
        out.assignment[i] = best;
    }
    return out;
}

namespace {

// Self-tuning selection on one connected component.
ClusterResult cluster_connected(const AffinityMatrix& affinity, const SpectralParams& params,
                                int min_size);

// Connected components of the positive-affinity graph over non-isolated
// points. The kernel has compact support, so exactly separated structures
// are common; they are independent groups by construction and the rotation
// criterion is run per component.
std::vector<std::vector<std::size_t>> positive_components(const AffinityMatrix& affinity) {
    const std::size_t n = affinity.n;
    std::vector<int> comp(n, -1);
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (comp[seed] >= 0) continue;
        bool isolated = true;
        for (std::size_t j = 0; j < n && isolated; ++j)
            if (affinity.at(seed, j) > 0.0) isolated = false;
        if (isolated) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        comp[seed] = id;
        stack.push_back(seed);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            out[id].push_back(i);
            for (std::size_t j = 0; j < n; ++j)
                if (affinity.at(i, j) > 0.0 && comp[j] < 0) {
                    comp[j] = id;
                    stack.push_back(j);
                }
        }
        std::sort(out[id].begin(), out[id].end());
    }
    return out;
}

}  // namespace

ClusterResult select_k_and_cluster(const AffinityMatrix& affinity, const SpectralParams& params) {
    require(params.max_k >= 2, "max_k must be at least 2");
    const std::size_t n = affinity.n;
    const int min_size = params.min_cluster_size > 0
                             ? params.min_cluster_size
                             : std::max<int>(5, static_cast<int>(0.01 * static_cast<double>(n)));

    const std::vector<std::vector<std::size_t>> components = positive_components(affinity);
    if (components.size() <= 1) return cluster_connected(affinity, params, min_size);

    ClusterResult result;
    result.labels.assign(n, kNoiseLabel);
    double sum_cost = 0.0;
    for (const std::vector<std::size_t>& comp : components) {
        AffinityMatrix sub;
        sub.n = comp.size();
        sub.points.resize(comp.size());
        sub.values.resize(comp.size() * comp.size());
        for (std::size_t a = 0; a < comp.size(); ++a)
            for (std::size_t b = 0; b < comp.size(); ++b)
                sub.at(a, b) = affinity.at(comp[a], comp[b]);
        const ClusterResult part = cluster_connected(sub, params, min_size);
        for (std::size_t a = 0; a < comp.size(); ++a) {
            const int label = part.labels[a];
            result.labels[comp[a]] = label == kNoiseLabel ? kNoiseLabel : label + result.k;
        }
        result.k += part.k;
        result.n_active += part.n_active;
        sum_cost += part.selected_cost;
        result.rotation_converged = result.rotation_converged && part.rotation_converged;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (result.labels[i] == kNoiseLabel) result.noise.push_back(i);
    result.selected_cost = sum_cost;
    result.q_clust =
        result.n_active
            ? std::clamp(2.0 - sum_cost / static_cast<double>(result.n_active), 0.0, 1.0)
            : 0.0;
    return result;
}

namespace {

ClusterResult cluster_connected(const AffinityMatrix& affinity, const SpectralParams& params,
                                int min_size) {
    const std::size_t n = affinity.n;
    ClusterResult result;
    result.labels.assign(n, kNoiseLabel);

    Spectrum spec = normalized_spectrum(affinity, params.max_k);
    const std::size_t na = spec.active.size();
    result.n_active = na;
    for (std::size_t idx : spec.isolated) result.noise.push_back(idx);

    std::vector<int> active_assign(na, 0);
    if (na == 0) {
        result.k = 0;
        result.q_clust = 0.0;
        result.selected_cost = 0.0;
        return result;
    }

    int k_hi = std::min<int>(params.max_k, static_cast<int>(na));
    while (k_hi >= 2 && spec.eigenvalues[k_hi - 1] < params.eigenvalue_floor) --k_hi;

    if (na >= 2 && k_hi >= 2) {
        std::vector<Alignment> aligns;
        double best_norm = std::numeric_limits<double>::infinity();
        for (int k = 2; k <= k_hi; ++k) {
            Alignment a = alignment_cost(spec.eigenvectors.leftCols(k), params);
            result.costs.emplace_back(k, a.cost);
            best_norm = std::min(best_norm, a.cost / static_cast<double>(na));
            aligns.push_back(std::move(a));
        }

        // degrees within this component, for the cut test
        std::vector<double> degree(na, 0.0);
        for (std::size_t a = 0; a < na; ++a)
            for (std::size_t b = 0; b < na; ++b)
                degree[a] += affinity.at(spec.active[a], spec.active[b]);
        auto weak_cuts = [&](const Alignment& align, int k) {
            std::vector<double> vol(k, 0.0), cut(k, 0.0);
            for (std::size_t a = 0; a < na; ++a) vol[align.assignment[a]] += degree[a];
            for (std::size_t a = 0; a < na; ++a)
                for (std::size_t b = 0; b < na; ++b)
                    if (align.assignment[a] != align.assignment[b])
                        cut[align.assignment[a]] += affinity.at(spec.active[a], spec.active[b]);
            for (int g = 0; g < k; ++g)
                if (vol[g] > 0.0 && cut[g] / vol[g] > params.ncut_max) return false;
            return true;
        };

        int chosen = 0;
        if (params.use_argmin) {
            for (int k = 2; k <= k_hi; ++k)
                if (aligns[k - 2].cost / static_cast<double>(na) == best_norm) chosen = k;
        } else {
            for (int k = 2; k <= k_hi; ++k)
                if (aligns[k - 2].cost / static_cast<double>(na) <= 1.0 + params.selection_tol &&
                    weak_cuts(aligns[k - 2], k))
                    chosen = k;
        }
        if (chosen >= 2) {
            const Alignment& best = aligns[chosen - 2];
            for (std::size_t i = 0; i < na; ++i) active_assign[i] = best.assignment[i] + 1;
            result.q_clust =
                std::clamp(2.0 - best.cost / static_cast<double>(na), 0.0, 1.0);
            result.rotation_converged = best.converged;
            result.selected_cost = best.cost;
        } else {
            // no split aligns near-perfectly: the active points form one
            // group, whose single-column alignment is trivially perfect
            std::fill(active_assign.begin(), active_assign.end(), 1);
            result.q_clust = 1.0;
            result.selected_cost = static_cast<double>(na);
        }
    } else {
        active_assign.assign(na, 1);
        result.q_clust = 1.0;
        result.selected_cost = static_cast<double>(na);
    }

    // remove small groups as noise, then renumber by first occurrence
    std::vector<std::size_t> group_size;
    for (int g : active_assign) {
        if (g > static_cast<int>(group_size.size())) group_size.resize(g, 0);
        ++group_size[g - 1];
    }
    std::vector<int> renumber(group_size.size(), kNoiseLabel);
    int next_label = 0;
    for (std::size_t i = 0; i < na; ++i) {
        const int g = active_assign[i] - 1;
        if (group_size[g] < static_cast<std::size_t>(min_size)) continue;
        if (renumber[g] == kNoiseLabel) renumber[g] = ++next_label;
    }
    for (std::size_t i = 0; i < na; ++i) {
        const int label = renumber[active_assign[i] - 1];
        result.labels[spec.active[i]] = label;
        if (label == kNoiseLabel) result.noise.push_back(spec.active[i]);
    }
    std::sort(result.noise.begin(), result.noise.end());
    result.k = next_label;
    return result;
}

}  // namespace

}  // namespace cg
