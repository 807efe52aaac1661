#include "affinity.hpp"

#include <fstream>

#include <json.hpp>

#include "common.hpp"

namespace cg {

AffinityMatrix build_affinity(const LiftedFeatureMap& patch, const KernelBank& bank,
                              const KernelWeights& weights) {
    require(!patch.points.empty(), "build_affinity: empty patch");
    require(!bank.grids.empty(), "build_affinity: empty kernel bank");

    AffinityMatrix m;
    m.n = patch.points.size();
    m.points = patch.points;
    m.values.assign(m.n * m.n, 0.0);

    // rows are independent; each unordered pair is written to both triangles
    parallel_for(0, static_cast<std::int64_t>(m.n), [&](std::int64_t i) {
        for (std::size_t j = static_cast<std::size_t>(i) + 1; j < m.n; ++j) {
            const double w =
                connectivity_weight(patch.points[i], patch.points[j], patch.n_theta, bank, weights);
            m.at(i, j) = w;
            m.at(j, i) = w;
        }
    });
    return m;
}

void dump_affinity(const AffinityMatrix& matrix, const std::string& bin_path,
                   const std::string& json_path) {
    {
        std::ofstream out(bin_path, std::ios::binary);
        if (!out) fail_io("cannot write affinity dump: " + bin_path);
        out.write(reinterpret_cast<const char*>(matrix.values.data()),
                  static_cast<std::streamsize>(matrix.values.size() * sizeof(double)));
        if (!out) fail_io("short write to " + bin_path);
    }
    nlohmann::json j;
    j["n"] = matrix.n;
    nlohmann::json pts = nlohmann::json::array();
    for (const LiftedPoint& p : matrix.points)
        pts.push_back({p.x, p.y, p.theta_bin, p.f, p.kappa});
    j["points"] = std::move(pts);
    std::ofstream out(json_path, std::ios::binary);
    if (!out) fail_io("cannot write affinity sidecar: " + json_path);
    out << j.dump(2) << "\n";
}

}  // namespace cg
