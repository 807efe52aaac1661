#pragma once

#include <string>
#include <vector>

#include "kernel.hpp"
#include "liftspace.hpp"

namespace cg {

// Dense symmetric nonnegative affinity over a lifted patch, zero diagonal.
// Each unordered pair is evaluated once, so A = A^T holds bitwise.
struct AffinityMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major n x n
    std::vector<LiftedPoint> points;

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

AffinityMatrix build_affinity(const LiftedFeatureMap& patch, const KernelBank& bank,
                              const KernelWeights& weights);

// Raw f64 row-major dump plus a JSON sidecar with the point table.
void dump_affinity(const AffinityMatrix& matrix, const std::string& bin_path,
                   const std::string& json_path);

}  // namespace cg
