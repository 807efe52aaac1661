#pragma once

#include <string>

#include "liftspace.hpp"

namespace cg {

// Lifted feature map container: magic "L5D1", little-endian, u32 header
// fields (width, height, n_theta, point count), then per-point records
// x:u16, y:u16, theta_bin:u16, f:f64, kappa:f64.
void write_l5d(const LiftedFeatureMap& map, const std::string& path);
LiftedFeatureMap read_l5d(const std::string& path);

// Human-readable mirror of the same content, for debugging.
void write_l5d_json(const LiftedFeatureMap& map, const std::string& path);

}  // namespace cg
