#pragma once

#include "cluster.hpp"
#include "image.hpp"
#include "kernel.hpp"
#include "liftspace.hpp"

namespace cg {

// Orientation as hue over the pi period; background stays white.
Image2D render_orientation(const OrientationMap& orientation, const Mask& mask);

// Curvature at the dominant orientation on a symmetric diverging scale over
// [-|kappa|_max, +|kappa|_max] of the rendered pixels.
Image2D render_curvature(const VolumeMap& kappa, const OrientationMap& orientation,
                         const Mask& mask);

// One distinct color per cluster, gray for noise, white background.
Image2D render_clusters(const LiftedFeatureMap& lifted, const ClusterResult& clusters);

// Max-normalized grayscale projection of a kernel slice.
Image2D render_kernel(const KernelGrid& grid);

}  // namespace cg
