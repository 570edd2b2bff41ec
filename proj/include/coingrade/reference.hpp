#pragma once

#include <array>
#include <vector>

#include "coingrade/imaging.hpp"
#include "coingrade/raster.hpp"

// Plain serial implementations written directly from the definitions: full
// 2D convolutions, naive structuring-element sweeps, sort-based statistics.
// They are the oracles the optimized kernels are tested against and the
// baselines in the benchmark target. Keep them boring.
namespace coingrade::reference {

// Full (non-separable) 2D Gaussian kernel, normalized over the whole window,
// borders replicated.
RasterF gaussian_blur(const RasterF& gray, const PreprocessConfig& cfg);

// Taps accumulated in row-major kernel order, matching the optimized path
// bit for bit in double precision.
GradientField sobel(const RasterF& gray, const Mask& mask);

// Naive disk-structuring-element erosion/dilation.
Mask morphological_open(const Mask& m, int radius);

// min/max/mean/median of one plane restricted to a wedge, via an explicit
// pixel list and a full sort.
std::array<double, 4> plane_stats(const RasterF& plane, const Mask& wedge);

// 12 stats per wedge (gx, gy, g blocks), zeros for empty wedges.
std::vector<double> wedge_stats(const GradientField& field,
                                const std::vector<Mask>& wedges);

}  // namespace coingrade::reference
