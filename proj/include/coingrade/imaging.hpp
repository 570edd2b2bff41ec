#pragma once

#include <vector>

#include "coingrade/raster.hpp"

namespace coingrade {

struct PreprocessConfig {
  double blur_sigma = 1.5;
  int blur_kernel_radius = 0;  // 0 = derive as ceil(3 * sigma)
  double background_threshold = 0.2;
  int opening_radius = 5;  // disk radius for prong removal

  int resolved_kernel_radius() const;
  void validate() const;
};

// A segmented coin photograph: the original pixels, the coin-pixel mask,
// and the detected center/radius in pixel coordinates.
struct CoinImage {
  ImageRgb8 pixels;
  Mask mask;
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
};

// Per-pixel Sobel responses. All planes are zero wherever mask is zero and
// g = sqrt(gx^2 + gy^2) on the mask.
struct GradientField {
  RasterF gx, gy, g;
  Mask mask;
};

// Angular partition of the coin disk. Slice k spans
// [start_angle + k*2pi/n, start_angle + (k+1)*2pi/n), angles measured by
// atan2 with y pointing down (raster convention).
struct WedgeSpec {
  int n_slices = 8;  // 4 or 8
  double center_x = 0.0;
  double center_y = 0.0;
  double radius = 0.0;
  double start_angle = 0.0;
};

// Rec. 601 luma scaled to [0,1].
RasterF to_grayscale(const ImageRgb8& img);

// Separable Gaussian, kernel normalized to unit sum, borders replicated.
RasterF gaussian_blur(const RasterF& gray, const PreprocessConfig& cfg);

// Thresholds the blurred luma, opens with a disk to drop holder prongs,
// keeps the largest connected component. Throws NoCoinFoundError when that
// component covers less than 5% of the image.
CoinImage segment_coin(const ImageRgb8& raw, const PreprocessConfig& cfg);

// 3x3 Sobel taps, edge replication, zeroed off the mask.
GradientField sobel(const RasterF& gray, const Mask& mask);

// Binary wedge masks partitioning `mask`. The center pixel (undefined
// angle) goes to wedge 0.
std::vector<Mask> wedge_masks(const WedgeSpec& spec, const Mask& mask);

// Wedge index for one pixel; exposed for tests.
int wedge_index_of(const WedgeSpec& spec, int x, int y);

// Building blocks of segment_coin, reused by tests and the synthesizer.
Mask threshold_mask(const RasterF& gray, double threshold);
Mask morphological_open(const Mask& m, int radius);
Mask largest_component(const Mask& m);

}  // namespace coingrade
