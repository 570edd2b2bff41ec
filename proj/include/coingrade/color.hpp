#pragma once

#include "coingrade/raster.hpp"

namespace coingrade {

// Hue in degrees [0, 360); saturation and value in [0, 1].
struct HsvTriple {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

// Standard hexcone conversions. Achromatic pixels get hue 0.
HsvTriple rgb_to_hsv(Rgb8 p);
Rgb8 hsv_to_rgb(double h, double s, double v);

}  // namespace coingrade
