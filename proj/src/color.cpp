#include "coingrade/color.hpp"

#include <algorithm>
#include <cmath>

namespace coingrade {

HsvTriple rgb_to_hsv(Rgb8 p) {
  const double r = p.r / 255.0, g = p.g / 255.0, b = p.b / 255.0;
  const double maxc = std::max({r, g, b});
  const double minc = std::min({r, g, b});
  const double delta = maxc - minc;

  HsvTriple out;
  out.v = maxc;
  out.s = maxc > 0.0 ? delta / maxc : 0.0;
  if (delta <= 0.0) {
    out.h = 0.0;
    return out;
  }
  double h;
  if (maxc == r)
    h = 60.0 * ((g - b) / delta);
  else if (maxc == g)
    h = 60.0 * (2.0 + (b - r) / delta);
  else
    h = 60.0 * (4.0 + (r - g) / delta);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

Rgb8 hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  s = std::clamp(s, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);

  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  auto to8 = [](double u) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(u, 0.0, 1.0) * 255.0));
  };
  return Rgb8{to8(r + m), to8(g + m), to8(b + m)};
}

}  // namespace coingrade
