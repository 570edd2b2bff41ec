#include "coingrade/reference.hpp"

#include <algorithm>
#include <cmath>

namespace coingrade::reference {

RasterF gaussian_blur(const RasterF& gray, const PreprocessConfig& cfg) {
  const int r = cfg.resolved_kernel_radius();
  const int n = 2 * r + 1;
  std::vector<double> kernel(static_cast<std::size_t>(n) * n);
  double sum = 0.0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i) {
      double w = std::exp(-(double(i) * i + double(j) * j) /
                          (2.0 * cfg.blur_sigma * cfg.blur_sigma));
      kernel[(j + r) * n + (i + r)] = w;
      sum += w;
    }
  for (double& w : kernel) w /= sum;

  RasterF out(gray.width, gray.height);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j)
        for (int i = -r; i <= r; ++i)
          s += kernel[(j + r) * n + (i + r)] * gray.at_clamped(x + i, y + j);
      out.at(x, y) = s;
    }
  return out;
}

GradientField sobel(const RasterF& gray, const Mask& mask) {
  static const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  static const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

  // Explicit replicate-padded copy, then a plain tap loop per kernel with
  // the positive and negative taps accumulated separately (row-major order)
  // before the final subtraction.
  RasterF padded(gray.width + 2, gray.height + 2);
  for (int y = -1; y <= gray.height; ++y)
    for (int x = -1; x <= gray.width; ++x)
      padded.at(x + 1, y + 1) = gray.at_clamped(x, y);

  GradientField f;
  f.gx = RasterF(gray.width, gray.height);
  f.gy = RasterF(gray.width, gray.height);
  f.g = RasterF(gray.width, gray.height);
  f.mask = mask;
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      if (!mask.at(x, y)) continue;
      double pos_x = 0.0, neg_x = 0.0, pos_y = 0.0, neg_y = 0.0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          const double v = padded.at(x + i + 1, y + j + 1);
          const double wx = kx[j + 1][i + 1];
          const double wy = ky[j + 1][i + 1];
          if (wx > 0) pos_x += wx * v;
          if (wx < 0) neg_x += -wx * v;
          if (wy > 0) pos_y += wy * v;
          if (wy < 0) neg_y += -wy * v;
        }
      const double sx = pos_x - neg_x;
      const double sy = pos_y - neg_y;
      f.gx.at(x, y) = sx;
      f.gy.at(x, y) = sy;
      f.g.at(x, y) = std::sqrt(sx * sx + sy * sy);
    }
  return f;
}

Mask morphological_open(const Mask& m, int radius) {
  if (radius <= 0) return m;
  std::vector<std::pair<int, int>> se;
  for (int j = -radius; j <= radius; ++j)
    for (int i = -radius; i <= radius; ++i)
      if (i * i + j * j <= radius * radius) se.emplace_back(i, j);

  auto inside = [&](int x, int y) {
    return x >= 0 && x < m.width && y >= 0 && y < m.height;
  };
  Mask eroded(m.width, m.height, 0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool all = true;
      for (auto [i, j] : se) {
        int nx = x + i, ny = y + j;
        if (!inside(nx, ny) || !m.at(nx, ny)) {
          all = false;
          break;
        }
      }
      eroded.at(x, y) = all ? 1 : 0;
    }
  Mask dilated(m.width, m.height, 0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      bool any = false;
      for (auto [i, j] : se) {
        int nx = x + i, ny = y + j;
        if (inside(nx, ny) && eroded.at(nx, ny)) {
          any = true;
          break;
        }
      }
      dilated.at(x, y) = any ? 1 : 0;
    }
  return dilated;
}

std::array<double, 4> plane_stats(const RasterF& plane, const Mask& wedge) {
  std::vector<double> vals;
  for (int y = 0; y < plane.height; ++y)
    for (int x = 0; x < plane.width; ++x)
      if (wedge.at(x, y)) vals.push_back(plane.at(x, y));
  if (vals.empty()) return {0.0, 0.0, 0.0, 0.0};
  std::sort(vals.begin(), vals.end());
  double sum = 0.0;
  for (double v : vals) sum += v;
  const std::size_t n = vals.size();
  double median = (n % 2 == 1) ? vals[n / 2]
                               : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  return {vals.front(), vals.back(), sum / double(n), median};
}

std::vector<double> wedge_stats(const GradientField& field,
                                const std::vector<Mask>& wedges) {
  std::vector<double> out;
  out.reserve(wedges.size() * 12);
  for (const Mask& w : wedges) {
    for (const RasterF* plane : {&field.gx, &field.gy, &field.g}) {
      auto s = plane_stats(*plane, w);
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

}  // namespace coingrade::reference
