#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace coingrade {

// Row-major 2D array. (0,0) is the top-left pixel, y grows downward.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }

  // Edge-replicated access for border handling in convolutions.
  const T& at_clamped(int x, int y) const {
    if (x < 0) x = 0;
    if (x >= width) x = width - 1;
    if (y < 0) y = 0;
    if (y >= height) y = height - 1;
    return at(x, y);
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Raster& o) const {
    return width == o.width && height == o.height;
  }
};

using RasterF = Raster<double>;
using Mask = Raster<std::uint8_t>;  // 0 or 1

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct ImageRgb8 {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> pixels;  // row-major

  ImageRgb8() = default;
  ImageRgb8(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

  Rgb8& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb8& at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

inline std::size_t count_nonzero(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.data) n += (v != 0);
  return n;
}

}  // namespace coingrade
