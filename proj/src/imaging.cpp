#include "coingrade/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "coingrade/errors.hpp"

namespace coingrade {

int PreprocessConfig::resolved_kernel_radius() const {
  if (blur_kernel_radius > 0) return blur_kernel_radius;
  return std::max(1, static_cast<int>(std::ceil(3.0 * blur_sigma)));
}

void PreprocessConfig::validate() const {
  if (!(blur_sigma > 0.0)) throw ConfigError("blur_sigma must be > 0");
  if (resolved_kernel_radius() < 1) throw ConfigError("blur kernel radius must be >= 1");
  if (background_threshold < 0.0 || background_threshold > 1.0)
    throw ConfigError("background_threshold must lie in [0,1]");
  if (opening_radius < 0) throw ConfigError("opening_radius must be >= 0");
}

RasterF to_grayscale(const ImageRgb8& img) {
  RasterF out(img.width, img.height);
  const double k = 1.0 / 255.0;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgb8& p = img.at(x, y);
      out.at(x, y) = (0.299 * p.r + 0.587 * p.g + 0.114 * p.b) * k;
    }
  }
  return out;
}

static std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

RasterF gaussian_blur(const RasterF& gray, const PreprocessConfig& cfg) {
  cfg.validate();
  const int r = cfg.resolved_kernel_radius();
  const std::vector<double> k = gaussian_kernel(cfg.blur_sigma, r);
  RasterF tmp(gray.width, gray.height);
  RasterF out(gray.width, gray.height);

  // Horizontal pass.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * gray.at_clamped(x + i, y);
      tmp.at(x, y) = s;
    }
  }
  // Vertical pass.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      double s = 0.0;
      for (int j = -r; j <= r; ++j) s += k[j + r] * tmp.at_clamped(x, y + j);
      out.at(x, y) = s;
    }
  }
  return out;
}

Mask threshold_mask(const RasterF& gray, double threshold) {
  Mask m(gray.width, gray.height, 0);
  for (std::size_t i = 0; i < gray.data.size(); ++i)
    m.data[i] = gray.data[i] > threshold ? 1 : 0;
  return m;
}

// 1D squared Euclidean distance transform (lower envelope of parabolas).
static void edt_1d(const std::vector<double>& f, std::vector<double>& d,
                   std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) /
          (2.0 * q - 2.0 * v[k]);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = (double(q) - v[k]) * (double(q) - v[k]) + f[v[k]];
  }
}

// Squared distance from every pixel to the nearest pixel where `on` holds.
static RasterF squared_distance_to(const Mask& m, std::uint8_t on) {
  const int w = m.width, h = m.height;
  const double inf = 1e18;
  RasterF d(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d.at(x, y) = (m.at(x, y) == on) ? 0.0 : inf;

  // Columns, then rows.
#pragma omp parallel
  {
    std::vector<double> f(std::max(w, h)), out(std::max(w, h));
    std::vector<int> v(std::max(w, h));
    std::vector<double> z(std::max(w, h) + 1);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) {
      f.resize(h);
      out.resize(h);
      for (int y = 0; y < h; ++y) f[y] = d.at(x, y);
      edt_1d(f, out, v, z);
      for (int y = 0; y < h; ++y) d.at(x, y) = out[y];
    }
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) {
      f.resize(w);
      out.resize(w);
      for (int x = 0; x < w; ++x) f[x] = d.at(x, y);
      edt_1d(f, out, v, z);
      for (int x = 0; x < w; ++x) d.at(x, y) = out[x];
    }
  }
  return d;
}

// Opening with an exact disk structuring element via distance transforms:
// erosion keeps pixels farther than `radius` from any background pixel,
// dilation then restores pixels within `radius` of the eroded set.
Mask morphological_open(const Mask& m, int radius) {
  if (radius <= 0) return m;
  const double r2 = static_cast<double>(radius) * radius;
  // One ring of background padding so pixels outside the raster erode the
  // mask just like interior background does.
  Mask padded(m.width + 2, m.height + 2, 0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) padded.at(x + 1, y + 1) = m.at(x, y);
  RasterF d0 = squared_distance_to(padded, 0);
  Mask eroded(m.width, m.height, 0);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      eroded.at(x, y) = d0.at(x + 1, y + 1) > r2 ? 1 : 0;
  RasterF d1 = squared_distance_to(eroded, 1);
  Mask opened(m.width, m.height, 0);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    opened.data[i] = d1.data[i] <= r2 ? 1 : 0;
  return opened;
}

Mask largest_component(const Mask& m) {
  const int w = m.width, h = m.height;
  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  int best_label = -1;
  std::size_t best_size = 0;
  int next = 0;
  std::vector<std::size_t> stack;
  static const int dx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static const int dy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  for (std::size_t start = 0; start < m.data.size(); ++start) {
    if (m.data[start] == 0 || label[start] >= 0) continue;
    std::size_t size = 0;
    stack.assign(1, start);
    label[start] = next;
    while (!stack.empty()) {
      std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      int cx = static_cast<int>(cur % w), cy = static_cast<int>(cur / w);
      for (int d = 0; d < 8; ++d) {
        int nx = cx + dx[d], ny = cy + dy[d];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
        if (m.data[ni] != 0 && label[ni] < 0) {
          label[ni] = next;
          stack.push_back(ni);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_label = next;
    }
    ++next;
  }
  Mask out(w, h, 0);
  if (best_label >= 0)
    for (std::size_t i = 0; i < m.data.size(); ++i)
      out.data[i] = (label[i] == best_label) ? 1 : 0;
  return out;
}

CoinImage segment_coin(const ImageRgb8& raw, const PreprocessConfig& cfg) {
  cfg.validate();
  if (raw.width < 64 || raw.height < 64)
    throw DataError("coin image must be at least 64x64");
  RasterF gray = to_grayscale(raw);
  RasterF blurred = gaussian_blur(gray, cfg);
  Mask binary = threshold_mask(blurred, cfg.background_threshold);
  Mask opened = morphological_open(binary, cfg.opening_radius);
  Mask coin = largest_component(opened);

  std::size_t area = count_nonzero(coin);
  if (area < raw.pixels.size() / 20)
    throw NoCoinFoundError("no coin found: largest component covers < 5% of image");

  double sx = 0.0, sy = 0.0;
  for (int y = 0; y < coin.height; ++y)
    for (int x = 0; x < coin.width; ++x)
      if (coin.at(x, y)) {
        sx += x;
        sy += y;
      }
  const double cx = sx / double(area), cy = sy / double(area);
  double r2max = 0.0;
  for (int y = 0; y < coin.height; ++y)
    for (int x = 0; x < coin.width; ++x)
      if (coin.at(x, y)) {
        double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        r2max = std::max(r2max, d2);
      }

  CoinImage out;
  out.pixels = raw;
  out.mask = std::move(coin);
  out.center_x = cx;
  out.center_y = cy;
  out.radius = std::sqrt(r2max);
  return out;
}

GradientField sobel(const RasterF& gray, const Mask& mask) {
  if (mask.width != gray.width || mask.height != gray.height)
    throw ShapeMismatchError("sobel: raster/mask shape mismatch");

  GradientField f;
  f.gx = RasterF(gray.width, gray.height);
  f.gy = RasterF(gray.width, gray.height);
  f.g = RasterF(gray.width, gray.height);
  f.mask = mask;

  // Taps grouped as (positive column/row) - (negative column/row): the two
  // groups are identical expressions on constant input, so flat regions
  // come out exactly zero.
#pragma omp parallel for schedule(static)
  for (int y = 0; y < gray.height; ++y) {
    for (int x = 0; x < gray.width; ++x) {
      if (!mask.at(x, y)) {
        f.gx.at(x, y) = 0.0;
        f.gy.at(x, y) = 0.0;
        f.g.at(x, y) = 0.0;
        continue;
      }
      const double tl = gray.at_clamped(x - 1, y - 1);
      const double tc = gray.at_clamped(x, y - 1);
      const double tr = gray.at_clamped(x + 1, y - 1);
      const double ml = gray.at_clamped(x - 1, y);
      const double mr = gray.at_clamped(x + 1, y);
      const double bl = gray.at_clamped(x - 1, y + 1);
      const double bc = gray.at_clamped(x, y + 1);
      const double br = gray.at_clamped(x + 1, y + 1);
      const double sx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
      const double sy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
      f.gx.at(x, y) = sx;
      f.gy.at(x, y) = sy;
      f.g.at(x, y) = std::sqrt(sx * sx + sy * sy);
    }
  }
  return f;
}

int wedge_index_of(const WedgeSpec& spec, int x, int y) {
  const double dx = x - spec.center_x;
  const double dy = y - spec.center_y;
  if (dx == 0.0 && dy == 0.0) return 0;  // undefined angle: wedge 0
  double a = std::atan2(dy, dx) - spec.start_angle;
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  if (a >= two_pi) a = 0.0;
  int k = static_cast<int>(a / (two_pi / spec.n_slices));
  if (k >= spec.n_slices) k = spec.n_slices - 1;
  return k;
}

std::vector<Mask> wedge_masks(const WedgeSpec& spec, const Mask& mask) {
  if (spec.n_slices != 4 && spec.n_slices != 8)
    throw ConfigError("wedge n_slices must be 4 or 8");
  if (spec.center_x < 0 || spec.center_x >= mask.width || spec.center_y < 0 ||
      spec.center_y >= mask.height)
    throw DataError("wedge center outside raster");

  std::vector<Mask> out(spec.n_slices, Mask(mask.width, mask.height, 0));
#pragma omp parallel for schedule(static)
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      out[wedge_index_of(spec, x, y)].at(x, y) = 1;
    }
  }
  return out;
}

}  // namespace coingrade
