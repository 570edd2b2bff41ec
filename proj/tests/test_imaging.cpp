#include <doctest.h>

#include <cmath>
#include <vector>

#include "coingrade/errors.hpp"
#include "coingrade/imaging.hpp"
#include "coingrade/reference.hpp"
#include "coingrade/rng.hpp"

using namespace coingrade;

namespace {

RasterF random_raster(Rng& rng, int w, int h) {
  RasterF r(w, h);
  for (double& v : r.data) v = rng.uniform();
  return r;
}

ImageRgb8 disk_image(int size, double cx, double cy, double radius,
                     Rgb8 fg = {230, 190, 80}, Rgb8 bg = {10, 10, 10}) {
  ImageRgb8 img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      img.at(x, y) =
          ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) ? fg : bg;
  return img;
}

Mask disk_mask(int size, double cx, double cy, double radius) {
  Mask m(size, size, 0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
        m.at(x, y) = 1;
  return m;
}

}  // namespace

TEST_CASE("grayscale: luma weights") {
  ImageRgb8 img(2, 2);
  img.at(0, 0) = {255, 255, 255};
  img.at(1, 0) = {0, 0, 0};
  img.at(0, 1) = {255, 0, 0};
  img.at(1, 1) = {0, 255, 0};
  RasterF g = to_grayscale(img);
  CHECK(g.at(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.at(1, 0) == doctest::Approx(0.0));
  CHECK(g.at(0, 1) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(g.at(1, 1) == doctest::Approx(0.587).epsilon(1e-12));
}

TEST_CASE("gaussian blur: constant raster unchanged") {
  PreprocessConfig cfg;
  RasterF r(17, 9, 0.37);
  RasterF out = gaussian_blur(r, cfg);
  for (double v : out.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("gaussian blur: impulse center matches normalized 2D kernel") {
  PreprocessConfig cfg;  // sigma 1.5, radius 5
  const int r = cfg.resolved_kernel_radius();
  const int size = 4 * r + 1;
  RasterF impulse(size, size, 0.0);
  impulse.at(size / 2, size / 2) = 1.0;
  RasterF out = gaussian_blur(impulse, cfg);

  // Brute-force normalized 2D kernel center weight.
  double total = 0.0;
  for (int j = -r; j <= r; ++j)
    for (int i = -r; i <= r; ++i)
      total += std::exp(-(i * i + j * j) / (2.0 * cfg.blur_sigma * cfg.blur_sigma));
  const double center_weight = 1.0 / total;
  CHECK(out.at(size / 2, size / 2) ==
        doctest::Approx(center_weight).epsilon(1e-12));
}

TEST_CASE("gaussian blur: global mean preserved for constant borders") {
  PreprocessConfig cfg;
  const int r = cfg.resolved_kernel_radius();
  const int size = 40;
  Rng rng(3);
  RasterF in(size, size, 0.5);
  for (int y = 2 * r + 1; y < size - 2 * r - 1; ++y)
    for (int x = 2 * r + 1; x < size - 2 * r - 1; ++x)
      in.at(x, y) = rng.uniform();
  RasterF out = gaussian_blur(in, cfg);
  double min = 0, mout = 0;
  for (double v : in.data) min += v;
  for (double v : out.data) mout += v;
  CHECK(mout / out.size() == doctest::Approx(min / in.size()).epsilon(1e-6));
}

TEST_CASE("gaussian blur: separable matches full 2D reference") {
  PreprocessConfig cfg;
  Rng rng(11);
  RasterF in = random_raster(rng, 23, 17);
  RasterF a = gaussian_blur(in, cfg);
  RasterF b = reference::gaussian_blur(in, cfg);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    CHECK(a.data[i] == doctest::Approx(b.data[i]).epsilon(1e-12));
}

TEST_CASE("sobel: constant raster gives zero gradients") {
  RasterF r(12, 12, 0.8);
  Mask m(12, 12, 1);
  GradientField f = sobel(r, m);
  for (double v : f.gx.data) CHECK(v == 0.0);
  for (double v : f.gy.data) CHECK(v == 0.0);
  for (double v : f.g.data) CHECK(v == 0.0);
}

TEST_CASE("sobel: vertical step responds with gx=4") {
  // Columns 0..3 hold 0,0,1,1; the pixel at x=1 sees left column 0 and
  // right column 1.
  RasterF r(4, 5, 0.0);
  for (int y = 0; y < 5; ++y) {
    r.at(2, y) = 1.0;
    r.at(3, y) = 1.0;
  }
  Mask m(4, 5, 1);
  GradientField f = sobel(r, m);
  CHECK(f.gx.at(1, 2) == doctest::Approx(4.0));
  CHECK(f.gy.at(1, 2) == doctest::Approx(0.0));
  CHECK(f.g.at(1, 2) == doctest::Approx(4.0));
}

TEST_CASE("sobel: bit-for-bit equal to brute-force oracle on 100 random rasters") {
  Rng rng(42);
  for (int t = 0; t < 100; ++t) {
    int w = 8 + int(rng.index(25));
    int h = 8 + int(rng.index(25));
    RasterF in = random_raster(rng, w, h);
    Mask m(w, h, 1);
    GradientField a = sobel(in, m);
    GradientField b = reference::sobel(in, m);
    for (std::size_t i = 0; i < a.gx.data.size(); ++i) {
      REQUIRE(a.gx.data[i] == b.gx.data[i]);
      REQUIRE(a.gy.data[i] == b.gy.data[i]);
      REQUIRE(a.g.data[i] == b.g.data[i]);
    }
  }
}

TEST_CASE("sobel: masked-out pixels are zero, magnitude consistent on mask") {
  Rng rng(9);
  RasterF in = random_raster(rng, 20, 20);
  Mask m = disk_mask(20, 10, 10, 7);
  GradientField f = sobel(in, m);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      if (!m.at(x, y)) {
        CHECK(f.gx.at(x, y) == 0.0);
        CHECK(f.gy.at(x, y) == 0.0);
        CHECK(f.g.at(x, y) == 0.0);
      } else {
        double gx = f.gx.at(x, y), gy = f.gy.at(x, y), g = f.g.at(x, y);
        double expected = std::sqrt(gx * gx + gy * gy);
        if (expected > 0)
          CHECK(std::fabs(g - expected) / expected < 1e-9);
        else
          CHECK(g == 0.0);
      }
    }
}

TEST_CASE("segment_coin: synthetic disk recovered") {
  PreprocessConfig cfg;
  ImageRgb8 img = disk_image(256, 128.0, 128.0, 100.0);
  CoinImage coin = segment_coin(img, cfg);
  CHECK(std::fabs(coin.center_x - 128.0) <= 1.0);
  CHECK(std::fabs(coin.center_y - 128.0) <= 1.0);
  CHECK(std::fabs(coin.radius - 100.0) <= 2.0);
  // Mask should cover most of the ideal disk.
  Mask ideal = disk_mask(256, 128, 128, 100);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < ideal.data.size(); ++i) {
    inter += ideal.data[i] && coin.mask.data[i];
    uni += ideal.data[i] || coin.mask.data[i];
  }
  CHECK(double(inter) / double(uni) > 0.97);
}

TEST_CASE("segment_coin: all-black image raises NoCoinFound") {
  PreprocessConfig cfg;
  ImageRgb8 img(64, 64);
  CHECK_THROWS_AS(segment_coin(img, cfg), NoCoinFoundError);
}

TEST_CASE("segment_coin: 3px prong removed by opening") {
  PreprocessConfig cfg;
  ImageRgb8 img = disk_image(256, 128.0, 128.0, 80.0);
  // Horizontal 3px-wide prong sticking out to the right.
  for (int y = 127; y <= 129; ++y)
    for (int x = 190; x < 240; ++x) img.at(x, y) = {200, 200, 200};
  CoinImage coin = segment_coin(img, cfg);
  for (int y = 126; y <= 130; ++y)
    for (int x = 215; x < 240; ++x) CHECK(coin.mask.at(x, y) == 0);
  CHECK(std::fabs(coin.radius - 80.0) <= 3.0);
}

TEST_CASE("morphological opening matches naive reference") {
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    Mask m(48, 48, 0);
    for (auto& v : m.data) v = rng.uniform() < 0.6 ? 1 : 0;
    // A solid block so something survives erosion.
    for (int y = 10; y < 35; ++y)
      for (int x = 8; x < 40; ++x) m.at(x, y) = 1;
    for (int radius : {1, 2, 5}) {
      Mask a = morphological_open(m, radius);
      Mask b = reference::morphological_open(m, radius);
      REQUIRE(a.data == b.data);
    }
  }
}

TEST_CASE("wedges: angle examples and center pixel") {
  WedgeSpec spec;
  spec.n_slices = 8;
  spec.center_x = 50;
  spec.center_y = 50;
  // 10 degrees below the +x axis in screen coordinates is still wedge 0
  // (y grows downward, so positive angles sweep clockwise on screen).
  double ang = 10.0 * M_PI / 180.0;
  int x = 50 + int(std::lround(30 * std::cos(ang)));
  int y = 50 + int(std::lround(30 * std::sin(ang)));
  CHECK(wedge_index_of(spec, x, y) == 0);
  CHECK(wedge_index_of(spec, 50, 50) == 0);  // center pixel convention
  CHECK(wedge_index_of(spec, 49, 50) == 4);  // 180 degrees
}

TEST_CASE("wedges: masks partition the coin mask") {
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    int size = 40 + int(rng.index(40));
    double cx = size / 2.0 + rng.uniform(-3.0, 3.0);
    double cy = size / 2.0 + rng.uniform(-3.0, 3.0);
    Mask m(size, size, 0);
    for (auto& v : m.data) v = rng.uniform() < 0.5 ? 1 : 0;
    for (int n : {4, 8}) {
      WedgeSpec spec;
      spec.n_slices = n;
      spec.center_x = cx;
      spec.center_y = cy;
      std::vector<Mask> wedges = wedge_masks(spec, m);
      REQUIRE(int(wedges.size()) == n);
      std::size_t total = 0;
      for (std::size_t i = 0; i < m.data.size(); ++i) {
        int members = 0;
        for (const Mask& w : wedges) members += w.data[i];
        if (m.data[i]) {
          REQUIRE(members == 1);  // exactly one wedge per coin pixel
          ++total;
        } else {
          REQUIRE(members == 0);
        }
      }
      CHECK(total == count_nonzero(m));
    }
  }
}

TEST_CASE("wedges: full disk split into 8 roughly equal slices") {
  Mask m = disk_mask(200, 100, 100, 90);
  WedgeSpec spec;
  spec.n_slices = 8;
  spec.center_x = 100;
  spec.center_y = 100;
  std::vector<Mask> wedges = wedge_masks(spec, m);
  const double total = double(count_nonzero(m));
  for (const Mask& w : wedges) {
    double share = double(count_nonzero(w)) / total;
    CHECK(share > 0.10);
    CHECK(share < 0.15);
  }
}

TEST_CASE("wedges: rotating an asymmetric mask by one wedge permutes counts") {
  const int size = 201;
  const double c = 100.0;
  Mask m = disk_mask(size, c, c, 90);
  // A bite out of wedge 0 makes the mask asymmetric.
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double dx = x - c, dy = y - c;
      double ang = std::atan2(dy, dx);
      if (m.at(x, y) && ang >= 0.05 && ang < 0.60 &&
          std::sqrt(dx * dx + dy * dy) > 40)
        m.at(x, y) = 0;
    }

  // Rotate the mask by 45 degrees (inverse nearest-neighbor sampling).
  Mask rotated(size, size, 0);
  const double a = M_PI / 4.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double dx = x - c, dy = y - c;
      int sx = int(std::lround(c + dx * std::cos(a) + dy * std::sin(a)));
      int sy = int(std::lround(c - dx * std::sin(a) + dy * std::cos(a)));
      if (sx >= 0 && sx < size && sy >= 0 && sy < size && m.at(sx, sy))
        rotated.at(x, y) = 1;
    }

  WedgeSpec spec;
  spec.n_slices = 8;
  spec.center_x = c;
  spec.center_y = c;
  std::vector<Mask> w0 = wedge_masks(spec, m);
  std::vector<Mask> w1 = wedge_masks(spec, rotated);
  const double total = double(count_nonzero(m));
  for (int k = 0; k < 8; ++k) {
    double before = double(count_nonzero(w0[k]));
    double after = double(count_nonzero(w1[(k + 1) % 8]));
    CHECK(std::fabs(before - after) / total < 0.02);
  }
}
