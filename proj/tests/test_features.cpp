#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "coingrade/errors.hpp"
#include "coingrade/features.hpp"
#include "coingrade/reference.hpp"
#include "coingrade/rng.hpp"

using namespace coingrade;

namespace {

GradientField field_from(const RasterF& gx, const RasterF& gy, const Mask& m) {
  GradientField f;
  f.gx = gx;
  f.gy = gy;
  f.g = RasterF(gx.width, gx.height);
  for (std::size_t i = 0; i < f.g.data.size(); ++i)
    f.g.data[i] = std::sqrt(gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]);
  f.mask = m;
  return f;
}

std::vector<Mask> column_wedges(int w, int h) {
  // 8 vertical strips standing in for wedges.
  std::vector<Mask> wedges(8, Mask(w, h, 0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) wedges[std::min(7, x * 8 / w)].at(x, y) = 1;
  return wedges;
}

}  // namespace

TEST_CASE("wedge stats: constant plane collapses min/max/mean/median") {
  const int n = 32;
  RasterF gx(n, n, 2.5), gy(n, n, 0.0);
  Mask m(n, n, 1);
  GradientField f = field_from(gx, gy, m);
  auto wedges = column_wedges(n, n);
  WedgeStatsResult res = wedge_gradient_stats(f, wedges);
  for (int k = 0; k < 8; ++k) {
    for (int s = 0; s < 4; ++s)
      CHECK(res.values[k * 12 + s] == doctest::Approx(2.5));  // gx block
    CHECK(res.values[k * 12 + 8] == doctest::Approx(2.5));    // g min
  }
}

TEST_CASE("wedge stats: {1,2,3,4} yields even-count median 2.5") {
  RasterF gx(4, 1), gy(4, 1, 0.0);
  gx.at(0, 0) = 3;
  gx.at(1, 0) = 1;
  gx.at(2, 0) = 4;
  gx.at(3, 0) = 2;
  Mask m(4, 1, 1);
  GradientField f = field_from(gx, gy, m);
  std::vector<Mask> wedges(8, Mask(4, 1, 0));
  wedges[0] = m;  // everything in wedge 0, the rest empty
  WedgeStatsResult res = wedge_gradient_stats(f, wedges);
  CHECK(res.values[0] == doctest::Approx(1.0));   // min
  CHECK(res.values[1] == doctest::Approx(4.0));   // max
  CHECK(res.values[2] == doctest::Approx(2.5));   // mean
  CHECK(res.values[3] == doctest::Approx(2.5));   // median
  CHECK(res.empty_wedges == 7);
  for (int k = 1; k < 8; ++k)
    for (int s = 0; s < 12; ++s) CHECK(res.values[k * 12 + s] == 0.0);
}

TEST_CASE("wedge stats: random field matches sort-based oracle") {
  Rng rng(21);
  const int n = 40;
  RasterF gx(n, n), gy(n, n);
  for (double& v : gx.data) v = rng.normal();
  for (double& v : gy.data) v = rng.normal();
  Mask m(n, n, 0);
  for (auto& v : m.data) v = rng.uniform() < 0.7 ? 1 : 0;
  GradientField f = field_from(gx, gy, m);

  WedgeSpec spec;
  spec.n_slices = 8;
  spec.center_x = n / 2.0;
  spec.center_y = n / 2.0;
  auto wedges = wedge_masks(spec, m);
  WedgeStatsResult fast = wedge_gradient_stats(f, wedges);
  std::vector<double> slow = reference::wedge_stats(f, wedges);
  for (int i = 0; i < 96; ++i)
    CHECK(fast.values[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("wedge stats: min <= median <= max and min <= mean <= max") {
  Rng rng(33);
  const int n = 24;
  RasterF gx(n, n), gy(n, n);
  for (double& v : gx.data) v = rng.normal();
  for (double& v : gy.data) v = rng.normal();
  Mask m(n, n, 1);
  GradientField f = field_from(gx, gy, m);
  WedgeStatsResult res = wedge_gradient_stats(f, column_wedges(n, n));
  for (int k = 0; k < 8; ++k)
    for (int p = 0; p < 3; ++p) {
      const double* s = res.values.data() + k * 12 + p * 4;
      CHECK(s[0] <= s[2]);  // min <= mean
      CHECK(s[2] <= s[1]);
      CHECK(s[0] <= s[3]);  // min <= median
      CHECK(s[3] <= s[1]);
    }
}

TEST_CASE("mean_hsv: pure red, circular seam, gray") {
  CoinImage coin;
  coin.pixels = ImageRgb8(4, 1);
  coin.mask = Mask(4, 1, 1);

  for (auto& p : coin.pixels.pixels) p = {255, 0, 0};
  HsvTriple red = mean_hsv(coin);
  CHECK(red.h == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(red.s == doctest::Approx(1.0));
  CHECK(red.v == doctest::Approx(1.0));

  for (auto& p : coin.pixels.pixels) p = {128, 128, 128};
  HsvTriple gray = mean_hsv(coin);
  CHECK(gray.s == doctest::Approx(0.0));
  CHECK(gray.v == doctest::Approx(128.0 / 255.0).epsilon(1e-9));
}

TEST_CASE("mean_hsv: hues straddling the 0/360 seam average to 0") {
  // Two synthetic HSV points at 10 and 350 degrees, equal S and V.
  CoinImage coin;
  coin.pixels = ImageRgb8(2, 1);
  coin.mask = Mask(2, 1, 1);
  coin.pixels.at(0, 0) = hsv_to_rgb(10.0, 1.0, 1.0);
  coin.pixels.at(1, 0) = hsv_to_rgb(350.0, 1.0, 1.0);
  HsvTriple m = mean_hsv(coin);
  bool near_zero = m.h < 1.0 || m.h > 359.0;
  CHECK(near_zero);
}

TEST_CASE("hsv round trip on a hue sweep") {
  for (int h = 0; h < 360; h += 15) {
    Rgb8 p = hsv_to_rgb(double(h), 0.8, 0.7);
    HsvTriple back = rgb_to_hsv(p);
    // 8-bit quantization allows a small wobble.
    double dh = std::fabs(back.h - h);
    if (dh > 180) dh = 360 - dh;
    CHECK(dh < 2.0);
    CHECK(back.s == doctest::Approx(0.8).epsilon(0.02));
    CHECK(back.v == doctest::Approx(0.7).epsilon(0.02));
  }
}

TEST_CASE("kmeans: five distinct points get their own clusters, inertia 0") {
  std::vector<std::array<double, 6>> pts;
  for (int i = 0; i < 5; ++i)
    pts.push_back({double(i * 10), 0, 0, 0, 0, double(i)});
  ColorClusterModel model = fit_color_clusters(pts, 7);
  CHECK(model.inertia == doctest::Approx(0.0).epsilon(1e-12));
  std::set<int> assigned;
  for (const auto& p : pts) assigned.insert(assign_color_cluster(model, p));
  CHECK(assigned.size() == 5);
}

TEST_CASE("kmeans: refuses fewer than five distinct points") {
  std::vector<std::array<double, 6>> pts(10, {1, 2, 3, 4, 5, 6});
  pts[0] = {0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(fit_color_clusters(pts, 1), TooFewPointsError);
}

TEST_CASE("kmeans: Lloyd invariant, every point nearest its own centroid") {
  Rng rng(13);
  std::vector<std::array<double, 6>> pts;
  for (int i = 0; i < 60; ++i) {
    std::array<double, 6> p;
    for (double& v : p) v = rng.uniform(0.0, 10.0);
    pts.push_back(p);
  }
  ColorClusterModel model = fit_color_clusters(pts, 99);
  auto d2 = [](const std::array<double, 6>& a, const std::array<double, 6>& b) {
    double s = 0;
    for (int i = 0; i < 6; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
  };
  for (const auto& p : pts) {
    int own = assign_color_cluster(model, p);
    for (int c = 0; c < 5; ++c)
      CHECK(d2(model.centroids[own], p) <= d2(model.centroids[c], p) + 1e-12);
  }
}

TEST_CASE("kmeans: inertia never increases across Lloyd iterations") {
  Rng rng(29);
  std::vector<std::array<double, 6>> pts;
  for (int i = 0; i < 200; ++i) {
    std::array<double, 6> p;
    for (double& v : p) v = rng.normal(double(i % 4), 1.0);
    pts.push_back(p);
  }
  std::vector<double> history;
  fit_color_clusters(pts, 5, &history);
  for (std::size_t i = 1; i < history.size(); ++i)
    CHECK(history[i] <= history[i - 1] + 1e-9);
}

TEST_CASE("kmeans: separated mixture recovered") {
  Rng rng(55);
  std::vector<std::array<double, 6>> centers;
  for (int c = 0; c < 5; ++c) {
    std::array<double, 6> ctr;
    for (double& v : ctr) v = rng.uniform(0.0, 100.0);
    bool far = true;
    for (const auto& other : centers) {
      double d = 0;
      for (int i = 0; i < 6; ++i) d += (ctr[i] - other[i]) * (ctr[i] - other[i]);
      if (std::sqrt(d) < 40.0) far = false;
    }
    if (!far) {
      --c;
      continue;
    }
    centers.push_back(ctr);
  }
  std::vector<std::array<double, 6>> pts;
  std::vector<int> gen;
  for (int i = 0; i < 500; ++i) {
    int c = int(rng.index(5));
    std::array<double, 6> p = centers[c];
    for (double& v : p) v += rng.normal(0.0, 1.0);  // separation >= 10 sigma
    pts.push_back(p);
    gen.push_back(c);
  }
  ColorClusterModel model = fit_color_clusters(pts, 123);
  // Map each generating center to its nearest model centroid.
  int correct = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int assigned = assign_color_cluster(model, pts[i]);
    int center_cluster = assign_color_cluster(model, centers[gen[i]]);
    correct += assigned == center_cluster;
  }
  CHECK(double(correct) / double(pts.size()) >= 0.99);
}

TEST_CASE("assign_color_cluster: exact centroid and tie-break to lowest") {
  ColorClusterModel model;
  for (int c = 0; c < 5; ++c) model.centroids[c] = {double(2 * c), 0, 0, 0, 0, 0};
  CHECK(assign_color_cluster(model, model.centroids[3]) == 3);
  // Equidistant between centroids 1 and 2.
  CHECK(assign_color_cluster(model, {3.0, 0, 0, 0, 0, 0}) == 1);
  // Brute-force linear scan agreement.
  Rng rng(77);
  for (int t = 0; t < 200; ++t) {
    std::array<double, 6> p;
    for (double& v : p) v = rng.uniform(0.0, 10.0);
    int fast = assign_color_cluster(model, p);
    int slow = 0;
    double best = 1e300;
    for (int c = 0; c < 5; ++c) {
      double d = 0;
      for (int i = 0; i < 6; ++i) d += (p[i] - model.centroids[c][i]) *
                                       (p[i] - model.centroids[c][i]);
      if (d < best) {
        best = d;
        slow = c;
      }
    }
    CHECK(fast == slow);
  }
}

TEST_CASE("brightness: fixed points of the weighting formula") {
  BrightnessParams bp;  // h0 = 50, sigma = 20
  CHECK(brightness({50.0, 1.0, 1.0}, bp) == doctest::Approx(1.0));
  CHECK(brightness({123.0, 0.0, 0.9}, bp) == doctest::Approx(0.0));
  CHECK(brightness({70.0, 1.0, 1.0}, bp) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("brightness: monotone in S and V, peaked at h0, wraps hue") {
  BrightnessParams bp;
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    double h = rng.uniform(0.0, 360.0);
    double s = rng.uniform(0.01, 0.99);
    double v = rng.uniform(0.01, 0.99);
    CHECK(brightness({h, s + 0.01, v}, bp) >= brightness({h, s, v}, bp));
    CHECK(brightness({h, s, v + 0.01}, bp) >= brightness({h, s, v}, bp));
    CHECK(brightness({bp.h0, s, v}, bp) >= brightness({h, s, v}, bp));
  }
  // Wrapped difference: 350 degrees is 60 away from 50, not 300.
  double wrapped = brightness({350.0, 1.0, 1.0}, bp);
  CHECK(wrapped == doctest::Approx(std::exp(-0.5 * 9.0)).epsilon(1e-9));
}

TEST_CASE("brightness levels: percentile thresholds on 1..100") {
  std::vector<double> values;
  for (int i = 1; i <= 100; ++i) values.push_back(double(i));
  BrightnessLevels levels = fit_brightness_levels(values);
  CHECK(levels.thresholds[0] == doctest::Approx(20.2).epsilon(1e-9));
  CHECK(levels.thresholds[1] == doctest::Approx(40.4).epsilon(1e-9));
  CHECK(levels.thresholds[2] == doctest::Approx(60.6).epsilon(1e-9));
  CHECK(levels.thresholds[3] == doctest::Approx(80.8).epsilon(1e-9));

  // Every bin receives 20 +- 1 of the training values.
  std::array<int, 5> counts{};
  for (double v : values) counts[brightness_level(levels, v)]++;
  for (int c : counts) {
    CHECK(c >= 19);
    CHECK(c <= 21);
  }
}

TEST_CASE("brightness levels: degenerate distribution rejected") {
  std::vector<double> values(50, 0.3);
  CHECK_THROWS_AS(fit_brightness_levels(values), DegenerateDistributionError);
}

TEST_CASE("feature layout: slot names and vector shape") {
  const auto& names = feature_slot_names();
  CHECK(names[0] == "obv_w0_gx_min");
  CHECK(names[3] == "obv_w0_gx_median");
  CHECK(names[4] == "obv_w0_gy_min");
  CHECK(names[8] == "obv_w0_g_min");
  CHECK(names[12] == "obv_w1_gx_min");
  CHECK(names[96] == "rev_w0_gx_min");
  CHECK(names[192] == "obv_hsv_h");
  CHECK(names[195] == "rev_hsv_h");
  CHECK(names[198] == "color_cluster");
  CHECK(names[199] == "obv_brightness_level");
  CHECK(names[200] == "rev_brightness_level");
  CHECK(names[201] == "service");
}

TEST_CASE("assemble_features: layout, service encoding, identical sides") {
  SideStats side;
  Rng rng(41);
  for (double& v : side.edge) v = rng.normal();
  side.hsv = {48.0, 0.5, 0.6};

  FeatureModels models;
  for (int c = 0; c < 5; ++c)
    models.clusters.centroids[c] = {double(c * 100), 0, 0, 0, 0, 0};
  models.levels.thresholds = {0.1, 0.2, 0.3, 0.4};

  std::vector<double> v = assemble_features(side, side, Service::PCGS, models);
  REQUIRE(int(v.size()) == kFeatureDim);
  for (int i = 0; i < 96; ++i) CHECK(v[i] == v[96 + i]);
  CHECK(v[201] == 0.0);
  std::vector<double> v2 = assemble_features(side, side, Service::NGC, models);
  CHECK(v2[201] == 1.0);
  CHECK(v[192] == doctest::Approx(48.0));
  CHECK(v[197] == doctest::Approx(0.6));
}

TEST_CASE("standardization: zero mean unit variance, constant slots, round trip") {
  Rng rng(61);
  Dataset data;
  for (int i = 0; i < 40; ++i) {
    Sample s;
    s.x.resize(10);
    for (int j = 0; j < 9; ++j) s.x[j] = rng.normal(double(j), 2.0);
    s.x[9] = 3.14;  // constant slot
    data.push_back(std::move(s));
  }
  StandardizationStats st = fit_standardization(data);
  Dataset z = standardize_all(st, data);

  for (int j = 0; j < 10; ++j) {
    double mean = 0.0, var = 0.0;
    for (const Sample& s : z) mean += s.x[j];
    mean /= double(z.size());
    for (const Sample& s : z) var += (s.x[j] - mean) * (s.x[j] - mean);
    var /= double(z.size());
    CHECK(std::fabs(mean) < 1e-10);
    if (j < 9)
      CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    else
      CHECK(var == doctest::Approx(0.0));  // constant slot -> all zeros
  }
  for (const Sample& s : z) CHECK(s.x[9] == 0.0);

  for (int i = 0; i < 5; ++i) {
    std::vector<double> back = undo_standardization(st, z[i].x);
    for (int j = 0; j < 10; ++j)
      CHECK(back[j] == doctest::Approx(data[i].x[j]).epsilon(1e-9));
  }
}

TEST_CASE("percentile: q*(n+1) positioning with clamping") {
  std::vector<double> v = {10, 20, 30, 40};
  CHECK(percentile(v, 0.5) == doctest::Approx(25.0));
  CHECK(percentile(v, 0.0) == doctest::Approx(10.0));
  CHECK(percentile(v, 1.0) == doctest::Approx(40.0));
}
