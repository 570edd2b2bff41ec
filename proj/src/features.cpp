#include "coingrade/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

const char* to_string(Service s) { return s == Service::PCGS ? "PCGS" : "NGC"; }

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::Smote: return "smote";
    case Provenance::Noise: return "noise";
    default: return "original";
  }
}

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    default: return "";
  }
}

WedgeStatsResult wedge_gradient_stats(const GradientField& field,
                                      const std::vector<Mask>& wedges) {
  if (wedges.size() != 8)
    throw ShapeMismatchError("wedge_gradient_stats expects 8 wedges");
  WedgeStatsResult res;

#pragma omp parallel for schedule(static)
  for (int k = 0; k < 8; ++k) {
    const Mask& w = wedges[k];
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < w.data.size(); ++i)
      if (w.data[i]) idx.push_back(i);
    if (idx.empty()) {
#pragma omp atomic
      ++res.empty_wedges;
      continue;  // leaves the 12 slots at zero
    }
    const RasterF* planes[3] = {&field.gx, &field.gy, &field.g};
    std::vector<double> vals(idx.size());
    for (int p = 0; p < 3; ++p) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      double sum = 0.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double v = planes[p]->data[idx[i]];
        vals[i] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      const std::size_t n = vals.size();
      double median;
      if (n % 2 == 1) {
        std::nth_element(vals.begin(), vals.begin() + n / 2, vals.end());
        median = vals[n / 2];
      } else {
        std::nth_element(vals.begin(), vals.begin() + n / 2, vals.end());
        double upper = vals[n / 2];
        double lower = *std::max_element(vals.begin(), vals.begin() + n / 2);
        median = 0.5 * (lower + upper);
      }
      double* slot = res.values.data() + k * 12 + p * 4;
      slot[0] = lo;
      slot[1] = hi;
      slot[2] = sum / double(n);
      slot[3] = median;
    }
  }
  return res;
}

HsvTriple mean_hsv(const CoinImage& img) {
  double sum_s = 0.0, sum_v = 0.0, sum_cos = 0.0, sum_sin = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < img.mask.height; ++y)
    for (int x = 0; x < img.mask.width; ++x) {
      if (!img.mask.at(x, y)) continue;
      HsvTriple p = rgb_to_hsv(img.pixels.at(x, y));
      sum_s += p.s;
      sum_v += p.v;
      const double rad = p.h * M_PI / 180.0;
      sum_cos += std::cos(rad);
      sum_sin += std::sin(rad);
      ++n;
    }
  if (n == 0) throw DataError("mean_hsv: empty coin mask");

  HsvTriple out;
  out.s = sum_s / double(n);
  out.v = sum_v / double(n);
  if (sum_cos == 0.0 && sum_sin == 0.0) {
    out.h = 0.0;  // fully dispersed hues; pick the convention value
  } else {
    double h = std::atan2(sum_sin, sum_cos) * 180.0 / M_PI;
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
  }
  return out;
}

static double dist2_6(const std::array<double, 6>& a,
                      const std::array<double, 6>& b) {
  double d = 0.0;
  for (int i = 0; i < 6; ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

namespace {

struct LloydRun {
  std::array<std::array<double, 6>, 5> centroids{};
  std::vector<int> assign;
  double inertia = 0.0;
  std::vector<double> history;
};

int nearest_centroid(const std::array<std::array<double, 6>, 5>& c,
                     const std::array<double, 6>& p) {
  int best = 0;
  double bd = dist2_6(c[0], p);
  for (int j = 1; j < 5; ++j) {
    double d = dist2_6(c[j], p);
    if (d < bd) {  // ties keep the lowest index
      bd = d;
      best = j;
    }
  }
  return best;
}

LloydRun lloyd_once(const std::vector<std::array<double, 6>>& pts,
                    std::uint64_t seed, int max_iter) {
  const std::size_t n = pts.size();
  Rng rng(seed);
  LloydRun run;

  // k-means++ seeding.
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  run.centroids[0] = pts[rng.index(n)];
  for (int c = 1; c < 5; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist2_6(run.centroids[c - 1], pts[i]));
      total += d2[i];
    }
    if (total <= 0.0) {
      run.centroids[c] = pts[rng.index(n)];
      continue;
    }
    double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    run.centroids[c] = pts[pick];
  }

  run.assign.assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int a = nearest_centroid(run.centroids, pts[i]);
      if (a != run.assign[i]) {
        run.assign[i] = a;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;  // assignments stabilized

    std::array<std::array<double, 6>, 5> sums{};
    std::array<std::size_t, 5> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      counts[run.assign[i]]++;
      for (int d = 0; d < 6; ++d) sums[run.assign[i]][d] += pts[i][d];
    }
    for (int c = 0; c < 5; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster with the point farthest from its
        // current centroid (lowest index on ties).
        double far_d = -1.0;
        std::size_t far_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double d = dist2_6(run.centroids[run.assign[i]], pts[i]);
          if (d > far_d) {
            far_d = d;
            far_i = i;
          }
        }
        run.centroids[c] = pts[far_i];
      } else {
        for (int d = 0; d < 6; ++d)
          run.centroids[c][d] = sums[c][d] / double(counts[c]);
      }
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int a = nearest_centroid(run.centroids, pts[i]);
      inertia += dist2_6(run.centroids[a], pts[i]);
    }
    run.history.push_back(inertia);
  }

  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.assign[i] = nearest_centroid(run.centroids, pts[i]);
    run.inertia += dist2_6(run.centroids[run.assign[i]], pts[i]);
  }
  return run;
}

}  // namespace

ColorClusterModel fit_color_clusters(
    const std::vector<std::array<double, 6>>& points, std::uint64_t seed,
    std::vector<double>* inertia_history) {
  std::set<std::array<double, 6>> distinct(points.begin(), points.end());
  if (distinct.size() < 5)
    throw TooFewPointsError("fit_color_clusters needs >= 5 distinct points");

  constexpr int kRestarts = 10;
  constexpr int kMaxIter = 300;
  LloydRun best;
  bool have = false;
  for (int r = 0; r < kRestarts; ++r) {
    LloydRun run = lloyd_once(points, derive_seed(seed, r), kMaxIter);
    if (!have || run.inertia < best.inertia) {
      best = std::move(run);
      have = true;
    }
  }

  // Order clusters by brightness proxy sqrt(S*V), averaged over the two
  // sides, darkest first, then attach the category names.
  std::array<int, 5> order{0, 1, 2, 3, 4};
  auto proxy = [&](int c) {
    const auto& ct = best.centroids[c];
    double obv = std::sqrt(std::max(0.0, ct[1]) * std::max(0.0, ct[2]));
    double rev = std::sqrt(std::max(0.0, ct[4]) * std::max(0.0, ct[5]));
    return 0.5 * (obv + rev);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return proxy(a) < proxy(b); });

  ColorClusterModel model;
  for (int i = 0; i < 5; ++i) {
    model.centroids[i] = best.centroids[order[i]];
    model.labels[i] = color_cluster_names()[i];
  }
  model.inertia = best.inertia;
  if (inertia_history) *inertia_history = best.history;
  return model;
}

int assign_color_cluster(const ColorClusterModel& model,
                         const std::array<double, 6>& point) {
  return nearest_centroid(model.centroids, point);
}

double brightness(const HsvTriple& hsv, const BrightnessParams& params) {
  double dh = std::fmod(hsv.h - params.h0, 360.0);
  if (dh < -180.0) dh += 360.0;
  if (dh >= 180.0) dh -= 360.0;
  return std::sqrt(hsv.s * hsv.v) *
         std::exp(-(dh * dh) / (2.0 * params.sigma_h * params.sigma_h));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw LengthMismatchError("percentile of empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  double h = q * (double(n) + 1.0);
  if (h <= 1.0) return values.front();
  if (h >= double(n)) return values.back();
  std::size_t i = static_cast<std::size_t>(h);  // 1-based lower order stat
  double frac = h - double(i);
  return values[i - 1] + frac * (values[i] - values[i - 1]);
}

BrightnessLevels fit_brightness_levels(const std::vector<double>& train_b) {
  if (train_b.size() < 5)
    throw TooFewPointsError("fit_brightness_levels needs >= 5 values");
  const double lo = *std::min_element(train_b.begin(), train_b.end());
  const double hi = *std::max_element(train_b.begin(), train_b.end());
  if (lo == hi)
    throw DegenerateDistributionError(
        "fit_brightness_levels: all training values identical");

  BrightnessLevels out;
  const double qs[4] = {0.2, 0.4, 0.6, 0.8};
  for (int i = 0; i < 4; ++i) out.thresholds[i] = percentile(train_b, qs[i]);
  // Quantiles of a non-degenerate sample can still tie; nudge to keep the
  // thresholds strictly ascending.
  for (int i = 1; i < 4; ++i)
    if (out.thresholds[i] <= out.thresholds[i - 1])
      out.thresholds[i] = std::nextafter(out.thresholds[i - 1],
                                         std::numeric_limits<double>::max());
  return out;
}

int brightness_level(const BrightnessLevels& levels, double b) {
  int level = 0;
  for (double t : levels.thresholds)
    if (b >= t) ++level;
  return level;
}

SideStats compute_side_stats(const CoinImage& coin, const PreprocessConfig& cfg,
                             int n_slices, double wedge_start_angle) {
  RasterF gray = to_grayscale(coin.pixels);
  RasterF blurred = gaussian_blur(gray, cfg);
  GradientField field = sobel(blurred, coin.mask);

  WedgeSpec spec;
  spec.n_slices = n_slices;
  spec.center_x = coin.center_x;
  spec.center_y = coin.center_y;
  spec.radius = coin.radius;
  spec.start_angle = wedge_start_angle;
  std::vector<Mask> wedges = wedge_masks(spec, coin.mask);

  SideStats out;
  WedgeStatsResult stats = wedge_gradient_stats(field, wedges);
  out.edge = stats.values;
  out.empty_wedges = stats.empty_wedges;
  out.hsv = mean_hsv(coin);
  return out;
}

std::vector<double> assemble_features(const SideStats& obv, const SideStats& rev,
                                      Service service,
                                      const FeatureModels& models) {
  std::vector<double> v(kFeatureDim, 0.0);
  std::copy(obv.edge.begin(), obv.edge.end(), v.begin());
  std::copy(rev.edge.begin(), rev.edge.end(), v.begin() + 96);
  v[192] = obv.hsv.h;
  v[193] = obv.hsv.s;
  v[194] = obv.hsv.v;
  v[195] = rev.hsv.h;
  v[196] = rev.hsv.s;
  v[197] = rev.hsv.v;
  std::array<double, 6> point = {obv.hsv.h, obv.hsv.s, obv.hsv.v,
                                 rev.hsv.h, rev.hsv.s, rev.hsv.v};
  v[198] = assign_color_cluster(models.clusters, point);
  v[199] = brightness_level(models.levels, brightness(obv.hsv, models.brightness));
  v[200] = brightness_level(models.levels, brightness(rev.hsv, models.brightness));
  v[201] = service == Service::NGC ? 1.0 : 0.0;
  return v;
}

std::vector<double> build_feature_vector(const CoinImage& obv,
                                         const CoinImage& rev, Service service,
                                         const FeatureModels& models) {
  SideStats so = compute_side_stats(obv, models.preprocess, models.n_slices,
                                    models.wedge_start_angle);
  SideStats sr = compute_side_stats(rev, models.preprocess, models.n_slices,
                                    models.wedge_start_angle);
  return assemble_features(so, sr, service, models);
}

const std::array<std::string, kFeatureDim>& feature_slot_names() {
  static const std::array<std::string, kFeatureDim> names = [] {
    std::array<std::string, kFeatureDim> n;
    const char* planes[3] = {"gx", "gy", "g"};
    const char* stats[4] = {"min", "max", "mean", "median"};
    int i = 0;
    for (const char* side : {"obv", "rev"})
      for (int w = 0; w < 8; ++w)
        for (int p = 0; p < 3; ++p)
          for (int s = 0; s < 4; ++s)
            n[i++] = std::string(side) + "_w" + std::to_string(w) + "_" +
                     planes[p] + "_" + stats[s];
    for (const char* side : {"obv", "rev"})
      for (const char* c : {"hsv_h", "hsv_s", "hsv_v"})
        n[i++] = std::string(side) + "_" + c;
    n[i++] = "color_cluster";
    n[i++] = "obv_brightness_level";
    n[i++] = "rev_brightness_level";
    n[i++] = "service";
    return n;
  }();
  return names;
}

StandardizationStats fit_standardization(const Dataset& train) {
  if (train.size() < 2)
    throw TooFewPointsError("fit_standardization needs >= 2 vectors");
  const std::size_t d = train[0].x.size();
  StandardizationStats st;
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  for (const Sample& s : train) {
    if (s.x.size() != d)
      throw ShapeMismatchError("fit_standardization: inconsistent dimensions");
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += s.x[j];
  }
  for (std::size_t j = 0; j < d; ++j) st.mean[j] /= double(train.size());
  for (const Sample& s : train)
    for (std::size_t j = 0; j < d; ++j) {
      double t = s.x[j] - st.mean[j];
      st.stddev[j] += t * t;
    }
  for (std::size_t j = 0; j < d; ++j)
    st.stddev[j] = std::max(std::sqrt(st.stddev[j] / double(train.size())), 1e-8);
  return st;
}

std::vector<double> apply_standardization(const StandardizationStats& stats,
                                          const std::vector<double>& x) {
  if (x.size() != stats.mean.size())
    throw ShapeMismatchError("apply_standardization: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = (x[j] - stats.mean[j]) / stats.stddev[j];
  return out;
}

std::vector<double> undo_standardization(const StandardizationStats& stats,
                                         const std::vector<double>& x) {
  if (x.size() != stats.mean.size())
    throw ShapeMismatchError("undo_standardization: dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    out[j] = x[j] * stats.stddev[j] + stats.mean[j];
  return out;
}

Dataset standardize_all(const StandardizationStats& stats, const Dataset& data) {
  Dataset out = data;
  for (Sample& s : out) s.x = apply_standardization(stats, s.x);
  return out;
}

}  // namespace coingrade
