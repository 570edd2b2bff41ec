#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coingrade/color.hpp"
#include "coingrade/imaging.hpp"

namespace coingrade {

inline constexpr int kFeatureDim = 202;

// Bump when the slot layout changes; written into caches and model files.
inline constexpr const char* kPipelineVersion = "fv202.v1";

enum class Service : std::uint8_t { PCGS = 0, NGC = 1 };
enum class Provenance : std::uint8_t { Original = 0, Smote = 1, Noise = 2 };
enum class Split : std::uint8_t { None = 0, Train = 1, Test = 2 };

const char* to_string(Service s);
const char* to_string(Provenance p);
const char* to_string(Split s);

// One labeled row of the ML layer. `x` is kFeatureDim long in the coin
// pipeline, but the trainers below accept any consistent dimension so toy
// problems can exercise them.
struct Sample {
  std::vector<double> x;
  int label = 0;  // Sheldon grade in the pipeline
  Provenance provenance = Provenance::Original;
  Split split = Split::None;
  std::string id;
};
using Dataset = std::vector<Sample>;

struct BrightnessParams {
  double h0 = 50.0;       // target gold hue, degrees
  double sigma_h = 20.0;  // hue bandwidth, degrees
};

// Five color categories fit on per-coin 6-dim mean-HSV points
// (obverse H,S,V then reverse H,S,V). Centroids are stored sorted by their
// brightness proxy so index 0 is always the darkest category.
struct ColorClusterModel {
  static constexpr int k = 5;
  std::array<std::array<double, 6>, 5> centroids{};
  std::array<std::string, 5> labels{};
  double inertia = 0.0;
};

inline const std::array<std::string, 5>& color_cluster_names() {
  static const std::array<std::string, 5> names = {
      "Rustic Gold", "Golden Bronze", "Autumn Gold", "Golden Sand",
      "Sunlit Gold"};
  return names;
}

struct BrightnessLevels {
  std::array<double, 4> thresholds{};  // strictly ascending
};

inline const std::array<std::string, 5>& brightness_level_names() {
  static const std::array<std::string, 5> names = {"Dim", "Soft", "Bright",
                                                   "Vivid", "Brilliant"};
  return names;
}

struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floor-clamped to 1e-8
};

// Everything needed to turn a segmented image pair into the 202 slots.
struct FeatureModels {
  PreprocessConfig preprocess;
  int n_slices = 8;
  double wedge_start_angle = 0.0;
  BrightnessParams brightness;
  ColorClusterModel clusters;
  BrightnessLevels levels;
};

struct WedgeStatsResult {
  std::array<double, 96> values{};  // 8 wedges x (gx,gy,g) x (min,max,mean,median)
  int empty_wedges = 0;
};

// Per wedge k = 0..7: [min,max,mean,median] of gx, then gy, then g.
// Empty wedges contribute 12 zeros and bump empty_wedges.
WedgeStatsResult wedge_gradient_stats(const GradientField& field,
                                      const std::vector<Mask>& wedges);

// Arithmetic mean of S and V over the mask; hue averaged circularly.
HsvTriple mean_hsv(const CoinImage& img);

// Lloyd's algorithm with k-means++ seeding, 10 restarts, 300 iterations max.
// `inertia_history` (optional) receives the best run's inertia per iteration.
ColorClusterModel fit_color_clusters(
    const std::vector<std::array<double, 6>>& points, std::uint64_t seed,
    std::vector<double>* inertia_history = nullptr);

int assign_color_cluster(const ColorClusterModel& model,
                         const std::array<double, 6>& point);

// B = sqrt(S*V) * exp(-dH^2 / (2 sigma_H^2)), dH wrapped to [-180, 180).
double brightness(const HsvTriple& hsv, const BrightnessParams& params);

// Thresholds at the 20/40/60/80th percentiles of the training values.
BrightnessLevels fit_brightness_levels(const std::vector<double>& train_b);

int brightness_level(const BrightnessLevels& levels, double b);

// Percentile with h = q*(n+1) positioning and linear interpolation,
// clamped to the data range. Shared by brightness binning and timing stats.
double percentile(std::vector<double> values, double q);

// Edge statistics and mean HSV for one coin side.
struct SideStats {
  std::array<double, 96> edge{};
  HsvTriple hsv;
  int empty_wedges = 0;
};

SideStats compute_side_stats(const CoinImage& coin, const PreprocessConfig& cfg,
                             int n_slices, double wedge_start_angle = 0.0);

// Slot layout (fixed, versioned):
//   [0,96)    obverse wedge stats     [96,192)  reverse wedge stats
//   [192,195) obverse mean HSV        [195,198) reverse mean HSV
//   198 color cluster, 199/200 obverse/reverse brightness level, 201 service
std::vector<double> assemble_features(const SideStats& obv, const SideStats& rev,
                                      Service service, const FeatureModels& models);

std::vector<double> build_feature_vector(const CoinImage& obv,
                                         const CoinImage& rev, Service service,
                                         const FeatureModels& models);

const std::array<std::string, kFeatureDim>& feature_slot_names();

StandardizationStats fit_standardization(const Dataset& train);
std::vector<double> apply_standardization(const StandardizationStats& stats,
                                          const std::vector<double>& x);
std::vector<double> undo_standardization(const StandardizationStats& stats,
                                         const std::vector<double>& x);
Dataset standardize_all(const StandardizationStats& stats, const Dataset& data);

}  // namespace coingrade
