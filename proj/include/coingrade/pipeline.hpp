#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coingrade/ann.hpp"
#include "coingrade/config.hpp"
#include "coingrade/dataset.hpp"
#include "coingrade/metrics.hpp"
#include "coingrade/svm.hpp"

namespace coingrade {

// Wall-clock seconds per extraction stage for one coin (both sides).
struct StageTimes {
  double preprocess = 0.0;   // decode, grayscale, blur, segmentation
  double sobel = 0.0;        // gradient fields
  double wedges = 0.0;       // wedge masks + gradient statistics
  double hsv = 0.0;          // mean HSV + brightness
  double forward = 0.0;      // classifier forward pass (predict only)
  double total = 0.0;
};

struct ExtractionResult {
  std::vector<CacheRecord> records;
  FeatureModels models;  // fitted on train-tagged coins (or all, if untagged)
  std::vector<StageTimes> times;  // one per coin
  std::vector<std::string> warnings;
};

// Runs the full feature pipeline over a manifest: per-coin edge statistics
// and mean HSV, then color-cluster and brightness-level fits, then slot
// assembly. Parallel across coins; record order follows the manifest.
ExtractionResult extract_features(const std::vector<ManifestEntry>& manifest,
                                  const PipelineConfig& cfg);

struct TrainedAnn {
  MlpModel model;
  TrainHistory history;
  std::vector<std::string> warnings;
};

// standardize -> SMOTE -> noise augment -> Adam training.
TrainedAnn train_ann_pipeline(const Dataset& train, const PipelineConfig& cfg);

// standardize -> SMO training (the baseline path takes no resampling).
SvmModel train_svm_pipeline(const Dataset& train, const PipelineConfig& cfg);

// Predictions for raw (unstandardized) rows using the model's embedded
// scaler.
std::vector<int> predict_ann(const MlpModel& model, const Dataset& rows);
std::vector<int> predict_svm(const SvmModel& model, const Dataset& rows);

// Model containers. Kind is "ann" or "svm"; the file embeds the fitted
// feature models and the config echo so `predict` can run from two images.
struct ModelFile {
  std::string kind;
  std::optional<MlpModel> ann;
  std::optional<SvmModel> svm;
  FeatureModels features;
  bool has_feature_models = false;
  nlohmann::ordered_json config_echo;
};

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

void save_feature_models(const std::filesystem::path& path,
                         const FeatureModels& models);
FeatureModels load_feature_models(const std::filesystem::path& path);

// Sidecar path holding the fitted feature models next to a cache file.
std::filesystem::path feature_models_path(const std::filesystem::path& cache);

struct PredictOutcome {
  int grade = 0;
  std::vector<std::pair<int, double>> top;  // (grade, probability), best first
  StageTimes times;
};

// Full image-pair path: decode, segment, features, standardize, classify.
PredictOutcome predict_pair(const ModelFile& model,
                            const std::filesystem::path& obverse,
                            const std::filesystem::path& reverse,
                            Service service);

// Report bundle written by `evaluate`: stable plain text + JSON.
struct ReportFiles {
  std::string text;
  nlohmann::ordered_json json;
};

ReportFiles render_report(const EvalReport& report, const BiasSummary& bias,
                          const nlohmann::ordered_json& config_echo);

}  // namespace coingrade
