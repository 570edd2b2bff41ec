#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "coingrade/ann.hpp"
#include "coingrade/imaging.hpp"
#include "coingrade/metrics.hpp"
#include "coingrade/resample.hpp"
#include "coingrade/svm.hpp"

namespace coingrade {

// All tunables in one place. Defaults are the pipeline's reference values;
// the config file may override any subset. Unknown keys are rejected.
struct PipelineConfig {
  std::uint64_t seed = 1;
  int jobs = 0;  // 0 = library default

  PreprocessConfig preprocess;
  int wedge_slices = 8;
  double wedge_start_angle = 0.0;
  BrightnessParams brightness;
  SmoteConfig smote;
  AugmentConfig augment;
  TrainConfig ann;
  SvmConfig svm;
  SplitPlan split;

  PipelineConfig() { reseed(seed); }

  // Sets the master seed and rederives every per-stage stream.
  void reseed(std::uint64_t new_seed);
  void validate() const;
};

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

}  // namespace coingrade
