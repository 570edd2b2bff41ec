#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coingrade/features.hpp"

namespace coingrade {

struct SmoteConfig {
  int k_max = 5;
  double fallback_noise_sigma = 0.01;  // for singleton classes
  std::uint64_t seed = 0;
};

struct AugmentConfig {
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
};

// Provenance of one synthetic point: x_new = x[base] + u * (x[nn] - x[base]),
// both indices into the input dataset. Kept so tests can verify segment
// membership directly.
struct SmoteRecord {
  int label;
  std::size_t base;
  std::size_t neighbor;
  double u;
  std::size_t out_index;
};

struct SmoteResult {
  Dataset samples;  // originals unchanged, synthetics appended
  std::vector<SmoteRecord> synthetic;
  std::vector<std::string> warnings;
  int k_used = 0;  // min(k_max, n_min - 1); 0 when every class is majority-size
};

// Oversamples every minority class up to the majority count by interpolating
// toward same-class nearest neighbors (Euclidean on the features as given;
// the pipeline passes standardized vectors). Inputs tagged Split::Test are
// refused outright.
SmoteResult smote(const Dataset& train, const SmoteConfig& cfg);

struct AugmentResult {
  Dataset samples;  // originals first, then one noisy copy per original
  std::vector<std::string> warnings;
};

AugmentResult gaussian_augment(const Dataset& train, const AugmentConfig& cfg);

}  // namespace coingrade
