#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coingrade/features.hpp"

namespace coingrade {

struct TrainConfig {
  std::vector<int> hidden = {128, 64};
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 97;
  int batch_size = 32;
  double validation_fraction = 0.10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Fully-connected net, ReLU hidden layers, softmax output. Weights are
// row-major [out][in]. label_map maps class index -> grade, ascending.
struct MlpModel {
  std::vector<int> layer_dims;               // e.g. {202, 128, 64, 13}
  std::vector<std::vector<double>> weights;  // one matrix per layer
  std::vector<std::vector<double>> biases;
  std::vector<int> label_map;
  StandardizationStats stats;  // empty when trained on pre-standardized toys

  int input_dim() const { return layer_dims.front(); }
  int num_classes() const { return layer_dims.back(); }
};

struct EpochStats {
  double train_loss = 0.0, train_accuracy = 0.0;
  double val_loss = 0.0, val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  std::vector<std::string> warnings;
};

// Class probabilities for one standardized input (stable softmax).
std::vector<double> forward(const MlpModel& model, std::span<const double> x);

// Mini-batch Adam for exactly cfg.epochs epochs. `data` must already be
// standardized/resampled; pass `stats` to embed the scaler in the model.
MlpModel train(const Dataset& data, const TrainConfig& cfg,
               TrainHistory* history = nullptr,
               const StandardizationStats* stats = nullptr);

// (grade, probabilities) for one standardized input; argmax ties go to the
// lowest class index.
std::pair<int, std::vector<double>> predict(const MlpModel& model,
                                            std::span<const double> x);

// Flat analytic gradient of the mean cross-entropy over the batch, ordered
// layer by layer, weights row-major then biases.
std::vector<double> analytic_gradients(const MlpModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<int>& class_targets);

// Central finite differences with step h over every parameter.
std::vector<double> numeric_gradients(const MlpModel& model,
                                      const std::vector<std::vector<double>>& xs,
                                      const std::vector<int>& class_targets,
                                      double h = 1e-5);

// Max relative disagreement between the two gradient routes.
double gradient_check(const MlpModel& model,
                      const std::vector<std::vector<double>>& xs,
                      const std::vector<int>& class_targets, double h = 1e-5);

// Mean cross-entropy loss of the batch; shared by training and the
// finite-difference probe.
double batch_loss(const MlpModel& model,
                  const std::vector<std::vector<double>>& xs,
                  const std::vector<int>& class_targets);

}  // namespace coingrade
