#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coingrade/features.hpp"

namespace coingrade {

struct SvmConfig {
  double c = 1.0;
  // gamma <= 0 means "scale": 1 / (d * variance of all training entries).
  double gamma = 0.0;
  double kkt_tolerance = 1e-3;
  int max_passes = 1000;  // cap on outer SMO sweeps per binary problem

  void validate() const;
};

// One one-vs-one binary machine. Decision value
//   f(x) = sum_i coef_i * K(sv_i, x) + bias,   coef_i = alpha_i * y_i,
// where y = +1 for grade_pos (the lower grade) and -1 for grade_neg.
// sv_index points into SvmModel::support_vectors.
struct PairClassifier {
  int grade_pos = 0;
  int grade_neg = 0;
  std::vector<int> sv_index;
  std::vector<double> coef;
  double bias = 0.0;
};

struct SvmModel {
  double c = 1.0;
  double gamma = 0.0;  // resolved value
  std::vector<std::vector<double>> support_vectors;  // deduplicated pool
  std::vector<PairClassifier> pairs;
  std::vector<int> label_map;  // distinct grades, ascending
  StandardizationStats stats;
};

// One-vs-one RBF SVMs trained with SMO on the data as given (the baseline
// condition trains on raw imbalanced features, no SMOTE).
SvmModel svm_train(const Dataset& data, const SvmConfig& cfg);

double pair_decision(const SvmModel& model, const PairClassifier& pair,
                     std::span<const double> x);

// Majority vote over all pairs; ties go to the lowest grade.
int svm_predict(const SvmModel& model, std::span<const double> x);

double rbf_kernel(std::span<const double> a, std::span<const double> b,
                  double gamma);

// gamma = 1 / (d * var) over every entry of the training matrix.
double resolve_gamma_scale(const Dataset& data);

// Dual variables of one binary problem, exposed so tests can check
// feasibility (0 <= alpha <= C, sum alpha_i y_i = 0) and compare against an
// independent QP solve.
struct BinarySvmSolution {
  std::vector<double> alpha;
  std::vector<int> y;  // +1/-1 per training row
  double bias = 0.0;
};

BinarySvmSolution smo_solve(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, double c, double gamma,
                            double tolerance, int max_passes);

}  // namespace coingrade
