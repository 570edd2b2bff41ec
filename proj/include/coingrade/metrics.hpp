#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coingrade/features.hpp"

namespace coingrade {

struct SplitPlan {
  enum class Mode { Holdout, KFold };
  Mode mode = Mode::Holdout;
  double train_fraction = 0.70;
  int k = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SplitResult {
  std::vector<std::size_t> train, test;
};

// Per-class proportional holdout. Each class contributes
// round-half-up(n_c * test_fraction) test rows (singletons always train),
// so test proportions stay within one sample of the exact share.
SplitResult stratified_split(std::span<const int> labels, const SplitPlan& plan);

// Disjoint folds covering every index; per-class round-robin when every
// class has >= k members, otherwise unstratified with a warning.
std::vector<std::vector<std::size_t>> stratified_kfold(
    std::span<const int> labels, int k, std::uint64_t seed,
    std::vector<std::string>* warnings = nullptr);

// Fraction with |pred - truth| <= t. t = 0 is exact accuracy.
double tolerance_accuracy(std::span<const int> pred, std::span<const int> truth,
                          int t);

struct GradeRow {
  int grade = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  int support = 0;
};

struct EvalReport {
  int n = 0;
  double exact_accuracy = 0.0;
  std::map<int, double> tol_accuracy;  // t in {1,2,3}
  std::vector<GradeRow> per_grade;     // ascending grade order
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::vector<int> grades;                // row/column order of `confusion`
  std::vector<std::vector<int>> confusion;  // [truth][pred]
};

// Per-grade precision/recall/F1 over the union of predicted and true
// grades; zero denominators score 0.
EvalReport classification_report(std::span<const int> pred,
                                 std::span<const int> truth);

struct BiasSummary {
  std::map<int, int> histogram;  // signed error -> count
  double mean_signed_error = 0.0;
};

BiasSummary bias_summary(std::span<const int> pred, std::span<const int> truth);

// Trains on the fold's training rows and returns predictions for its test
// rows, in order. Resampling must happen inside the callback so nothing
// leaks across folds.
using FoldTrainer =
    std::function<std::vector<int>(const Dataset& train, const Dataset& test)>;

struct FoldOutcome {
  EvalReport report;
  std::vector<int> pred, truth;
};

struct CvResult {
  EvalReport aggregate;  // over pooled predictions of all folds
  std::vector<FoldOutcome> folds;
  std::vector<std::string> warnings;
};

CvResult cross_validate(const Dataset& data, int k, std::uint64_t seed,
                        const FoldTrainer& trainer);

// Plain-text rendering: per-grade table, tolerance rows, confusion matrix,
// signed-error summary. Stable output, no timestamps.
std::string format_report_text(const EvalReport& report);
std::string format_tolerance_table(const EvalReport& report);
std::string format_confusion(const EvalReport& report);
std::string format_bias(const BiasSummary& bias);

}  // namespace coingrade
