#include "coingrade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

void SplitPlan::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split: train_fraction must lie in (0,1)");
  if (k < 2) throw ConfigError("split: k must be >= 2");
}

SplitResult stratified_split(std::span<const int> labels, const SplitPlan& plan) {
  plan.validate();
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);

  const double test_fraction = 1.0 - plan.train_fraction;
  SplitResult out;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(idx);
    std::size_t want_test = 0;
    if (idx.size() >= 2) {
      want_test = static_cast<std::size_t>(
          std::floor(double(idx.size()) * test_fraction + 0.5));
      want_test = std::min(want_test, idx.size() - 1);
    }
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < want_test ? out.test : out.train).push_back(idx[i]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::vector<std::size_t>> stratified_kfold(
    std::span<const int> labels, int k, std::uint64_t seed,
    std::vector<std::string>* warnings) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);

  std::size_t smallest = labels.size();
  for (auto& [label, idx] : by_class) smallest = std::min(smallest, idx.size());

  std::vector<std::vector<std::size_t>> folds(k);
  if (smallest >= static_cast<std::size_t>(k)) {
    for (auto& [label, idx] : by_class) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
      rng.shuffle(idx);
      for (std::size_t i = 0; i < idx.size(); ++i)
        folds[i % k].push_back(idx[i]);
    }
  } else {
    if (warnings)
      warnings->push_back(
          "kfold: smallest class has fewer members than k; folds are "
          "unstratified");
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    Rng rng(seed);
    rng.shuffle(all);
    for (std::size_t i = 0; i < all.size(); ++i) folds[i % k].push_back(all[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

static void check_lengths(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size())
    throw LengthMismatchError("prediction/truth length mismatch");
  if (pred.empty()) throw LengthMismatchError("empty prediction set");
}

double tolerance_accuracy(std::span<const int> pred, std::span<const int> truth,
                          int t) {
  check_lengths(pred, truth);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    hit += std::abs(pred[i] - truth[i]) <= t;
  return double(hit) / double(pred.size());
}

EvalReport classification_report(std::span<const int> pred,
                                 std::span<const int> truth) {
  check_lengths(pred, truth);
  std::set<int> universe(pred.begin(), pred.end());
  universe.insert(truth.begin(), truth.end());

  EvalReport rep;
  rep.n = static_cast<int>(pred.size());
  rep.grades.assign(universe.begin(), universe.end());
  std::map<int, int> pos;
  for (std::size_t i = 0; i < rep.grades.size(); ++i)
    pos[rep.grades[i]] = static_cast<int>(i);

  const int g = static_cast<int>(rep.grades.size());
  rep.confusion.assign(g, std::vector<int>(g, 0));
  for (std::size_t i = 0; i < pred.size(); ++i)
    rep.confusion[pos[truth[i]]][pos[pred[i]]]++;

  double wp = 0.0, wr = 0.0, wf = 0.0;
  for (int gi = 0; gi < g; ++gi) {
    const int tp = rep.confusion[gi][gi];
    int support = 0, predicted = 0;
    for (int gj = 0; gj < g; ++gj) {
      support += rep.confusion[gi][gj];
      predicted += rep.confusion[gj][gi];
    }
    GradeRow row;
    row.grade = rep.grades[gi];
    row.support = support;
    row.precision = predicted > 0 ? double(tp) / predicted : 0.0;
    row.recall = support > 0 ? double(tp) / support : 0.0;
    row.f1 = (row.precision + row.recall) > 0.0
                 ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    rep.per_grade.push_back(row);
    wp += row.precision * support;
    wr += row.recall * support;
    wf += row.f1 * support;
  }
  rep.weighted_precision = wp / rep.n;
  rep.weighted_recall = wr / rep.n;
  rep.weighted_f1 = wf / rep.n;
  rep.exact_accuracy = tolerance_accuracy(pred, truth, 0);
  for (int t : {1, 2, 3}) rep.tol_accuracy[t] = tolerance_accuracy(pred, truth, t);
  return rep;
}

BiasSummary bias_summary(std::span<const int> pred, std::span<const int> truth) {
  check_lengths(pred, truth);
  BiasSummary out;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const int err = pred[i] - truth[i];
    out.histogram[err]++;
    sum += err;
  }
  out.mean_signed_error = sum / double(pred.size());
  return out;
}

CvResult cross_validate(const Dataset& data, int k, std::uint64_t seed,
                        const FoldTrainer& trainer) {
  std::vector<int> labels;
  for (const Sample& s : data) labels.push_back(s.label);

  CvResult res;
  auto folds = stratified_kfold(labels, k, seed, &res.warnings);

  std::vector<int> pooled_pred, pooled_truth;
  for (int f = 0; f < k; ++f) {
    std::vector<char> in_test(data.size(), 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    Dataset train, test;
    for (std::size_t i = 0; i < data.size(); ++i) {
      Sample s = data[i];
      if (in_test[i]) {
        s.split = Split::Test;
        test.push_back(std::move(s));
      } else {
        s.split = Split::Train;
        train.push_back(std::move(s));
      }
    }
    if (test.empty()) continue;
    std::vector<int> pred = trainer(train, test);
    if (pred.size() != test.size())
      throw LengthMismatchError("cross_validate: trainer returned wrong count");
    FoldOutcome fo;
    fo.pred = pred;
    for (const Sample& s : test) fo.truth.push_back(s.label);
    fo.report = classification_report(fo.pred, fo.truth);
    pooled_pred.insert(pooled_pred.end(), fo.pred.begin(), fo.pred.end());
    pooled_truth.insert(pooled_truth.end(), fo.truth.begin(), fo.truth.end());
    res.folds.push_back(std::move(fo));
  }
  res.aggregate = classification_report(pooled_pred, pooled_truth);
  return res;
}

std::string format_report_text(const EvalReport& report) {
  std::ostringstream os;
  char line[128];
  os << "Grade  Precision  Recall    F1  Support\n";
  for (const GradeRow& r : report.per_grade) {
    std::snprintf(line, sizeof(line), "%5d  %9.2f  %6.2f  %4.2f  %7d\n",
                  r.grade, r.precision, r.recall, r.f1, r.support);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-22s  %6s  %4.2f  %7d\n", "Accuracy", "",
                report.exact_accuracy, report.n);
  os << line;
  std::snprintf(line, sizeof(line), "%-5s  %9.2f  %6.2f  %4.2f  %7d\n",
                "Wavg", report.weighted_precision, report.weighted_recall,
                report.weighted_f1, report.n);
  os << line;
  return os.str();
}

std::string format_tolerance_table(const EvalReport& report) {
  std::ostringstream os;
  char line[96];
  std::snprintf(line, sizeof(line), "Exact Accuracy  %6.4f\n",
                report.exact_accuracy);
  os << line;
  for (const auto& [t, acc] : report.tol_accuracy) {
    std::snprintf(line, sizeof(line), "Accuracy (+/-%d)  %6.4f\n", t, acc);
    os << line;
  }
  return os.str();
}

std::string format_confusion(const EvalReport& report) {
  std::ostringstream os;
  os << "truth\\pred";
  for (int g : report.grades) os << "  " << g;
  os << "\n";
  for (std::size_t i = 0; i < report.grades.size(); ++i) {
    os << report.grades[i];
    for (std::size_t j = 0; j < report.grades.size(); ++j)
      os << "  " << report.confusion[i][j];
    os << "\n";
  }
  return os.str();
}

std::string format_bias(const BiasSummary& bias) {
  std::ostringstream os;
  char line[96];
  std::snprintf(line, sizeof(line), "mean signed error  %+.4f\n",
                bias.mean_signed_error);
  os << line;
  for (const auto& [err, count] : bias.histogram) {
    std::snprintf(line, sizeof(line), "%+3d  %d\n", err, count);
    os << line;
  }
  return os.str();
}

}  // namespace coingrade
