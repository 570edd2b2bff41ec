#include "coingrade/svm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coingrade/errors.hpp"

namespace coingrade {

void SvmConfig::validate() const {
  if (!(c > 0.0)) throw ConfigError("svm: C must be > 0");
  if (!(kkt_tolerance > 0.0)) throw ConfigError("svm: kkt_tolerance must be > 0");
  if (max_passes < 1) throw ConfigError("svm: max_passes must be >= 1");
}

double rbf_kernel(std::span<const double> a, std::span<const double> b,
                  double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d2 += t * t;
  }
  return std::exp(-gamma * d2);
}

double resolve_gamma_scale(const Dataset& data) {
  if (data.empty()) throw DataError("svm: empty training set");
  const std::size_t d = data[0].x.size();
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  for (const Sample& s : data)
    for (double v : s.x) {
      sum += v;
      sumsq += v * v;
      ++n;
    }
  const double mean = sum / double(n);
  const double var = sumsq / double(n) - mean * mean;
  if (var <= 0.0) return 1.0 / double(d);
  return 1.0 / (double(d) * var);
}

namespace {

// Platt-style SMO over one binary problem with a full kernel matrix and a
// full error cache. Problems here are at most a few hundred points.
class Smo {
 public:
  Smo(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
      double c, double gamma, double tol, int max_passes)
      : x_(x), y_(y), n_(x.size()), c_(c), tol_(tol), max_passes_(max_passes) {
    kernel_.assign(n_ * n_, 0.0);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j <= i; ++j) {
        double k = rbf_kernel(x_[i], x_[j], gamma);
        kernel_[i * n_ + j] = k;
        kernel_[j * n_ + i] = k;
      }
    alpha_.assign(n_, 0.0);
    b_ = 0.0;
    // f(x_i) starts at 0 for all i, so E_i = -y_i.
    error_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -double(y_[i]);
  }

  void run() {
    int num_changed = 0;
    bool examine_all = true;
    int passes = 0;
    while ((num_changed > 0 || examine_all) && passes < max_passes_) {
      num_changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_; ++i) num_changed += examine(i);
      } else {
        for (std::size_t i = 0; i < n_; ++i)
          if (alpha_[i] > 0.0 && alpha_[i] < c_) num_changed += examine(i);
      }
      if (examine_all)
        examine_all = false;
      else if (num_changed == 0)
        examine_all = true;
      ++passes;
    }
  }

  BinarySvmSolution solution() const {
    BinarySvmSolution s;
    s.alpha = alpha_;
    s.y = y_;
    s.bias = b_;
    return s;
  }

 private:
  double k(std::size_t i, std::size_t j) const { return kernel_[i * n_ + j]; }

  int examine(std::size_t i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double e2 = error_[i2];
    const double r2 = e2 * y2;
    if ((r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0)) {
      // Second-choice heuristic: largest |E1 - E2| among non-bound points.
      std::size_t best = n_;
      double best_gap = -1.0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (i == i2 || alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
        double gap = std::fabs(error_[i] - e2);
        if (gap > best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      if (best < n_ && take_step(best, i2)) return 1;
      // Then all non-bound, then everything, from a rotating start.
      for (std::size_t off = 0; off < n_; ++off) {
        std::size_t i1 = (i2 + 1 + off) % n_;
        if (alpha_[i1] > 0.0 && alpha_[i1] < c_ && take_step(i1, i2)) return 1;
      }
      for (std::size_t off = 0; off < n_; ++off) {
        std::size_t i1 = (i2 + 1 + off) % n_;
        if (take_step(i1, i2)) return 1;
      }
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (lo >= hi) return false;

    const double k11 = k(i1, i1), k12 = k(i1, i2), k22 = k(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > 1e-12) {
      a2_new = a2 + y2 * (e1 - e2) / eta;
      a2_new = std::clamp(a2_new, lo, hi);
    } else {
      // Flat direction: evaluate the (minimization) objective at both clip
      // ends. bp restates the bias in the u = sum - b convention.
      const double bp = -b_;
      const double f1 = y1 * (e1 + bp) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 + bp) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double psi_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double psi_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (psi_lo < psi_hi - 1e-12)
        a2_new = lo;
      else if (psi_lo > psi_hi + 1e-12)
        a2_new = hi;
      else
        return false;
    }
    if (std::fabs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    // Numerical guard.
    a1_new = std::clamp(a1_new, 0.0, c_);

    const double d1 = y1 * (a1_new - a1);
    const double d2 = y2 * (a2_new - a2);
    // Choose b so a free multiplier sits exactly on its margin.
    const double b1 = b_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = b_ - e2 - d1 * k12 - d2 * k22;
    double b_new;
    if (a1_new > 0.0 && a1_new < c_)
      b_new = b1;
    else if (a2_new > 0.0 && a2_new < c_)
      b_new = b2;
    else
      b_new = 0.5 * (b1 + b2);

    for (std::size_t i = 0; i < n_; ++i)
      error_[i] += d1 * k(i1, i) + d2 * k(i2, i) + (b_new - b_);
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    b_ = b_new;
    return true;
  }

  const std::vector<std::vector<double>>& x_;
  std::vector<int> y_;
  std::size_t n_;
  double c_, tol_;
  int max_passes_;
  std::vector<double> kernel_;
  std::vector<double> alpha_;
  std::vector<double> error_;  // E_i = f(x_i) - y_i
  double b_;
};

}  // namespace

BinarySvmSolution smo_solve(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& y, double c, double gamma,
                            double tolerance, int max_passes) {
  Smo smo(x, y, c, gamma, tolerance, max_passes);
  smo.run();
  return smo.solution();
}

SvmModel svm_train(const Dataset& data, const SvmConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw DataError("svm: empty training set");

  std::map<int, std::vector<std::size_t>> by_grade;
  for (std::size_t i = 0; i < data.size(); ++i)
    by_grade[data[i].label].push_back(i);
  if (by_grade.size() < 2)
    throw SingleClassError("svm: training data contains a single class");

  SvmModel model;
  model.c = cfg.c;
  model.gamma = cfg.gamma > 0.0 ? cfg.gamma : resolve_gamma_scale(data);
  for (auto& [grade, idx] : by_grade) model.label_map.push_back(grade);

  // Pool of support vectors shared across pairs; -1 = not pooled yet.
  std::vector<int> pooled(data.size(), -1);
  auto pool_index = [&](std::size_t row) {
    if (pooled[row] < 0) {
      pooled[row] = static_cast<int>(model.support_vectors.size());
      model.support_vectors.push_back(data[row].x);
    }
    return pooled[row];
  };

  const int g_count = static_cast<int>(model.label_map.size());
  std::vector<std::pair<int, int>> pair_list;
  for (int a = 0; a < g_count; ++a)
    for (int b = a + 1; b < g_count; ++b) pair_list.emplace_back(a, b);

  std::vector<BinarySvmSolution> solutions(pair_list.size());
  std::vector<std::vector<std::size_t>> pair_rows(pair_list.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t p = 0; p < pair_list.size(); ++p) {
    const int grade_pos = model.label_map[pair_list[p].first];
    const int grade_neg = model.label_map[pair_list[p].second];
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    std::vector<std::size_t> rows;
    for (std::size_t i : by_grade.at(grade_pos)) {
      xs.push_back(data[i].x);
      ys.push_back(+1);
      rows.push_back(i);
    }
    for (std::size_t i : by_grade.at(grade_neg)) {
      xs.push_back(data[i].x);
      ys.push_back(-1);
      rows.push_back(i);
    }
    solutions[p] =
        smo_solve(xs, ys, cfg.c, model.gamma, cfg.kkt_tolerance, cfg.max_passes);
    pair_rows[p] = std::move(rows);
  }

  for (std::size_t p = 0; p < pair_list.size(); ++p) {
    PairClassifier pc;
    pc.grade_pos = model.label_map[pair_list[p].first];
    pc.grade_neg = model.label_map[pair_list[p].second];
    pc.bias = solutions[p].bias;
    for (std::size_t i = 0; i < solutions[p].alpha.size(); ++i) {
      const double a = solutions[p].alpha[i];
      if (a <= 1e-12) continue;
      pc.sv_index.push_back(pool_index(pair_rows[p][i]));
      pc.coef.push_back(a * solutions[p].y[i]);
    }
    model.pairs.push_back(std::move(pc));
  }
  return model;
}

double pair_decision(const SvmModel& model, const PairClassifier& pair,
                     std::span<const double> x) {
  double f = pair.bias;
  for (std::size_t i = 0; i < pair.sv_index.size(); ++i)
    f += pair.coef[i] *
         rbf_kernel(model.support_vectors[pair.sv_index[i]], x, model.gamma);
  return f;
}

int svm_predict(const SvmModel& model, std::span<const double> x) {
  if (!model.support_vectors.empty() &&
      model.support_vectors[0].size() != x.size())
    throw ShapeMismatchError("svm_predict: feature dimension mismatch");
  std::map<int, int> votes;
  for (const PairClassifier& pc : model.pairs) {
    double f = pair_decision(model, pc, x);
    votes[f >= 0.0 ? pc.grade_pos : pc.grade_neg]++;
  }
  int best_grade = model.label_map.front();
  int best_votes = -1;
  for (int grade : model.label_map) {
    auto it = votes.find(grade);
    int v = it == votes.end() ? 0 : it->second;
    if (v > best_votes) {  // ascending scan: ties keep the lowest grade
      best_votes = v;
      best_grade = grade;
    }
  }
  return best_grade;
}

}  // namespace coingrade
