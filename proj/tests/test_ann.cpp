#include <doctest.h>

#include <cmath>

#include "coingrade/ann.hpp"
#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

using namespace coingrade;

namespace {

MlpModel tiny_model(const std::vector<int>& dims, std::uint64_t seed) {
  MlpModel m;
  m.layer_dims = dims;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l], fan_out = dims[l + 1];
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    m.weights.emplace_back(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& w : m.weights.back()) w = rng.uniform(-limit, limit);
    m.biases.emplace_back(fan_out);
    for (double& b : m.biases.back()) b = rng.uniform(-0.1, 0.1);
  }
  for (int c = 0; c < dims.back(); ++c) m.label_map.push_back(50 + c);
  return m;
}

Dataset two_blobs(int per_class, int dim, double separation, std::uint64_t seed) {
  Rng rng(seed);
  Dataset out;
  for (int label : {0, 1})
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.x.resize(dim);
      for (double& v : s.x)
        v = rng.normal(label == 0 ? -separation / 2 : separation / 2, 1.0);
      s.label = label;
      out.push_back(std::move(s));
    }
  return out;
}

}  // namespace

TEST_CASE("forward: zero weights give uniform probabilities") {
  MlpModel m = tiny_model({6, 4, 3}, 1);
  for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0);
  std::vector<double> x = {1, -2, 3, 0.5, 0, -1};
  std::vector<double> p = forward(m, x);
  REQUIRE(p.size() == 3);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward: probabilities sum to one for 1000 random inputs") {
  MlpModel m = tiny_model({10, 16, 8, 5}, 2);
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(10);
    for (double& v : x) v = rng.normal(0.0, 3.0);
    std::vector<double> p = forward(m, x);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("forward: hand-computed 2-2-2 toy network") {
  MlpModel m;
  m.layer_dims = {2, 2, 2};
  m.weights = {{1.0, -1.0, 0.5, 2.0},   // W1 = [[1,-1],[0.5,2]]
               {1.0, 0.0, -1.0, 1.0}};  // W2 = [[1,0],[-1,1]]
  m.biases = {{0.1, -0.2}, {0.0, 0.3}};
  m.label_map = {0, 1};
  // x = (1, 0.5): z1 = (1*1 - 1*0.5 + 0.1, 0.5*1 + 2*0.5 - 0.2) = (0.6, 1.3)
  // ReLU keeps both. z2 = (0.6, -0.6 + 1.3 + 0.3) = (0.6, 1.0)
  std::vector<double> x = {1.0, 0.5};
  std::vector<double> p = forward(m, x);
  const double e1 = std::exp(0.6), e2 = std::exp(1.0);
  CHECK(p[0] == doctest::Approx(e1 / (e1 + e2)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(e2 / (e1 + e2)).epsilon(1e-12));
}

TEST_CASE("forward: shape mismatch throws") {
  MlpModel m = tiny_model({4, 3, 2}, 5);
  std::vector<double> x(5, 0.0);
  CHECK_THROWS_AS(forward(m, x), ShapeMismatchError);
}

TEST_CASE("predict: argmax with tie-break to lowest class") {
  MlpModel m = tiny_model({3, 2}, 7);
  for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : m.biases) std::fill(b.begin(), b.end(), 0.0);
  m.label_map = {58, 64};
  std::vector<double> x = {0.1, 0.2, 0.3};
  auto [grade, p] = predict(m, x);
  CHECK(grade == 58);  // uniform probabilities -> lowest grade
}

TEST_CASE("predict: softmax argmax invariant to logit shifts") {
  MlpModel m = tiny_model({5, 8, 4}, 9);
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(5);
    for (double& v : x) v = rng.normal();
    auto [grade_a, pa] = predict(m, x);
    MlpModel shifted = m;
    for (double& b : shifted.biases.back()) b += 3.7;  // constant logit shift
    auto [grade_b, pb] = predict(shifted, x);
    CHECK(grade_a == grade_b);
  }
}

TEST_CASE("gradient check: backprop agrees with finite differences") {
  Rng seeds(1234);
  for (int t = 0; t < 10; ++t) {
    MlpModel m = tiny_model({6, 8, 5, 3}, seeds.next_u64());  // < 500 params
    Rng rng(seeds.next_u64());
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (int i = 0; i < 7; ++i) {
      std::vector<double> x(6);
      for (double& v : x) v = rng.normal();
      xs.push_back(x);
      ys.push_back(int(rng.index(3)));
    }
    double err = gradient_check(m, xs, ys);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient check: negated gradient entry is caught") {
  MlpModel m = tiny_model({5, 6, 3}, 77);
  Rng rng(78);
  std::vector<std::vector<double>> xs;
  std::vector<int> ys;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> x(5);
    for (double& v : x) v = rng.normal();
    xs.push_back(x);
    ys.push_back(int(rng.index(3)));
  }
  std::vector<double> a = analytic_gradients(m, xs, ys);
  std::vector<double> n = numeric_gradients(m, xs, ys);
  // Corrupt the largest-magnitude gradient.
  std::size_t big = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::fabs(a[i]) > std::fabs(a[big])) big = i;
  a[big] = -a[big];
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max(std::fabs(a[i]) + std::fabs(n[i]), 1e-8);
    worst = std::max(worst, std::fabs(a[i] - n[i]) / denom);
  }
  CHECK(worst > 1e-1);
}

TEST_CASE("gradient check: near-perfect predictions give near-zero gradients") {
  // Huge final-layer bias on the true class drives the loss to ~0.
  MlpModel m = tiny_model({3, 4, 2}, 99);
  m.biases.back()[0] = 40.0;
  std::vector<std::vector<double>> xs = {{0.1, 0.2, 0.3}, {-0.2, 0.0, 0.1}};
  std::vector<int> ys = {0, 0};
  std::vector<double> g = analytic_gradients(m, xs, ys);
  for (double v : g) CHECK(std::fabs(v) < 1e-8);
}

TEST_CASE("train: linearly separable blobs reach 99% train accuracy") {
  Dataset data = two_blobs(60, 2, 6.0, 2024);
  TrainConfig cfg;
  cfg.hidden = {16, 8};
  cfg.epochs = 97;
  cfg.seed = 7;
  TrainHistory hist;
  MlpModel m = train(data, cfg, &hist);
  int correct = 0;
  for (const Sample& s : data)
    correct += predict(m, s.x).first == s.label;
  CHECK(double(correct) / double(data.size()) >= 0.99);
  CHECK(hist.epochs.size() == 97);
  CHECK(hist.epochs.back().train_loss < hist.epochs.front().train_loss);
}

TEST_CASE("train: same seed gives identical weights, different seed differs") {
  Dataset data = two_blobs(25, 3, 3.0, 555);
  TrainConfig cfg;
  cfg.hidden = {8};
  cfg.epochs = 5;
  cfg.seed = 42;
  MlpModel a = train(data, cfg);
  MlpModel b = train(data, cfg);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  cfg.seed = 43;
  MlpModel c = train(data, cfg);
  bool any_diff = false;
  for (std::size_t l = 0; l < a.weights.size(); ++l)
    any_diff |= a.weights[l] != c.weights[l];
  CHECK(any_diff);
}

TEST_CASE("train: label map round trip and sorted grades") {
  Rng rng(31);
  Dataset data;
  for (int grade : {66, 58, 62, 58, 66, 62, 58, 66, 62, 58, 66, 62}) {
    Sample s;
    s.x = {rng.normal(grade, 0.1), rng.normal(0, 1)};
    s.label = grade;
    data.push_back(std::move(s));
  }
  TrainConfig cfg;
  cfg.hidden = {4};
  cfg.epochs = 2;
  MlpModel m = train(data, cfg);
  REQUIRE(m.label_map == std::vector<int>{58, 62, 66});
  CHECK(m.num_classes() == 3);
}

TEST_CASE("train: single class rejected") {
  Dataset data = two_blobs(10, 2, 1.0, 9);
  for (Sample& s : data) s.label = 3;
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(data, cfg), SingleClassError);
}
