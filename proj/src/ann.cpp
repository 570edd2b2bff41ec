#include "coingrade/ann.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("ann: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("ann: batch_size must be >= 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("ann: validation_fraction must lie in (0,1)");
  if (!(learning_rate > 0.0)) throw ConfigError("ann: learning_rate must be > 0");
  for (int h : hidden)
    if (h < 1) throw ConfigError("ann: hidden layer sizes must be >= 1");
}

namespace {

// z = W x + b for one layer; W row-major [out][in].
void affine(const std::vector<double>& w, const std::vector<double>& b,
            const double* x, int in, int out, double* z) {
  for (int o = 0; o < out; ++o) {
    const double* row = w.data() + static_cast<std::size_t>(o) * in;
    double s = b[o];
    for (int i = 0; i < in; ++i) s += row[i] * x[i];
    z[o] = s;
  }
}

void softmax_inplace(std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

struct Activations {
  // a[0] is the input; a[L] the softmax output.
  std::vector<std::vector<double>> a;
};

Activations forward_pass(const MlpModel& m, const double* x) {
  const int L = static_cast<int>(m.weights.size());
  Activations act;
  act.a.resize(L + 1);
  act.a[0].assign(x, x + m.layer_dims[0]);
  for (int l = 0; l < L; ++l) {
    act.a[l + 1].resize(m.layer_dims[l + 1]);
    affine(m.weights[l], m.biases[l], act.a[l].data(), m.layer_dims[l],
           m.layer_dims[l + 1], act.a[l + 1].data());
    if (l + 1 < L) {
      for (double& v : act.a[l + 1]) v = v > 0.0 ? v : 0.0;  // ReLU
    } else {
      softmax_inplace(act.a[l + 1]);
    }
  }
  return act;
}

std::size_t param_count(const MlpModel& m) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < m.weights.size(); ++l)
    n += m.weights[l].size() + m.biases[l].size();
  return n;
}

struct Gradients {
  std::vector<std::vector<double>> dw, db;

  explicit Gradients(const MlpModel& m) {
    dw.resize(m.weights.size());
    db.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      dw[l].assign(m.weights[l].size(), 0.0);
      db[l].assign(m.biases[l].size(), 0.0);
    }
  }
};

// Mean cross-entropy gradient over the batch. Parallel over rows of each
// weight matrix; the batch loop stays inside each row so accumulation order
// is fixed no matter how many threads run.
void backward_batch(const MlpModel& m,
                    const std::vector<const double*>& xs,
                    const std::vector<int>& targets, Gradients& g,
                    double* loss_out, int* correct_out) {
  const int L = static_cast<int>(m.weights.size());
  const std::size_t B = xs.size();

  // Forward all samples, keeping activations and output deltas.
  std::vector<Activations> acts(B);
  std::vector<std::vector<std::vector<double>>> deltas(B);
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < B; ++s) {
    acts[s] = forward_pass(m, xs[s]);
    const std::vector<double>& p = acts[s].a[L];

    // delta[L-1] = p - onehot; hidden deltas via W^T delta masked by ReLU.
    deltas[s].resize(L);
    deltas[s][L - 1] = p;
    deltas[s][L - 1][targets[s]] -= 1.0;
    for (int l = L - 2; l >= 0; --l) {
      const int out = m.layer_dims[l + 1];
      const int next = m.layer_dims[l + 2];
      deltas[s][l].assign(out, 0.0);
      for (int o = 0; o < out; ++o) {
        if (acts[s].a[l + 1][o] <= 0.0) continue;  // ReLU off
        double acc = 0.0;
        for (int n = 0; n < next; ++n)
          acc += m.weights[l + 1][static_cast<std::size_t>(n) * out + o] *
                 deltas[s][l + 1][n];
        deltas[s][l][o] = acc;
      }
    }
  }

  // Loss and accuracy in fixed sample order, independent of thread count.
  double loss = 0.0;
  int correct = 0;
  for (std::size_t s = 0; s < B; ++s) {
    const std::vector<double>& p = acts[s].a[L];
    loss += -std::log(std::max(p[targets[s]], 1e-300));
    int arg = 0;
    for (int c = 1; c < static_cast<int>(p.size()); ++c)
      if (p[c] > p[arg]) arg = c;
    correct += (arg == targets[s]);
  }

  const double inv_b = 1.0 / double(B);
  for (int l = 0; l < L; ++l) {
    const int in = m.layer_dims[l];
    const int out = m.layer_dims[l + 1];
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
      double* row = g.dw[l].data() + static_cast<std::size_t>(o) * in;
      double db = 0.0;
      for (std::size_t s = 0; s < B; ++s) {
        const double d = deltas[s][l][o];
        db += d;
        const double* a = acts[s].a[l].data();
        for (int i = 0; i < in; ++i) row[i] += d * a[i] * inv_b;
      }
      g.db[l][o] = db * inv_b;
    }
  }

  if (loss_out) *loss_out = loss * inv_b;
  if (correct_out) *correct_out = correct;
}

}  // namespace

std::vector<double> forward(const MlpModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.input_dim())
    throw ShapeMismatchError("forward: input length " +
                             std::to_string(x.size()) + ", expected " +
                             std::to_string(model.input_dim()));
  return forward_pass(model, x.data()).a.back();
}

std::pair<int, std::vector<double>> predict(const MlpModel& model,
                                            std::span<const double> x) {
  std::vector<double> p = forward(model, x);
  int arg = 0;
  for (int c = 1; c < static_cast<int>(p.size()); ++c)
    if (p[c] > p[arg]) arg = c;
  return {model.label_map[arg], std::move(p)};
}

double batch_loss(const MlpModel& model,
                  const std::vector<std::vector<double>>& xs,
                  const std::vector<int>& class_targets) {
  double loss = 0.0;
  for (std::size_t s = 0; s < xs.size(); ++s) {
    auto p = forward_pass(model, xs[s].data()).a.back();
    loss += -std::log(std::max(p[class_targets[s]], 1e-300));
  }
  return loss / double(xs.size());
}

std::vector<double> analytic_gradients(const MlpModel& model,
                                       const std::vector<std::vector<double>>& xs,
                                       const std::vector<int>& class_targets) {
  Gradients g(model);
  std::vector<const double*> ptrs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ptrs[i] = xs[i].data();
  backward_batch(model, ptrs, class_targets, g, nullptr, nullptr);
  std::vector<double> flat;
  flat.reserve(param_count(model));
  for (std::size_t l = 0; l < g.dw.size(); ++l) {
    flat.insert(flat.end(), g.dw[l].begin(), g.dw[l].end());
    flat.insert(flat.end(), g.db[l].begin(), g.db[l].end());
  }
  return flat;
}

std::vector<double> numeric_gradients(const MlpModel& model,
                                      const std::vector<std::vector<double>>& xs,
                                      const std::vector<int>& class_targets,
                                      double h) {
  MlpModel probe = model;
  std::vector<double> flat;
  flat.reserve(param_count(model));
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    for (std::vector<double>* block : {&probe.weights[l], &probe.biases[l]}) {
      for (double& theta : *block) {
        const double saved = theta;
        theta = saved + h;
        double lp = batch_loss(probe, xs, class_targets);
        theta = saved - h;
        double lm = batch_loss(probe, xs, class_targets);
        theta = saved;
        flat.push_back((lp - lm) / (2.0 * h));
      }
    }
  }
  return flat;
}

double gradient_check(const MlpModel& model,
                      const std::vector<std::vector<double>>& xs,
                      const std::vector<int>& class_targets, double h) {
  std::vector<double> a = analytic_gradients(model, xs, class_targets);
  std::vector<double> n = numeric_gradients(model, xs, class_targets, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max(std::fabs(a[i]) + std::fabs(n[i]), 1e-8);
    worst = std::max(worst, std::fabs(a[i] - n[i]) / denom);
  }
  return worst;
}

namespace {

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long t = 0;

  explicit AdamState(const MlpModel& m) {
    mw.resize(m.weights.size());
    vw.resize(m.weights.size());
    mb.resize(m.biases.size());
    vb.resize(m.biases.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      mw[l].assign(m.weights[l].size(), 0.0);
      vw[l].assign(m.weights[l].size(), 0.0);
      mb[l].assign(m.biases[l].size(), 0.0);
      vb[l].assign(m.biases[l].size(), 0.0);
    }
  }
};

void adam_step(MlpModel& m, const Gradients& g, AdamState& st,
               const TrainConfig& cfg) {
  ++st.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, st.t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, st.t);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    auto update = [&](std::vector<double>& theta, const std::vector<double>& grad,
                      std::vector<double>& mm, std::vector<double>& vv) {
#pragma omp parallel for schedule(static)
      for (std::size_t i = 0; i < theta.size(); ++i) {
        mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * grad[i];
        vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = mm[i] / bc1;
        const double vhat = vv[i] / bc2;
        theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    };
    update(m.weights[l], g.dw[l], st.mw[l], st.vw[l]);
    update(m.biases[l], g.db[l], st.mb[l], st.vb[l]);
  }
}

// Stratified validation indices: round-half-up share per class, capped so
// every class keeps at least one training sample. Falls back to an
// unstratified cut (with a warning) when some class has fewer than 2 rows.
std::vector<std::size_t> pick_validation(const Dataset& data, double fraction,
                                         Rng& rng,
                                         std::vector<std::string>& warnings) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class[data[i].label].push_back(i);

  bool stratifiable = true;
  for (auto& [label, idx] : by_class)
    if (idx.size() < 2) stratifiable = false;

  std::vector<std::size_t> val;
  if (stratifiable) {
    for (auto& [label, idx] : by_class) {
      rng.shuffle(idx);
      std::size_t want = static_cast<std::size_t>(
          std::floor(double(idx.size()) * fraction + 0.5));
      want = std::min(want, idx.size() - 1);
      val.insert(val.end(), idx.begin(), idx.begin() + want);
    }
  } else {
    warnings.push_back(
        "ann: some class has < 2 samples; validation split is unstratified");
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    std::size_t want = static_cast<std::size_t>(
        std::floor(double(all.size()) * fraction + 0.5));
    want = std::min(want, all.size() > 1 ? all.size() - 1 : std::size_t{0});
    val.assign(all.begin(), all.begin() + want);
  }
  std::sort(val.begin(), val.end());
  return val;
}

}  // namespace

MlpModel train(const Dataset& data, const TrainConfig& cfg,
               TrainHistory* history, const StandardizationStats* stats) {
  cfg.validate();
  if (data.empty()) throw DataError("ann: empty training set");
  const int dim = static_cast<int>(data[0].x.size());
  for (const Sample& s : data)
    if (static_cast<int>(s.x.size()) != dim)
      throw ShapeMismatchError("ann: inconsistent feature dimensions");

  std::vector<int> grades;
  for (const Sample& s : data) grades.push_back(s.label);
  std::sort(grades.begin(), grades.end());
  grades.erase(std::unique(grades.begin(), grades.end()), grades.end());
  const int C = static_cast<int>(grades.size());
  if (C < 2) throw SingleClassError("ann: need at least 2 classes");
  if (data.size() < static_cast<std::size_t>(C) + 1)
    throw DataError("ann: need at least C+1 samples");

  std::map<int, int> grade_to_class;
  for (int c = 0; c < C; ++c) grade_to_class[grades[c]] = c;

  MlpModel m;
  m.layer_dims.push_back(dim);
  for (int h : cfg.hidden) m.layer_dims.push_back(h);
  m.layer_dims.push_back(C);
  m.label_map = grades;
  if (stats) m.stats = *stats;

  Rng rng(cfg.seed);
  const int L = static_cast<int>(m.layer_dims.size()) - 1;
  m.weights.resize(L);
  m.biases.resize(L);
  for (int l = 0; l < L; ++l) {
    const int fan_in = m.layer_dims[l], fan_out = m.layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
    m.weights[l].resize(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& w : m.weights[l]) w = rng.uniform(-limit, limit);
    m.biases[l].assign(fan_out, 0.0);
  }

  TrainHistory local;
  TrainHistory& hist = history ? *history : local;

  std::vector<std::size_t> val_idx =
      pick_validation(data, cfg.validation_fraction, rng, hist.warnings);
  std::vector<char> is_val(data.size(), 0);
  for (std::size_t i : val_idx) is_val[i] = 1;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!is_val[i]) train_idx.push_back(i);

  AdamState adam(m);
  std::vector<const double*> batch_x;
  std::vector<int> batch_y;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    long epoch_correct = 0;
    std::size_t seen = 0;

    for (std::size_t start = 0; start < train_idx.size();
         start += cfg.batch_size) {
      const std::size_t end =
          std::min(train_idx.size(), start + cfg.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch_x.push_back(data[train_idx[i]].x.data());
        batch_y.push_back(grade_to_class[data[train_idx[i]].label]);
      }
      Gradients g(m);
      double loss = 0.0;
      int correct = 0;
      backward_batch(m, batch_x, batch_y, g, &loss, &correct);
      adam_step(m, g, adam, cfg);
      epoch_loss += loss * double(batch_x.size());
      epoch_correct += correct;
      seen += batch_x.size();
    }

    EpochStats es;
    es.train_loss = seen ? epoch_loss / double(seen) : 0.0;
    es.train_accuracy = seen ? double(epoch_correct) / double(seen) : 0.0;
    if (!val_idx.empty()) {
      double vloss = 0.0;
      long vcorrect = 0;
      for (std::size_t i : val_idx) {
        auto p = forward_pass(m, data[i].x.data()).a.back();
        int cls = grade_to_class[data[i].label];
        vloss += -std::log(std::max(p[cls], 1e-300));
        int arg = 0;
        for (int c = 1; c < C; ++c)
          if (p[c] > p[arg]) arg = c;
        vcorrect += (arg == cls);
      }
      es.val_loss = vloss / double(val_idx.size());
      es.val_accuracy = double(vcorrect) / double(val_idx.size());
    }
    hist.epochs.push_back(es);
  }
  return m;
}

}  // namespace coingrade
