#include "coingrade/resample.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

static void refuse_test_rows(const Dataset& data, const char* op) {
  for (const Sample& s : data)
    if (s.split == Split::Test)
      throw TestLeakageError(std::string(op) +
                             ": refusing samples tagged with the test split");
}

static double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

SmoteResult smote(const Dataset& train, const SmoteConfig& cfg) {
  if (cfg.k_max < 1) throw ConfigError("smote: k_max must be >= 1");
  refuse_test_rows(train, "smote");

  SmoteResult res;
  res.samples = train;
  if (train.empty()) return res;

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.size(); ++i)
    by_class[train[i].label].push_back(i);

  std::size_t majority = 0;
  for (auto& [label, idx] : by_class) majority = std::max(majority, idx.size());

  // n_min over classes that can interpolate (>= 2 members); singleton
  // classes fall back to duplicate-with-noise and do not drive k.
  std::size_t n_min = majority;
  for (auto& [label, idx] : by_class)
    if (idx.size() >= 2) n_min = std::min(n_min, idx.size());
  res.k_used = static_cast<int>(
      std::min<std::size_t>(cfg.k_max, n_min > 0 ? n_min - 1 : 0));

  for (auto& [label, idx] : by_class) {
    const std::size_t count = idx.size();
    if (count >= majority) continue;
    const std::size_t need = majority - count;
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(label)));

    if (count == 1) {
      res.warnings.push_back("smote: class " + std::to_string(label) +
                             " has a single sample; duplicating with noise");
      const Sample& base = train[idx[0]];
      for (std::size_t j = 0; j < need; ++j) {
        Sample s = base;
        s.provenance = Provenance::Smote;
        s.id = base.id + "/smote" + std::to_string(j);
        for (double& v : s.x) v += rng.normal(0.0, cfg.fallback_noise_sigma);
        res.samples.push_back(std::move(s));
      }
      continue;
    }

    const int k = res.k_used;
    // k nearest same-class neighbors per member, ties broken by index.
    std::vector<std::vector<std::size_t>> neighbors(count);
    for (std::size_t a = 0; a < count; ++a) {
      std::vector<std::pair<double, std::size_t>> ds;
      ds.reserve(count - 1);
      for (std::size_t b = 0; b < count; ++b) {
        if (b == a) continue;
        ds.emplace_back(dist2(train[idx[a]].x, train[idx[b]].x), idx[b]);
      }
      std::sort(ds.begin(), ds.end());
      const std::size_t take = std::min<std::size_t>(k, ds.size());
      for (std::size_t t = 0; t < take; ++t)
        neighbors[a].push_back(ds[t].second);
    }

    for (std::size_t j = 0; j < need; ++j) {
      std::size_t a = rng.index(count);
      const auto& nn = neighbors[a];
      std::size_t b = nn[rng.index(nn.size())];
      double u = rng.uniform();
      const Sample& xa = train[idx[a]];
      const Sample& xb = train[b];
      Sample s;
      s.x.resize(xa.x.size());
      for (std::size_t d = 0; d < s.x.size(); ++d)
        s.x[d] = xa.x[d] + u * (xb.x[d] - xa.x[d]);
      s.label = label;
      s.provenance = Provenance::Smote;
      s.split = xa.split;
      s.id = xa.id + "/smote" + std::to_string(j);
      res.synthetic.push_back(
          {label, idx[a], b, u, res.samples.size()});
      res.samples.push_back(std::move(s));
    }
  }
  return res;
}

AugmentResult gaussian_augment(const Dataset& train, const AugmentConfig& cfg) {
  if (cfg.noise_sigma < 0.0)
    throw ConfigError("gaussian_augment: noise_sigma must be >= 0");
  refuse_test_rows(train, "gaussian_augment");

  AugmentResult res;
  res.samples = train;
  res.samples.reserve(train.size() * 2);
  Rng rng(cfg.seed);
  for (const Sample& base : train) {
    Sample s = base;
    s.provenance = Provenance::Noise;
    s.id = base.id + "/noise";
    for (double& v : s.x) v += rng.normal(0.0, cfg.noise_sigma);
    res.samples.push_back(std::move(s));
  }
  return res;
}

}  // namespace coingrade
