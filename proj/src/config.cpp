#include "coingrade/config.hpp"

#include <fstream>
#include <set>

#include "coingrade/errors.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

using nlohmann::json;
using nlohmann::ordered_json;

void PipelineConfig::reseed(std::uint64_t new_seed) {
  seed = new_seed;
  smote.seed = derive_seed(seed, 101);
  augment.seed = derive_seed(seed, 102);
  ann.seed = derive_seed(seed, 103);
  split.seed = derive_seed(seed, 104);
}

void PipelineConfig::validate() const {
  preprocess.validate();
  if (wedge_slices != 4 && wedge_slices != 8)
    throw ConfigError("wedges.n_slices must be 4 or 8");
  if (!(brightness.sigma_h > 0.0))
    throw ConfigError("brightness.sigma_h must be > 0");
  if (smote.k_max < 1) throw ConfigError("smote.k_max must be >= 1");
  if (augment.noise_sigma < 0.0)
    throw ConfigError("augment.noise_sigma must be >= 0");
  ann.validate();
  svm.validate();
  split.validate();
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& scope) {
  if (!j.is_object())
    throw ConfigError("config section '" + scope + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" +
                        (scope.empty() ? key : scope + "." + key) + "'");
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ordered_json config_to_json(const PipelineConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["preprocess"] = {{"blur_sigma", cfg.preprocess.blur_sigma},
                     {"blur_kernel_radius", cfg.preprocess.blur_kernel_radius},
                     {"background_threshold", cfg.preprocess.background_threshold},
                     {"opening_radius", cfg.preprocess.opening_radius}};
  j["wedges"] = {{"n_slices", cfg.wedge_slices},
                 {"start_angle", cfg.wedge_start_angle}};
  j["brightness"] = {{"h0", cfg.brightness.h0},
                     {"sigma_h", cfg.brightness.sigma_h}};
  j["smote"] = {{"k_max", cfg.smote.k_max},
                {"fallback_noise_sigma", cfg.smote.fallback_noise_sigma}};
  j["augment"] = {{"noise_sigma", cfg.augment.noise_sigma}};
  j["ann"] = {{"hidden", cfg.ann.hidden},
              {"learning_rate", cfg.ann.learning_rate},
              {"beta1", cfg.ann.beta1},
              {"beta2", cfg.ann.beta2},
              {"epsilon", cfg.ann.epsilon},
              {"epochs", cfg.ann.epochs},
              {"batch_size", cfg.ann.batch_size},
              {"validation_fraction", cfg.ann.validation_fraction}};
  j["svm"] = {{"c", cfg.svm.c},
              {"gamma", cfg.svm.gamma > 0.0 ? json(cfg.svm.gamma) : json("scale")},
              {"kkt_tolerance", cfg.svm.kkt_tolerance},
              {"max_passes", cfg.svm.max_passes}};
  j["split"] = {{"mode", cfg.split.mode == SplitPlan::Mode::Holdout ? "holdout"
                                                                    : "kfold"},
                {"train_fraction", cfg.split.train_fraction},
                {"k", cfg.split.k}};
  return j;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig cfg;
  reject_unknown(j, {"seed", "jobs", "preprocess", "wedges", "brightness",
                     "smote", "augment", "ann", "svm", "split"},
                 "");
  get_if(j, "seed", cfg.seed);
  get_if(j, "jobs", cfg.jobs);

  if (j.contains("preprocess")) {
    const json& p = j.at("preprocess");
    reject_unknown(p, {"blur_sigma", "blur_kernel_radius",
                       "background_threshold", "opening_radius"},
                   "preprocess");
    get_if(p, "blur_sigma", cfg.preprocess.blur_sigma);
    get_if(p, "blur_kernel_radius", cfg.preprocess.blur_kernel_radius);
    get_if(p, "background_threshold", cfg.preprocess.background_threshold);
    get_if(p, "opening_radius", cfg.preprocess.opening_radius);
  }
  if (j.contains("wedges")) {
    const json& w = j.at("wedges");
    reject_unknown(w, {"n_slices", "start_angle"}, "wedges");
    get_if(w, "n_slices", cfg.wedge_slices);
    get_if(w, "start_angle", cfg.wedge_start_angle);
  }
  if (j.contains("brightness")) {
    const json& b = j.at("brightness");
    reject_unknown(b, {"h0", "sigma_h"}, "brightness");
    get_if(b, "h0", cfg.brightness.h0);
    get_if(b, "sigma_h", cfg.brightness.sigma_h);
  }
  if (j.contains("smote")) {
    const json& s = j.at("smote");
    reject_unknown(s, {"k_max", "fallback_noise_sigma"}, "smote");
    get_if(s, "k_max", cfg.smote.k_max);
    get_if(s, "fallback_noise_sigma", cfg.smote.fallback_noise_sigma);
  }
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    reject_unknown(a, {"noise_sigma"}, "augment");
    get_if(a, "noise_sigma", cfg.augment.noise_sigma);
  }
  if (j.contains("ann")) {
    const json& a = j.at("ann");
    reject_unknown(a,
                   {"hidden", "learning_rate", "beta1", "beta2", "epsilon",
                    "epochs", "batch_size", "validation_fraction"},
                   "ann");
    get_if(a, "hidden", cfg.ann.hidden);
    get_if(a, "learning_rate", cfg.ann.learning_rate);
    get_if(a, "beta1", cfg.ann.beta1);
    get_if(a, "beta2", cfg.ann.beta2);
    get_if(a, "epsilon", cfg.ann.epsilon);
    get_if(a, "epochs", cfg.ann.epochs);
    get_if(a, "batch_size", cfg.ann.batch_size);
    get_if(a, "validation_fraction", cfg.ann.validation_fraction);
  }
  if (j.contains("svm")) {
    const json& s = j.at("svm");
    reject_unknown(s, {"c", "gamma", "kkt_tolerance", "max_passes"}, "svm");
    get_if(s, "c", cfg.svm.c);
    if (s.contains("gamma")) {
      if (s.at("gamma").is_string()) {
        if (s.at("gamma").get<std::string>() != "scale")
          throw ConfigError("svm.gamma must be a positive number or \"scale\"");
        cfg.svm.gamma = 0.0;
      } else {
        cfg.svm.gamma = s.at("gamma").get<double>();
        if (!(cfg.svm.gamma > 0.0))
          throw ConfigError("svm.gamma must be a positive number or \"scale\"");
      }
    }
    get_if(s, "kkt_tolerance", cfg.svm.kkt_tolerance);
    get_if(s, "max_passes", cfg.svm.max_passes);
  }
  if (j.contains("split")) {
    const json& s = j.at("split");
    reject_unknown(s, {"mode", "train_fraction", "k"}, "split");
    if (s.contains("mode")) {
      const std::string mode = s.at("mode").get<std::string>();
      if (mode == "holdout")
        cfg.split.mode = SplitPlan::Mode::Holdout;
      else if (mode == "kfold")
        cfg.split.mode = SplitPlan::Mode::KFold;
      else
        throw ConfigError("split.mode must be holdout or kfold");
    }
    get_if(s, "train_fraction", cfg.split.train_fraction);
    get_if(s, "k", cfg.split.k);
  }

  cfg.reseed(cfg.seed);
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("config type error in " + path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write config: " + path.string());
  out << config_to_json(cfg).dump(2) << "\n";
}

}  // namespace coingrade
