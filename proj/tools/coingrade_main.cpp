// coingrade — feature-based coin grading pipeline.
//
// Subcommands: synth, extract, train, evaluate, predict. Every run is a
// deterministic function of its inputs, the config file, and --seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coingrade/config.hpp"
#include "coingrade/dataset.hpp"
#include "coingrade/errors.hpp"
#include "coingrade/metrics.hpp"
#include "coingrade/parallel.hpp"
#include "coingrade/pipeline.hpp"

namespace fs = std::filesystem;
using namespace coingrade;

namespace {

// Exit codes: 0 ok, 2 config/usage, 3 data, 4 runtime.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
};

PipelineConfig resolve_config(const GlobalOpts& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path);
  if (g.seed) cfg.reseed(*g.seed);
  if (g.jobs > 0) cfg.jobs = g.jobs;
  set_max_jobs(cfg.jobs);
  return cfg;
}

void print_stage_stats(const std::vector<StageTimes>& times, bool with_forward) {
  auto stat_line = [&](const char* name, auto pick) {
    std::vector<double> v;
    v.reserve(times.size());
    for (const StageTimes& t : times) v.push_back(pick(t) * 1000.0);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double p95 = percentile(v, 0.95);
    std::printf("  %-38s mean %8.1f ms   p95 %8.1f ms\n", name, mean, p95);
  };
  std::printf("Per-coin stage timings (%zu coins):\n", times.size());
  stat_line("Image preprocessing", [](const StageTimes& t) { return t.preprocess; });
  stat_line("Sobel edge detection", [](const StageTimes& t) { return t.sobel; });
  stat_line("Wedge masking and feature extraction",
            [](const StageTimes& t) { return t.wedges; });
  stat_line("HSV and brightness computation",
            [](const StageTimes& t) { return t.hsv; });
  if (with_forward)
    stat_line("Classifier forward pass",
              [](const StageTimes& t) { return t.forward; });
  stat_line("Total", [](const StageTimes& t) { return t.total; });
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

// Split selection for train/evaluate: explicit tags in the cache win;
// otherwise the config's holdout plan decides, deterministically.
void resolve_split(std::vector<CacheRecord>& records, const PipelineConfig& cfg) {
  bool any_tagged = false;
  for (const CacheRecord& r : records) any_tagged |= r.split != Split::None;
  if (any_tagged) return;
  std::vector<int> labels;
  for (const CacheRecord& r : records) labels.push_back(r.grade);
  SplitPlan plan = cfg.split;
  plan.mode = SplitPlan::Mode::Holdout;
  SplitResult split = stratified_split(labels, plan);
  for (std::size_t i : split.train) records[i].split = Split::Train;
  for (std::size_t i : split.test) records[i].split = Split::Test;
}

Dataset rows_with_split(const std::vector<CacheRecord>& records, Split want) {
  Dataset out;
  for (const CacheRecord& r : records)
    if (r.split == want) {
      Sample s;
      s.x = r.features;
      s.label = r.grade;
      s.provenance = r.provenance;
      s.split = r.split;
      s.id = r.coin_id;
      out.push_back(std::move(s));
    }
  return out;
}

int cmd_synth(const GlobalOpts& g, const std::string& out_dir, int n_coins,
              int image_size, bool no_prongs, double wear_low, double wear_high,
              double wear_gamma, double amplitude_jitter) {
  PipelineConfig cfg = resolve_config(g);
  SynthSpec spec;
  spec.n_coins = n_coins;
  spec.image_size = image_size;
  spec.seed = cfg.seed;
  spec.with_prongs = !no_prongs;
  spec.wear_sigma_low_grade = wear_low;
  spec.wear_sigma_high_grade = wear_high;
  spec.wear_gamma = wear_gamma;
  spec.amplitude_jitter = amplitude_jitter;
  spec.out_dir = out_dir;

  SynthResult res = synth_corpus(spec);
  if (res.entries.empty())
    std::fprintf(stderr, "warning: synthesized an empty corpus\n");
  std::printf("wrote %zu coins to %s\n", res.entries.size(), out_dir.c_str());
  std::printf("grade histogram:\n");
  for (const auto& [grade, count] : res.histogram)
    std::printf("  %d: %d\n", grade, count);
  std::printf("manifest: %s\n", (fs::path(out_dir) / "manifest.csv").c_str());
  return 0;
}

int cmd_extract(const GlobalOpts& g, const std::string& manifest_path,
                const std::string& out_path) {
  PipelineConfig cfg = resolve_config(g);
  auto manifest = load_manifest(manifest_path);
  ExtractionResult res = extract_features(manifest, cfg);
  feature_cache_write(out_path, res.records);
  save_feature_models(feature_models_path(out_path), res.models);
  print_warnings(res.warnings);
  std::printf("extracted %zu coins -> %s\n", res.records.size(), out_path.c_str());
  if (!res.times.empty()) print_stage_stats(res.times, false);
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& cache_path,
              const std::string& model_kind, const std::string& out_path) {
  PipelineConfig cfg = resolve_config(g);
  auto records = feature_cache_read(cache_path);
  if (records.empty()) throw DataError("feature cache is empty");
  resolve_split(records, cfg);
  Dataset train_rows = rows_with_split(records, Split::Train);
  if (train_rows.empty()) throw DataError("no training rows after split");

  ModelFile mf;
  mf.kind = model_kind;
  mf.config_echo = config_to_json(cfg);
  fs::path models_sidecar = feature_models_path(cache_path);
  if (fs::exists(models_sidecar)) {
    mf.features = load_feature_models(models_sidecar);
    mf.has_feature_models = true;
  } else {
    std::fprintf(stderr,
                 "warning: %s not found; the model will not support "
                 "image-pair prediction\n",
                 models_sidecar.c_str());
  }

  if (model_kind == "ann") {
    TrainedAnn trained = train_ann_pipeline(train_rows, cfg);
    print_warnings(trained.warnings);
    mf.ann = std::move(trained.model);
    save_model(out_path, mf);

    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const EpochStats& e : trained.history.epochs)
      hist.push_back({{"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
    std::ofstream hf(out_path + ".history.json", std::ios::binary);
    hf << hist.dump(2) << "\n";

    const EpochStats& last = trained.history.epochs.back();
    std::printf("trained ann on %zu rows (%d epochs)\n", train_rows.size(),
                cfg.ann.epochs);
    std::printf("final train loss %.4f acc %.4f | val loss %.4f acc %.4f\n",
                last.train_loss, last.train_accuracy, last.val_loss,
                last.val_accuracy);
  } else if (model_kind == "svm") {
    SvmModel model = train_svm_pipeline(train_rows, cfg);
    std::size_t sv = model.support_vectors.size();
    mf.svm = std::move(model);
    save_model(out_path, mf);
    std::printf("trained svm on %zu rows (%zu pooled support vectors)\n",
                train_rows.size(), sv);
  } else {
    throw ConfigError("--model must be ann or svm");
  }
  std::printf("model written to %s\n", out_path.c_str());
  return 0;
}

int cmd_evaluate(const GlobalOpts& g, const std::string& cache_path,
                 const std::string& model_path, int cv_k,
                 const std::string& model_kind, const std::string& out_prefix) {
  PipelineConfig cfg = resolve_config(g);
  auto records = feature_cache_read(cache_path);
  if (records.empty()) throw DataError("feature cache is empty");

  EvalReport report;
  BiasSummary bias;
  std::vector<std::pair<std::string, ReportFiles>> outputs;

  if (cv_k > 0) {
    Dataset all = cache_to_dataset(records);
    for (Sample& s : all) s.split = Split::None;
    FoldTrainer trainer;
    if (model_kind == "svm") {
      trainer = [&](const Dataset& tr, const Dataset& te) {
        return predict_svm(train_svm_pipeline(tr, cfg), te);
      };
    } else {
      trainer = [&](const Dataset& tr, const Dataset& te) {
        return predict_ann(train_ann_pipeline(tr, cfg).model, te);
      };
    }
    CvResult cv = cross_validate(all, cv_k, cfg.split.seed, trainer);
    print_warnings(cv.warnings);
    report = cv.aggregate;
    std::vector<int> pred, truth;
    for (const FoldOutcome& f : cv.folds) {
      pred.insert(pred.end(), f.pred.begin(), f.pred.end());
      truth.insert(truth.end(), f.truth.begin(), f.truth.end());
    }
    bias = bias_summary(pred, truth);
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      BiasSummary fb = bias_summary(cv.folds[f].pred, cv.folds[f].truth);
      outputs.emplace_back(
          "fold" + std::to_string(f),
          render_report(cv.folds[f].report, fb, config_to_json(cfg)));
    }
  } else {
    if (model_path.empty())
      throw ConfigError("evaluate needs --model-file or --cv K");
    ModelFile mf = load_model(model_path);
    resolve_split(records, cfg);
    Dataset test_rows = rows_with_split(records, Split::Test);
    if (test_rows.empty()) throw DataError("no test rows after split");
    std::vector<int> pred = mf.kind == "ann" ? predict_ann(*mf.ann, test_rows)
                                             : predict_svm(*mf.svm, test_rows);
    std::vector<int> truth;
    for (const Sample& s : test_rows) truth.push_back(s.label);
    report = classification_report(pred, truth);
    bias = bias_summary(pred, truth);
  }

  ReportFiles main_report = render_report(report, bias, config_to_json(cfg));
  std::fputs(main_report.text.c_str(), stdout);

  if (!out_prefix.empty()) {
    {
      std::ofstream tf(out_prefix + ".report.txt", std::ios::binary);
      tf << main_report.text;
      std::ofstream jf(out_prefix + ".report.json", std::ios::binary);
      jf << main_report.json.dump(2) << "\n";
    }
    for (const auto& [name, files] : outputs) {
      std::ofstream tf(out_prefix + "." + name + ".report.txt", std::ios::binary);
      tf << files.text;
      std::ofstream jf(out_prefix + "." + name + ".report.json", std::ios::binary);
      jf << files.json.dump(2) << "\n";
    }
    std::printf("reports written to %s.report.{txt,json}\n", out_prefix.c_str());
  }
  return 0;
}

int cmd_predict(const GlobalOpts& g, const std::string& model_path,
                const std::string& obverse, const std::string& reverse,
                const std::string& service_name) {
  resolve_config(g);
  Service service;
  if (service_name == "PCGS")
    service = Service::PCGS;
  else if (service_name == "NGC")
    service = Service::NGC;
  else
    throw ConfigError("--service must be PCGS or NGC");

  ModelFile mf = load_model(model_path);
  PredictOutcome out = predict_pair(mf, obverse, reverse, service);

  std::printf("predicted grade: MS-%d\n", out.grade);
  std::printf("top probabilities:\n");
  for (const auto& [grade, p] : out.top)
    std::printf("  MS-%d  %.4f\n", grade, p);
  std::printf("timing breakdown:\n");
  std::printf("  Image preprocessing                    %8.1f ms\n",
              out.times.preprocess * 1000.0);
  std::printf("  Sobel edge detection                   %8.1f ms\n",
              out.times.sobel * 1000.0);
  std::printf("  Wedge masking and feature extraction   %8.1f ms\n",
              out.times.wedges * 1000.0);
  std::printf("  HSV and brightness computation         %8.1f ms\n",
              out.times.hsv * 1000.0);
  std::printf("  Classifier forward pass                %8.1f ms\n",
              out.times.forward * 1000.0);
  std::printf("  Total                                  %8.1f ms\n",
              out.times.total * 1000.0);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coingrade: feature-engineered coin grading pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "pipeline config file (JSON)");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
  app.add_option("--jobs", g.jobs, "max worker threads (0 = default)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic coin corpus");
  std::string synth_out;
  int synth_coins = 500, synth_size = 256;
  bool synth_no_prongs = false;
  double wear_low = 4.2, wear_high = 0.4, wear_gamma = 1.0, amp_jitter = 0.28;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--coins", synth_coins, "number of coins");
  synth->add_option("--size", synth_size, "image size in pixels");
  synth->add_flag("--no-prongs", synth_no_prongs, "skip holder prongs");
  synth->add_option("--wear-low", wear_low, "relief smoothing sigma at grade 50");
  synth->add_option("--wear-high", wear_high, "relief smoothing sigma at grade 68");
  synth->add_option("--wear-gamma", wear_gamma, "wear curve bend exponent");
  synth->add_option("--amplitude-jitter", amp_jitter,
                    "per-coin relief amplitude jitter");

  auto* extract = app.add_subcommand("extract", "extract features from a manifest");
  std::string extract_manifest, extract_out;
  extract->add_option("--manifest", extract_manifest, "manifest CSV")->required();
  extract->add_option("--out", extract_out, "output feature cache")->required();

  auto* train = app.add_subcommand("train", "train a classifier from a cache");
  std::string train_cache, train_model = "ann", train_out;
  train->add_option("--cache", train_cache, "feature cache")->required();
  train->add_option("--model", train_model, "ann or svm");
  train->add_option("--out", train_out, "output model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a model or run CV");
  std::string eval_cache, eval_model_file, eval_model = "ann", eval_out;
  int eval_cv = 0;
  evaluate->add_option("--cache", eval_cache, "feature cache")->required();
  evaluate->add_option("--model-file", eval_model_file, "trained model file");
  evaluate->add_option("--cv", eval_cv, "run k-fold cross-validation instead");
  evaluate->add_option("--model", eval_model, "ann or svm (CV mode)");
  evaluate->add_option("--out", eval_out, "report file prefix");

  auto* predict = app.add_subcommand("predict", "grade one coin image pair");
  std::string pred_model, pred_obv, pred_rev, pred_service = "PCGS";
  predict->add_option("--model-file", pred_model, "trained model file")->required();
  predict->add_option("--obverse", pred_obv, "obverse image")->required();
  predict->add_option("--reverse", pred_rev, "reverse image")->required();
  predict->add_option("--service", pred_service, "PCGS or NGC");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (synth->parsed())
      return cmd_synth(g, synth_out, synth_coins, synth_size, synth_no_prongs,
                       wear_low, wear_high, wear_gamma, amp_jitter);
    if (extract->parsed()) return cmd_extract(g, extract_manifest, extract_out);
    if (train->parsed()) return cmd_train(g, train_cache, train_model, train_out);
    if (evaluate->parsed())
      return cmd_evaluate(g, eval_cache, eval_model_file, eval_cv, eval_model,
                          eval_out);
    if (predict->parsed())
      return cmd_predict(g, pred_model, pred_obv, pred_rev, pred_service);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
