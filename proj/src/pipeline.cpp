#include "coingrade/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "coingrade/errors.hpp"
#include "coingrade/image_io.hpp"
#include "coingrade/parallel.hpp"
#include "coingrade/rng.hpp"

namespace coingrade {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct SideOutcome {
  SideStats stats;
  StageTimes times;  // forward stays 0 here
};

SideOutcome process_side(const std::filesystem::path& path,
                         const PipelineConfig& cfg) {
  SideOutcome out;
  double t0 = wall_time();
  ImageRgb8 raw = read_image(path);
  CoinImage coin = segment_coin(raw, cfg.preprocess);
  RasterF blurred = gaussian_blur(to_grayscale(coin.pixels), cfg.preprocess);
  double t1 = wall_time();
  out.times.preprocess = t1 - t0;

  GradientField field = sobel(blurred, coin.mask);
  double t2 = wall_time();
  out.times.sobel = t2 - t1;

  WedgeSpec spec;
  spec.n_slices = cfg.wedge_slices;
  spec.center_x = coin.center_x;
  spec.center_y = coin.center_y;
  spec.radius = coin.radius;
  spec.start_angle = cfg.wedge_start_angle;
  std::vector<Mask> wedges = wedge_masks(spec, coin.mask);
  WedgeStatsResult ws = wedge_gradient_stats(field, wedges);
  out.stats.edge = ws.values;
  out.stats.empty_wedges = ws.empty_wedges;
  double t3 = wall_time();
  out.times.wedges = t3 - t2;

  out.stats.hsv = mean_hsv(coin);
  double t4 = wall_time();
  out.times.hsv = t4 - t3;
  out.times.total = t4 - t0;
  return out;
}

}  // namespace

ExtractionResult extract_features(const std::vector<ManifestEntry>& manifest,
                                  const PipelineConfig& cfg) {
  cfg.validate();
  ExtractionResult res;
  const std::size_t n = manifest.size();
  res.records.resize(n);
  res.times.resize(n);

  std::vector<SideStats> obv(n), rev(n);
  std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      SideOutcome so = process_side(manifest[i].obverse_path, cfg);
      SideOutcome sr = process_side(manifest[i].reverse_path, cfg);
      obv[i] = so.stats;
      rev[i] = sr.stats;
      StageTimes t;
      t.preprocess = so.times.preprocess + sr.times.preprocess;
      t.sobel = so.times.sobel + sr.times.sobel;
      t.wedges = so.times.wedges + sr.times.wedges;
      t.hsv = so.times.hsv + sr.times.hsv;
      t.total = so.times.total + sr.times.total;
      res.times[i] = t;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw DataError("coin '" + manifest[i].coin_id + "': " + errors[i]);

  // Fit the categorical models. Train-tagged rows only, when tags exist;
  // otherwise every coin (extraction precedes any split decision).
  std::vector<std::size_t> fit_rows;
  for (std::size_t i = 0; i < n; ++i)
    if (manifest[i].split == Split::Train) fit_rows.push_back(i);
  if (fit_rows.empty()) {
    fit_rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) fit_rows[i] = i;
  } else if (fit_rows.size() < n) {
    res.warnings.push_back(
        "extract: categorical models fitted on train-tagged coins only");
  }

  res.models.preprocess = cfg.preprocess;
  res.models.n_slices = cfg.wedge_slices;
  res.models.wedge_start_angle = cfg.wedge_start_angle;
  res.models.brightness = cfg.brightness;

  std::vector<std::array<double, 6>> hsv_points;
  std::vector<double> b_values;
  for (std::size_t i : fit_rows) {
    hsv_points.push_back({obv[i].hsv.h, obv[i].hsv.s, obv[i].hsv.v,
                          rev[i].hsv.h, rev[i].hsv.s, rev[i].hsv.v});
    b_values.push_back(brightness(obv[i].hsv, cfg.brightness));
    b_values.push_back(brightness(rev[i].hsv, cfg.brightness));
  }
  res.models.clusters =
      fit_color_clusters(hsv_points, derive_seed(cfg.seed, 100));
  res.models.levels = fit_brightness_levels(b_values);

  int empty_wedges = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CacheRecord r;
    r.coin_id = manifest[i].coin_id;
    r.features = assemble_features(obv[i], rev[i], manifest[i].service,
                                   res.models);
    r.grade = manifest[i].grade;
    r.provenance = Provenance::Original;
    r.split = manifest[i].split;
    r.obverse_path = manifest[i].obverse_path.string();
    r.reverse_path = manifest[i].reverse_path.string();
    res.records[i] = std::move(r);
    empty_wedges += obv[i].empty_wedges + rev[i].empty_wedges;
  }
  if (empty_wedges > 0)
    res.warnings.push_back("extract: " + std::to_string(empty_wedges) +
                           " empty wedge(s) produced zero statistics");
  return res;
}

TrainedAnn train_ann_pipeline(const Dataset& rows, const PipelineConfig& cfg) {
  StandardizationStats stats = fit_standardization(rows);
  Dataset standardized = standardize_all(stats, rows);
  SmoteResult sm = smote(standardized, cfg.smote);
  AugmentResult aug = gaussian_augment(sm.samples, cfg.augment);

  TrainedAnn out;
  out.warnings = sm.warnings;
  out.warnings.insert(out.warnings.end(), aug.warnings.begin(),
                      aug.warnings.end());
  out.model = train(aug.samples, cfg.ann, &out.history, &stats);
  out.warnings.insert(out.warnings.end(), out.history.warnings.begin(),
                      out.history.warnings.end());
  return out;
}

SvmModel train_svm_pipeline(const Dataset& rows, const PipelineConfig& cfg) {
  StandardizationStats stats = fit_standardization(rows);
  Dataset standardized = standardize_all(stats, rows);
  SvmModel model = svm_train(standardized, cfg.svm);
  model.stats = stats;
  return model;
}

std::vector<int> predict_ann(const MlpModel& model, const Dataset& rows) {
  std::vector<int> out(rows.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> x = apply_standardization(model.stats, rows[i].x);
    out[i] = predict(model, x).first;
  }
  return out;
}

std::vector<int> predict_svm(const SvmModel& model, const Dataset& rows) {
  std::vector<int> out(rows.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> x = apply_standardization(model.stats, rows[i].x);
    out[i] = svm_predict(model, x);
  }
  return out;
}

namespace {

json stats_to_json(const StandardizationStats& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}};
}

StandardizationStats stats_from_json(const json& j) {
  StandardizationStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("std").get<std::vector<double>>();
  return s;
}

json feature_models_to_json(const FeatureModels& m) {
  json centroids = json::array();
  for (const auto& c : m.clusters.centroids)
    centroids.push_back(std::vector<double>(c.begin(), c.end()));
  return json{
      {"preprocess",
       {{"blur_sigma", m.preprocess.blur_sigma},
        {"blur_kernel_radius", m.preprocess.blur_kernel_radius},
        {"background_threshold", m.preprocess.background_threshold},
        {"opening_radius", m.preprocess.opening_radius}}},
      {"wedges",
       {{"n_slices", m.n_slices}, {"start_angle", m.wedge_start_angle}}},
      {"brightness", {{"h0", m.brightness.h0}, {"sigma_h", m.brightness.sigma_h}}},
      {"clusters",
       {{"centroids", centroids},
        {"labels", std::vector<std::string>(m.clusters.labels.begin(),
                                            m.clusters.labels.end())},
        {"inertia", m.clusters.inertia}}},
      {"levels", {{"thresholds", std::vector<double>(m.levels.thresholds.begin(),
                                                     m.levels.thresholds.end())}}}};
}

FeatureModels feature_models_from_json(const json& j) {
  FeatureModels m;
  const json& p = j.at("preprocess");
  m.preprocess.blur_sigma = p.at("blur_sigma").get<double>();
  m.preprocess.blur_kernel_radius = p.at("blur_kernel_radius").get<int>();
  m.preprocess.background_threshold = p.at("background_threshold").get<double>();
  m.preprocess.opening_radius = p.at("opening_radius").get<int>();
  m.n_slices = j.at("wedges").at("n_slices").get<int>();
  m.wedge_start_angle = j.at("wedges").at("start_angle").get<double>();
  m.brightness.h0 = j.at("brightness").at("h0").get<double>();
  m.brightness.sigma_h = j.at("brightness").at("sigma_h").get<double>();
  const json& centroids = j.at("clusters").at("centroids");
  for (int c = 0; c < 5; ++c) {
    auto v = centroids.at(c).get<std::vector<double>>();
    std::copy(v.begin(), v.end(), m.clusters.centroids[c].begin());
  }
  auto labels = j.at("clusters").at("labels").get<std::vector<std::string>>();
  std::copy(labels.begin(), labels.end(), m.clusters.labels.begin());
  m.clusters.inertia = j.at("clusters").at("inertia").get<double>();
  auto thresholds = j.at("levels").at("thresholds").get<std::vector<double>>();
  std::copy(thresholds.begin(), thresholds.end(), m.levels.thresholds.begin());
  return m;
}

constexpr const char* kModelFormat = "coingrade.model.v1";

}  // namespace

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  ordered_json j;
  j["format"] = kModelFormat;
  j["kind"] = model.kind;
  j["pipeline_version"] = kPipelineVersion;
  j["config_echo"] = model.config_echo;
  if (model.has_feature_models)
    j["feature_models"] = feature_models_to_json(model.features);

  if (model.kind == "ann") {
    const MlpModel& m = *model.ann;
    json layers = json::array();
    for (std::size_t l = 0; l < m.weights.size(); ++l)
      layers.push_back(json{{"weights", m.weights[l]}, {"biases", m.biases[l]}});
    j["ann"] = {{"layer_dims", m.layer_dims},
                {"label_map", m.label_map},
                {"layers", layers},  // weights row-major [out][in]
                {"standardization", stats_to_json(m.stats)}};
  } else if (model.kind == "svm") {
    const SvmModel& m = *model.svm;
    json pairs = json::array();
    for (const PairClassifier& p : m.pairs)
      pairs.push_back(json{{"grade_pos", p.grade_pos},
                           {"grade_neg", p.grade_neg},
                           {"sv_index", p.sv_index},
                           {"coef", p.coef},
                           {"bias", p.bias}});
    j["svm"] = {{"c", m.c},
                {"gamma", m.gamma},
                {"label_map", m.label_map},
                {"support_vectors", m.support_vectors},
                {"pairs", pairs},
                {"standardization", stats_to_json(m.stats)}};
  } else {
    throw Error("save_model: unknown kind '" + model.kind + "'");
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path.string());
  out << j.dump(2) << "\n";
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open model file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model file parse error: " + std::string(e.what()));
  }
  if (!j.contains("format") || j.at("format").get<std::string>() != kModelFormat)
    throw VersionMismatchError("model file format tag mismatch in " +
                               path.string());
  if (j.at("pipeline_version").get<std::string>() != kPipelineVersion)
    throw VersionMismatchError("model pipeline_version '" +
                               j.at("pipeline_version").get<std::string>() +
                               "' does not match '" + kPipelineVersion + "'");

  ModelFile model;
  model.kind = j.at("kind").get<std::string>();
  if (j.contains("config_echo")) model.config_echo = j.at("config_echo");
  if (j.contains("feature_models")) {
    model.features = feature_models_from_json(j.at("feature_models"));
    model.has_feature_models = true;
  }
  if (model.kind == "ann") {
    MlpModel m;
    const json& a = j.at("ann");
    m.layer_dims = a.at("layer_dims").get<std::vector<int>>();
    m.label_map = a.at("label_map").get<std::vector<int>>();
    for (const json& layer : a.at("layers")) {
      m.weights.push_back(layer.at("weights").get<std::vector<double>>());
      m.biases.push_back(layer.at("biases").get<std::vector<double>>());
    }
    m.stats = stats_from_json(a.at("standardization"));
    model.ann = std::move(m);
  } else if (model.kind == "svm") {
    SvmModel m;
    const json& s = j.at("svm");
    m.c = s.at("c").get<double>();
    m.gamma = s.at("gamma").get<double>();
    m.label_map = s.at("label_map").get<std::vector<int>>();
    m.support_vectors =
        s.at("support_vectors").get<std::vector<std::vector<double>>>();
    for (const json& pj : s.at("pairs")) {
      PairClassifier p;
      p.grade_pos = pj.at("grade_pos").get<int>();
      p.grade_neg = pj.at("grade_neg").get<int>();
      p.sv_index = pj.at("sv_index").get<std::vector<int>>();
      p.coef = pj.at("coef").get<std::vector<double>>();
      p.bias = pj.at("bias").get<double>();
      m.pairs.push_back(std::move(p));
    }
    m.stats = stats_from_json(s.at("standardization"));
    model.svm = std::move(m);
  } else {
    throw DataError("model file has unknown kind '" + model.kind + "'");
  }
  return model;
}

void save_feature_models(const std::filesystem::path& path,
                         const FeatureModels& models) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write feature models: " + path.string());
  ordered_json j;
  j["format"] = "coingrade.feature_models.v1";
  j["pipeline_version"] = kPipelineVersion;
  j["models"] = feature_models_to_json(models);
  out << j.dump(2) << "\n";
}

FeatureModels load_feature_models(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw MissingFileError("cannot open feature models: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("feature models parse error: " + std::string(e.what()));
  }
  if (j.at("pipeline_version").get<std::string>() != kPipelineVersion)
    throw VersionMismatchError("feature models version mismatch in " +
                               path.string());
  return feature_models_from_json(j.at("models"));
}

std::filesystem::path feature_models_path(const std::filesystem::path& cache) {
  std::filesystem::path p = cache;
  p += ".models.json";
  return p;
}

PredictOutcome predict_pair(const ModelFile& model,
                            const std::filesystem::path& obverse,
                            const std::filesystem::path& reverse,
                            Service service) {
  if (!model.has_feature_models)
    throw DataError(
        "model file lacks fitted feature models; re-train from a cache with "
        "its .models.json sidecar present");

  PipelineConfig cfg;
  cfg.preprocess = model.features.preprocess;
  cfg.wedge_slices = model.features.n_slices;
  cfg.wedge_start_angle = model.features.wedge_start_angle;
  cfg.brightness = model.features.brightness;

  PredictOutcome out;
  SideOutcome so = process_side(obverse, cfg);
  SideOutcome sr = process_side(reverse, cfg);
  out.times.preprocess = so.times.preprocess + sr.times.preprocess;
  out.times.sobel = so.times.sobel + sr.times.sobel;
  out.times.wedges = so.times.wedges + sr.times.wedges;
  out.times.hsv = so.times.hsv + sr.times.hsv;

  double t0 = wall_time();
  std::vector<double> features =
      assemble_features(so.stats, sr.stats, service, model.features);
  std::vector<int> grades;
  std::vector<double> probs;
  if (model.kind == "ann") {
    const MlpModel& m = *model.ann;
    std::vector<double> x = apply_standardization(m.stats, features);
    auto [grade, p] = predict(m, x);
    out.grade = grade;
    grades = m.label_map;
    probs = std::move(p);
  } else {
    const SvmModel& m = *model.svm;
    std::vector<double> x = apply_standardization(m.stats, features);
    out.grade = svm_predict(m, x);
    // Vote shares stand in for probabilities in the ranking table.
    std::map<int, int> votes;
    for (const PairClassifier& pc : m.pairs)
      votes[pair_decision(m, pc, x) >= 0.0 ? pc.grade_pos : pc.grade_neg]++;
    for (int g : m.label_map) {
      grades.push_back(g);
      probs.push_back(double(votes[g]) / double(m.pairs.size()));
    }
  }
  double t1 = wall_time();
  out.times.forward = t1 - t0;
  out.times.total = out.times.preprocess + out.times.sobel + out.times.wedges +
                    out.times.hsv + out.times.forward;

  std::vector<std::size_t> order(grades.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  for (std::size_t i = 0; i < order.size() && i < 3; ++i)
    out.top.emplace_back(grades[order[i]], probs[order[i]]);
  return out;
}

ReportFiles render_report(const EvalReport& report, const BiasSummary& bias,
                          const ordered_json& config_echo) {
  ReportFiles out;
  out.text = format_tolerance_table(report) + "\n" +
             format_report_text(report) + "\n" + format_confusion(report) +
             "\n" + format_bias(bias);

  ordered_json j;
  j["n"] = report.n;
  j["exact_accuracy"] = report.exact_accuracy;
  ordered_json tol;
  for (const auto& [t, acc] : report.tol_accuracy)
    tol[std::to_string(t)] = acc;
  j["tolerance_accuracy"] = tol;
  ordered_json rows = ordered_json::array();
  for (const GradeRow& r : report.per_grade)
    rows.push_back(ordered_json{{"grade", r.grade},
                                {"precision", r.precision},
                                {"recall", r.recall},
                                {"f1", r.f1},
                                {"support", r.support}});
  j["per_grade"] = rows;
  j["weighted"] = {{"precision", report.weighted_precision},
                   {"recall", report.weighted_recall},
                   {"f1", report.weighted_f1}};
  j["confusion"] = {{"grades", report.grades}, {"counts", report.confusion}};
  ordered_json hist;
  for (const auto& [err, count] : bias.histogram)
    hist[std::to_string(err)] = count;
  j["bias"] = {{"mean_signed_error", bias.mean_signed_error},
               {"histogram", hist}};
  j["config_echo"] = config_echo;
  out.json = std::move(j);
  return out;
}

}  // namespace coingrade
