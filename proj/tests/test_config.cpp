#include <doctest.h>

#include <fstream>

#include "coingrade/config.hpp"
#include "coingrade/errors.hpp"

using namespace coingrade;
using nlohmann::json;

TEST_CASE("config: defaults carry the reference constants") {
  PipelineConfig cfg;
  CHECK(cfg.preprocess.blur_sigma == doctest::Approx(1.5));
  CHECK(cfg.preprocess.resolved_kernel_radius() == 5);  // ceil(3 * 1.5)
  CHECK(cfg.wedge_slices == 8);
  CHECK(cfg.brightness.h0 == doctest::Approx(50.0));
  CHECK(cfg.brightness.sigma_h == doctest::Approx(20.0));
  CHECK(cfg.smote.k_max == 5);
  CHECK(cfg.augment.noise_sigma == doctest::Approx(0.01));
  CHECK(cfg.ann.learning_rate == doctest::Approx(0.001));
  CHECK(cfg.ann.epochs == 97);
  CHECK(cfg.ann.batch_size == 32);
  CHECK(cfg.ann.validation_fraction == doctest::Approx(0.10));
  CHECK(cfg.ann.hidden == std::vector<int>{128, 64});
  CHECK(cfg.svm.c == doctest::Approx(1.0));
  CHECK(cfg.svm.gamma == 0.0);  // "scale"
  CHECK(cfg.split.train_fraction == doctest::Approx(0.70));
  CHECK(cfg.split.k == 5);
}

TEST_CASE("config: json round trip preserves values") {
  PipelineConfig cfg;
  cfg.reseed(777);
  cfg.preprocess.blur_sigma = 2.25;
  cfg.ann.epochs = 12;
  cfg.svm.gamma = 0.125;
  PipelineConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.seed == 777);
  CHECK(back.preprocess.blur_sigma == doctest::Approx(2.25));
  CHECK(back.ann.epochs == 12);
  CHECK(back.svm.gamma == doctest::Approx(0.125));
  // Stage seeds derive from the master seed.
  CHECK(back.smote.seed == cfg.smote.seed);
  CHECK(back.ann.seed == cfg.ann.seed);
}

TEST_CASE("config: unknown keys rejected at every level") {
  json top = {{"seed", 3}, {"bogus", 1}};
  CHECK_THROWS_AS(config_from_json(top), ConfigError);
  json nested = {{"preprocess", {{"blur_sigma", 1.0}, {"blur_radius", 4}}}};
  CHECK_THROWS_AS(config_from_json(nested), ConfigError);
  json ann_bad = {{"ann", {{"lr", 0.1}}}};
  CHECK_THROWS_AS(config_from_json(ann_bad), ConfigError);
}

TEST_CASE("config: invalid values rejected") {
  CHECK_THROWS_AS(config_from_json(json{{"preprocess", {{"blur_sigma", -1.0}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"wedges", {{"n_slices", 6}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"svm", {{"gamma", "auto"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"ann", {{"validation_fraction", 1.5}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"split", {{"mode", "sideways"}}}}),
                  ConfigError);
}

TEST_CASE("config: gamma accepts scale and positive numbers") {
  PipelineConfig a = config_from_json(json{{"svm", {{"gamma", "scale"}}}});
  CHECK(a.svm.gamma == 0.0);
  PipelineConfig b = config_from_json(json{{"svm", {{"gamma", 0.01}}}});
  CHECK(b.svm.gamma == doctest::Approx(0.01));
}
