#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "mrad/config.hpp"

using namespace mrad;

TEST_CASE("defaults") {
  const PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.windows.granularities == std::vector<int>{24});
  CHECK(c.modulation.beta == 0.5);
  CHECK(c.modulation.lambda == 1.0);
  CHECK(c.modulation.tau == 2.0);
  CHECK(c.detector.kind == "mlp");
  CHECK(c.detector.hidden == 32);
  CHECK(c.detector.epochs == 500);
  CHECK(c.split.train == 0.6);
  CHECK(c.generator.users == 3);
  CHECK(c.generator.span_days == 60);
  CHECK(c.generator.anomaly_fraction == 0.05);
}

TEST_CASE("empty object gives defaults") { CHECK(PipelineConfig::from_json("{}") == PipelineConfig{}); }

TEST_CASE("round trip") {
  PipelineConfig c;
  c.seed = 99;
  c.repeats = 3;
  c.users = {"U001", "U003"};
  c.windows.granularities = {24, 72, 168};
  c.modulation.tau_grid = {0.5, 1, 2};
  c.modulation.pool_users = true;
  c.wavelet.family = "db4";
  c.wavelet.upsampling = "nearest";
  c.attention.weight_decay = 0.25;
  c.attention.use_bias = false;
  c.detector.kind = "iforest";
  c.detector.class_weight = "balanced";
  c.ablation.no_dwt = true;
  c.generator.hour_jitter = 2;
  c.input.span_start = "2010-01-04T00:00:00";
  const std::string text = c.to_json();
  const PipelineConfig back = PipelineConfig::from_json(text);
  CHECK(back == c);
  CHECK(back.to_json() == text);
}

TEST_CASE("partial sections keep other defaults") {
  const auto c = PipelineConfig::from_json(R"({"detector":{"hidden":4},"windows":{"granularities":[72]}})");
  CHECK(c.detector.hidden == 4);
  CHECK(c.detector.epochs == 500);
  CHECK(c.windows.granularities == std::vector<int>{72});
  CHECK(c.windows.step_hours == 24);
}

TEST_CASE("unknown keys are rejected with their path") {
  try {
    PipelineConfig::from_json(R"({"detector":{"hiden":4}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("detector.hiden") != std::string::npos);
  }
  CHECK_THROWS_AS(PipelineConfig::from_json(R"({"bogus":1})"), ConfigError);
}

TEST_CASE("type and syntax errors") {
  CHECK_THROWS_AS(PipelineConfig::from_json(R"({"seed":"one"})"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json(R"({"detector":[]})"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::from_json("{"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::load("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("validation") {
  for (const char* text : {
           R"({"modulation":{"beta":1.0}})",
           R"({"modulation":{"lambda":0}})",
           R"({"modulation":{"tau":-1}})",
           R"({"modulation":{"epsilon":0}})",
           R"({"windows":{"granularities":[]}})",
           R"({"windows":{"bin_hours":5}})",
           R"({"split":{"train":0.5,"validation":0.2,"test":0.2}})",
           R"({"detector":{"kind":"svm"}})",
           R"({"detector":{"class_weight":"auto"}})",
           R"({"detector":{"contamination":1.0}})",
           R"({"wavelet":{"family":"sym8"}})",
           R"({"attention":{"learning_rate":0}})",
           R"({"repeats":0})",
           R"({"input":{"events":["a.csv"]}})",
           R"({"generator":{"anomaly_hours":13}})",
       }) {
    CAPTURE(text);
    CHECK_THROWS_AS(PipelineConfig::from_json(text).validate(), ConfigError);
  }
}

TEST_CASE("wavelet levels resolve per window length") {
  WaveletSettings w;
  CHECK(w.resolve(24).levels == 2);
  CHECK(w.resolve(72).levels == 3);
  CHECK(w.resolve(168).levels == 3);
  w.levels = 1;
  CHECK(w.resolve(168).levels == 1);
}
