#include "mrad/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mrad {

using nlohmann::json;

WaveletConfig WaveletSettings::resolve(std::size_t bins) const {
  WaveletConfig c;
  c.family = parse_wavelet_family(family);
  c.boundary = parse_boundary_mode(boundary);
  c.upsampling = parse_upsampling(upsampling);
  c.levels = levels > 0 ? levels : default_levels(bins);
  return c;
}

void PipelineConfig::validate() const {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (sample_users < 0) throw ConfigError("sample_users must be >= 0");
  if (input.events.empty()) generator.validate();
  if (input.events.empty() != input.ground_truth.empty() && !input.events.empty()) {
    throw ConfigError("input.ground_truth is required when input.events is given");
  }
  if (windows.granularities.empty()) throw ConfigError("windows.granularities must be non-empty");
  if (windows.step_hours <= 0) throw ConfigError("windows.step_hours must be > 0");
  if (windows.bin_hours <= 0) throw ConfigError("windows.bin_hours must be > 0");
  for (int g : windows.granularities) {
    if (g <= 0 || g % windows.bin_hours != 0) {
      throw ConfigError("granularity " + std::to_string(g) + "h must be a positive multiple of bin_hours");
    }
    const auto bins = static_cast<std::size_t>(g / windows.bin_hours);
    wavelet.resolve(bins).validate(bins);
  }
  if (!(modulation.beta > 0.0 && modulation.beta < 1.0)) throw ConfigError("modulation.beta must lie in (0, 1)");
  if (!(modulation.lambda > 0.0)) throw ConfigError("modulation.lambda must be > 0");
  if (!(modulation.tau >= 0.0)) throw ConfigError("modulation.tau must be >= 0");
  if (!(modulation.epsilon > 0.0)) throw ConfigError("modulation.epsilon must be > 0");
  for (double t : modulation.tau_grid) {
    if (!(t >= 0.0)) throw ConfigError("modulation.tau_grid entries must be >= 0");
  }
  if (attention.epochs < 0) throw ConfigError("attention.epochs must be >= 0");
  if (!(attention.learning_rate > 0.0)) throw ConfigError("attention.learning_rate must be > 0");
  if (!(attention.weight_decay >= 0.0)) throw ConfigError("attention.weight_decay must be >= 0");
  parse_detector_kind(detector.kind);
  if (detector.hidden < 1) throw ConfigError("detector.hidden must be >= 1");
  if (detector.epochs < 0) throw ConfigError("detector.epochs must be >= 0");
  if (!(detector.learning_rate > 0.0)) throw ConfigError("detector.learning_rate must be > 0");
  if (!(detector.positive_weight > 0.0)) throw ConfigError("detector.positive_weight must be > 0");
  if (!(detector.weight_decay >= 0.0)) throw ConfigError("detector.weight_decay must be >= 0");
  if (detector.class_weight != "fixed" && detector.class_weight != "balanced") {
    throw ConfigError("detector.class_weight must be 'fixed' or 'balanced'");
  }
  if (detector.trees < 1) throw ConfigError("detector.trees must be >= 1");
  if (detector.subsample < 2) throw ConfigError("detector.subsample must be >= 2");
  if (!(detector.contamination > 0.0 && detector.contamination < 1.0)) {
    throw ConfigError("detector.contamination must lie in (0, 1)");
  }
  if (!(split.train > 0.0 && split.validation >= 0.0 && split.test > 0.0)) {
    throw ConfigError("split fractions must be positive (validation may be 0)");
  }
  if (std::abs(split.train + split.validation + split.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

// Reads known keys from one JSON object and rejects anything else.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path_ + it.key() + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_.substr(0, path_.size() - 1); }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename F>
void section(Reader& parent, const char* key, const std::string& prefix, F&& fill) {
  if (const json* j = parent.child(key)) {
    Reader r(*j, prefix + key + ".");
    fill(r);
    r.finish();
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c;
  Reader r(j, "");
  r.get("seed", c.seed);
  r.get("repeats", c.repeats);
  r.get("users", c.users);
  r.get("sample_users", c.sample_users);
  r.get("output_dir", c.output_dir);
  section(r, "input", "", [&](Reader& s) {
    s.get("events", c.input.events);
    s.get("ground_truth", c.input.ground_truth);
    s.get("taxonomy", c.input.taxonomy);
    s.get("span_start", c.input.span_start);
    s.get("span_end", c.input.span_end);
  });
  section(r, "generator", "", [&](Reader& s) {
    s.get("users", c.generator.users);
    s.get("span_days", c.generator.span_days);
    s.get("start", c.generator.start);
    s.get("anomaly_fraction", c.generator.anomaly_fraction);
    s.get("anomaly_hours", c.generator.anomaly_hours);
    s.get("hour_jitter", c.generator.hour_jitter);
    s.get("intensity", c.generator.intensity);
    s.get("segments", c.generator.segments);
  });
  section(r, "windows", "", [&](Reader& s) {
    s.get("granularities", c.windows.granularities);
    s.get("step_hours", c.windows.step_hours);
    s.get("bin_hours", c.windows.bin_hours);
  });
  section(r, "modulation", "", [&](Reader& s) {
    s.get("beta", c.modulation.beta);
    s.get("lambda", c.modulation.lambda);
    s.get("tau", c.modulation.tau);
    s.get("epsilon", c.modulation.epsilon);
    s.get("tau_grid", c.modulation.tau_grid);
    s.get("pool_users", c.modulation.pool_users);
  });
  section(r, "wavelet", "", [&](Reader& s) {
    s.get("family", c.wavelet.family);
    s.get("levels", c.wavelet.levels);
    s.get("boundary", c.wavelet.boundary);
    s.get("upsampling", c.wavelet.upsampling);
  });
  section(r, "attention", "", [&](Reader& s) {
    s.get("hidden", c.attention.hidden);
    s.get("epochs", c.attention.epochs);
    s.get("learning_rate", c.attention.learning_rate);
    s.get("weight_decay", c.attention.weight_decay);
    s.get("use_bias", c.attention.use_bias);
  });
  section(r, "detector", "", [&](Reader& s) {
    s.get("kind", c.detector.kind);
    s.get("hidden", c.detector.hidden);
    s.get("epochs", c.detector.epochs);
    s.get("learning_rate", c.detector.learning_rate);
    s.get("positive_weight", c.detector.positive_weight);
    s.get("class_weight", c.detector.class_weight);
    s.get("weight_decay", c.detector.weight_decay);
    s.get("threshold", c.detector.threshold);
    s.get("trees", c.detector.trees);
    s.get("subsample", c.detector.subsample);
    s.get("contamination", c.detector.contamination);
  });
  section(r, "split", "", [&](Reader& s) {
    s.get("train", c.split.train);
    s.get("validation", c.split.validation);
    s.get("test", c.split.test);
    s.get("refit_on_validation", c.split.refit_on_validation);
  });
  section(r, "ablation", "", [&](Reader& s) {
    s.get("no_modulation", c.ablation.no_modulation);
    s.get("no_dwt", c.ablation.no_dwt);
    s.get("no_attention", c.ablation.no_attention);
  });
  r.finish();
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string PipelineConfig::to_json() const {
  json j{
      {"seed", seed},
      {"repeats", repeats},
      {"users", users},
      {"sample_users", sample_users},
      {"output_dir", output_dir},
      {"input",
       {{"events", input.events},
        {"ground_truth", input.ground_truth},
        {"taxonomy", input.taxonomy},
        {"span_start", input.span_start},
        {"span_end", input.span_end}}},
      {"generator",
       {{"users", generator.users},
        {"span_days", generator.span_days},
        {"start", generator.start},
        {"anomaly_fraction", generator.anomaly_fraction},
        {"anomaly_hours", generator.anomaly_hours},
        {"hour_jitter", generator.hour_jitter},
        {"intensity", generator.intensity},
        {"segments", generator.segments}}},
      {"windows",
       {{"granularities", windows.granularities},
        {"step_hours", windows.step_hours},
        {"bin_hours", windows.bin_hours}}},
      {"modulation",
       {{"beta", modulation.beta},
        {"lambda", modulation.lambda},
        {"tau", modulation.tau},
        {"epsilon", modulation.epsilon},
        {"tau_grid", modulation.tau_grid},
        {"pool_users", modulation.pool_users}}},
      {"wavelet",
       {{"family", wavelet.family},
        {"levels", wavelet.levels},
        {"boundary", wavelet.boundary},
        {"upsampling", wavelet.upsampling}}},
      {"attention",
       {{"hidden", attention.hidden},
        {"epochs", attention.epochs},
        {"learning_rate", attention.learning_rate},
        {"weight_decay", attention.weight_decay},
        {"use_bias", attention.use_bias}}},
      {"detector",
       {{"kind", detector.kind},
        {"hidden", detector.hidden},
        {"epochs", detector.epochs},
        {"learning_rate", detector.learning_rate},
        {"positive_weight", detector.positive_weight},
        {"class_weight", detector.class_weight},
        {"weight_decay", detector.weight_decay},
        {"threshold", detector.threshold},
        {"trees", detector.trees},
        {"subsample", detector.subsample},
        {"contamination", detector.contamination}}},
      {"split",
       {{"train", split.train},
        {"validation", split.validation},
        {"test", split.test},
        {"refit_on_validation", split.refit_on_validation}}},
      {"ablation",
       {{"no_modulation", ablation.no_modulation},
        {"no_dwt", ablation.no_dwt},
        {"no_attention", ablation.no_attention}}},
  };
  return j.dump(2);
}

}  // namespace mrad
