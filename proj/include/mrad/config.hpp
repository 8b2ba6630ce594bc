// File-backed pipeline configuration. Parsing is strict: unknown keys are
// rejected and absent optional keys take the defaults below.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mrad/detectors.hpp"
#include "mrad/synthetic.hpp"
#include "mrad/wavelet.hpp"

namespace mrad {

struct InputConfig {
  std::vector<std::string> events;  // empty: synthesize from `generator`
  std::string ground_truth;
  std::string taxonomy;  // empty: built-in six-category CERT taxonomy
  std::string span_start;  // empty: derived from the events
  std::string span_end;

  friend bool operator==(const InputConfig&, const InputConfig&) = default;
};

struct WindowConfig {
  std::vector<int> granularities{24};
  int step_hours = 24;
  int bin_hours = 1;

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

struct ModulationSettings {
  double beta = 0.5;
  double lambda = 1.0;
  double tau = 2.0;
  double epsilon = 1e-6;
  std::vector<double> tau_grid;  // empty: use `tau` without tuning
  bool pool_users = false;

  friend bool operator==(const ModulationSettings&, const ModulationSettings&) = default;
};

struct WaveletSettings {
  std::string family = "haar";
  int levels = 0;  // 0: 2 for windows under 72 bins, else 3
  std::string boundary = "periodic";
  std::string upsampling = "linear";

  /// Concrete config for a window of `bins` columns.
  WaveletConfig resolve(std::size_t bins) const;

  friend bool operator==(const WaveletSettings&, const WaveletSettings&) = default;
};

struct AttentionSettings {
  std::size_t hidden = 0;  // 0: max(4, J+1)
  int epochs = 300;
  double learning_rate = 0.1;
  double weight_decay = 0.0;
  bool use_bias = true;

  friend bool operator==(const AttentionSettings&, const AttentionSettings&) = default;
};

struct DetectorSettings {
  std::string kind = "mlp";
  std::size_t hidden = 32;
  int epochs = 500;
  double learning_rate = 0.05;
  double positive_weight = 1.0;
  // "fixed" uses positive_weight; "balanced" weights Abnormal windows by
  // normal/abnormal count on the training set.
  std::string class_weight = "fixed";
  double weight_decay = 0.0;
  double threshold = 0.5;
  std::size_t trees = 100;
  std::size_t subsample = 64;
  double contamination = 0.05;

  friend bool operator==(const DetectorSettings&, const DetectorSettings&) = default;
};

struct SplitConfig {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
  bool refit_on_validation = true;

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

struct AblationFlags {
  bool no_modulation = false;
  bool no_dwt = false;
  bool no_attention = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  int repeats = 1;  // eval/ablate run seeds derive_seed(seed, "repeat", r)
  std::vector<std::string> users;  // empty: every user in the data
  int sample_users = 0;            // > 0: evaluate this many randomly chosen users
  std::string output_dir = "out";
  InputConfig input;
  GeneratorConfig generator;
  WindowConfig windows;
  ModulationSettings modulation;
  WaveletSettings wavelet;
  AttentionSettings attention;
  DetectorSettings detector;
  SplitConfig split;
  AblationFlags ablation;

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  std::string to_json() const;
  /// Throws ConfigError on malformed JSON, unknown keys or invalid values.
  static PipelineConfig from_json(std::string_view text);
  static PipelineConfig load(const std::string& path);

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

}  // namespace mrad
