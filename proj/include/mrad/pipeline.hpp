// End-to-end experiment orchestration: windows -> modulation -> wavelet
// tensor -> attention -> detector -> metrics, per user, with ablation
// switches for each representation stage.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrad/attention.hpp"
#include "mrad/behavior_matrix.hpp"
#include "mrad/config.hpp"
#include "mrad/detectors.hpp"
#include "mrad/evaluation.hpp"
#include "mrad/events.hpp"
#include "mrad/modulation.hpp"
#include "mrad/synthetic.hpp"

namespace mrad {

struct LogData {
  Taxonomy taxonomy;
  std::vector<Event> events;
  std::vector<GroundTruthRow> ground_truth;
  Timestamp span_start = 0;
  Timestamp span_end = 0;
  std::size_t skipped_rows = 0;
};

Taxonomy load_taxonomy(const InputConfig& input);

/// Reads the configured event/ground-truth files, or synthesizes a dataset
/// from the generator section with `seed` when no event files are given.
LogData load_log_data(const PipelineConfig& config, std::uint64_t seed);

/// Users to evaluate: the configured list, else every user in the events
/// (sorted), optionally sub-sampled to `sample_users` with `seed`.
std::vector<std::string> select_users(const PipelineConfig& config, const LogData& data,
                                      std::uint64_t seed);

struct UserWindows {
  std::string user;
  int scenario = 0;  // first ground-truth scenario for the user, 0 if none
  std::vector<LabeledWindow> windows;
};

UserWindows build_user_windows(const LogData& data, const std::string& user, int granularity,
                               const WindowConfig& windows);

/// Chronological split boundaries: [0, train_end) train, [train_end,
/// validation_end) validation, [validation_end, total) test.
struct SplitPoints {
  std::size_t train_end = 0;
  std::size_t validation_end = 0;
  std::size_t total = 0;
};

/// Throws DataError when the train or test part would be empty.
SplitPoints split_windows(std::size_t count, const SplitConfig& split);

/// Stage 1: the modulated matrix, or X itself when modulation is ablated.
Matrix represent_modulated(const Matrix& x, const BaselineStats* baseline, const ModulationConfig& mod,
                           const AblationFlags& flags);

/// Stage 2: the wavelet tensor, or a one-channel tensor when DWT is ablated.
Tensor3 represent_tensor(const Matrix& xhat, const WaveletConfig& wavelet, const AblationFlags& flags);

/// Everything fitted for one user at one granularity.
struct UserModel {
  std::string user;
  int granularity = 24;
  std::optional<BaselineStats> baseline;
  ModulationConfig modulation;
  bool tau_tuned = false;
  std::optional<AttentionParams> attention;
  Detector detector;
};

/// X -> Z for a fitted model.
Embedding embed(const UserModel& model, const Matrix& x, const WaveletConfig& wavelet,
                const AblationFlags& flags);

/// Fits baseline, tau (grid search on `validation` when configured),
/// attention and detector. When refit_on_validation is set the final model is
/// fitted on train + validation.
UserModel fit_user_model(const std::string& user, int granularity,
                         std::span<const LabeledWindow> train,
                         std::span<const LabeledWindow> validation, const PipelineConfig& config,
                         std::uint64_t run_seed, const BaselineStats* shared_baseline = nullptr);

struct WindowPrediction {
  Timestamp window_start = 0;
  std::string user;
  Prediction prediction;
  Label truth = Label::Normal;
};

struct UserResult {
  std::string user;
  int scenario = 0;
  Metrics metrics;
  std::vector<WindowPrediction> predictions;
};

struct ExperimentResult {
  int granularity = 24;
  std::uint64_t seed = 0;
  std::vector<UserResult> users;
  std::vector<UserModel> models;
  Metrics mean;    // unweighted mean over users
  Metrics pooled;  // from summed confusion counts
};

/// Runs the full protocol for one granularity: per-user windows, chronological
/// split, fitting, and test-split metrics averaged over users.
ExperimentResult run_experiment(const PipelineConfig& config, const LogData& data, int granularity,
                                std::uint64_t run_seed);

/// Predictions for the test windows of every user with a fitted model.
std::vector<WindowPrediction> detect_windows(const PipelineConfig& config, const LogData& data,
                                             std::span<const UserModel> models);

/// Seed for repeat r of an eval/ablate sweep (r = 0 is the master seed).
std::uint64_t repeat_seed(std::uint64_t master, int repeat);

/// Pooled baseline across users' training normals (for modulation.pool_users).
std::optional<BaselineStats> fit_pooled_baseline(const PipelineConfig& config, const LogData& data,
                                                 std::span<const std::string> users, int granularity);

}  // namespace mrad
