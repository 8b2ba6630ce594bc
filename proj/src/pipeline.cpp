#include "mrad/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mrad/rng.hpp"

namespace mrad {

Taxonomy load_taxonomy(const InputConfig& input) {
  return input.taxonomy.empty() ? Taxonomy::cert_default() : Taxonomy::load(input.taxonomy);
}

namespace {

Timestamp floor_day(Timestamp t) {
  Timestamp d = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --d;
  return d * kSecondsPerDay;
}

}  // namespace

LogData load_log_data(const PipelineConfig& config, std::uint64_t seed) {
  LogData data;
  data.taxonomy = load_taxonomy(config.input);
  if (config.input.events.empty()) {
    SyntheticDataset ds = generate_dataset(config.generator, seed, data.taxonomy);
    data.events = std::move(ds.events);
    data.ground_truth = std::move(ds.ground_truth);
    data.span_start = ds.span_start;
    data.span_end = ds.span_end;
  } else {
    for (const auto& path : config.input.events) {
      ParseResult r = parse_event_file(path, data.taxonomy);
      data.skipped_rows += r.skipped;
      std::vector<Event> merged;
      merged.reserve(data.events.size() + r.events.size());
      std::merge(data.events.begin(), data.events.end(), r.events.begin(), r.events.end(),
                 std::back_inserter(merged),
                 [](const Event& a, const Event& b) { return a.time < b.time; });
      data.events = std::move(merged);
    }
    data.ground_truth = read_ground_truth_file(config.input.ground_truth);
    if (!data.events.empty()) {
      data.span_start = floor_day(data.events.front().time);
      data.span_end = floor_day(data.events.back().time) + kSecondsPerDay;
    }
  }
  if (!config.input.span_start.empty()) data.span_start = parse_timestamp(config.input.span_start);
  if (!config.input.span_end.empty()) data.span_end = parse_timestamp(config.input.span_end);
  if (data.span_end <= data.span_start) throw DataError("event span is empty");
  return data;
}

std::vector<std::string> select_users(const PipelineConfig& config, const LogData& data,
                                      std::uint64_t seed) {
  std::vector<std::string> users = config.users;
  if (users.empty()) {
    std::set<std::string> all;
    for (const auto& e : data.events) all.insert(e.user);
    users.assign(all.begin(), all.end());
  }
  if (config.sample_users > 0 && static_cast<std::size_t>(config.sample_users) < users.size()) {
    Rng rng(derive_seed(seed, "users"));
    for (std::size_t i = 0; i < static_cast<std::size_t>(config.sample_users); ++i) {
      std::swap(users[i], users[i + rng.below(users.size() - i)]);
    }
    users.resize(static_cast<std::size_t>(config.sample_users));
    std::sort(users.begin(), users.end());
  }
  if (users.empty()) throw DataError("no users to evaluate");
  return users;
}

UserWindows build_user_windows(const LogData& data, const std::string& user, int granularity,
                               const WindowConfig& windows) {
  UserWindows uw;
  uw.user = user;
  std::vector<Event> events;
  for (const auto& e : data.events) {
    if (e.user == user) events.push_back(e);
  }
  std::vector<Timestamp> anomalies;
  for (const auto& g : data.ground_truth) {
    if (g.user != user) continue;
    if (uw.scenario == 0) uw.scenario = g.scenario;
    anomalies.push_back(g.time);
  }
  for (Timestamp start : slide_windows(granularity, windows.step_hours, data.span_start, data.span_end)) {
    BehaviorMatrix m = build_matrix(events, start, granularity, windows.bin_hours, data.taxonomy.size());
    m.user = user;
    uw.windows.push_back({std::move(m), label_window(start, granularity, anomalies)});
  }
  return uw;
}

SplitPoints split_windows(std::size_t count, const SplitConfig& split) {
  SplitPoints p;
  p.total = count;
  p.train_end = static_cast<std::size_t>(std::llround(split.train * static_cast<double>(count)));
  p.validation_end = static_cast<std::size_t>(
      std::llround((split.train + split.validation) * static_cast<double>(count)));
  p.validation_end = std::min(p.validation_end, count);
  if (p.train_end == 0 || p.validation_end >= count) {
    throw DataError("chronological split of " + std::to_string(count) +
                    " windows leaves the train or test part empty");
  }
  return p;
}

Matrix represent_modulated(const Matrix& x, const BaselineStats* baseline, const ModulationConfig& mod,
                           const AblationFlags& flags) {
  if (flags.no_modulation) return x;
  if (!baseline) throw DataError("modulation requires a fitted baseline");
  return apply_modulation(x, *baseline, mod);
}

Tensor3 represent_tensor(const Matrix& xhat, const WaveletConfig& wavelet, const AblationFlags& flags) {
  return flags.no_dwt ? matrix_as_tensor(xhat) : decompose_matrix(xhat, wavelet);
}

Embedding embed(const UserModel& model, const Matrix& x, const WaveletConfig& wavelet,
                const AblationFlags& flags) {
  const BaselineStats* baseline = model.baseline ? &*model.baseline : nullptr;
  Tensor3 t = represent_tensor(represent_modulated(x, baseline, model.modulation, flags), wavelet, flags);
  if (model.attention) t = apply_attention(t, *model.attention);
  return flatten_embedding(t);
}

namespace {

std::size_t bins_for(int granularity, const WindowConfig& w) {
  return static_cast<std::size_t>(granularity / w.bin_hours);
}

bool has_both_labels(std::span<const LabeledWindow> windows) {
  bool pos = false, neg = false;
  for (const auto& w : windows) (w.label == Label::Abnormal ? pos : neg) = true;
  return pos && neg;
}

UserModel fit_once(const std::string& user, int granularity, std::span<const LabeledWindow> fit_set,
                   const ModulationConfig& mod, const PipelineConfig& config, std::uint64_t run_seed,
                   const BaselineStats* shared_baseline) {
  const AblationFlags& flags = config.ablation;
  const WaveletConfig wavelet = config.wavelet.resolve(bins_for(granularity, config.windows));
  UserModel um;
  um.user = user;
  um.granularity = granularity;
  um.modulation = mod;
  if (!flags.no_modulation) {
    if (shared_baseline) {
      um.baseline = *shared_baseline;
    } else {
      std::vector<Matrix> normals;
      for (const auto& w : fit_set) {
        if (w.label == Label::Normal) normals.push_back(w.matrix.values);
      }
      um.baseline = fit_baseline(normals, config.modulation.epsilon);
    }
  }

  std::vector<LabeledTensor> tensors;
  tensors.reserve(fit_set.size());
  const BaselineStats* baseline = um.baseline ? &*um.baseline : nullptr;
  for (const auto& w : fit_set) {
    tensors.push_back(
        {represent_tensor(represent_modulated(w.matrix.values, baseline, mod, flags), wavelet, flags),
         w.label});
  }
  if (!flags.no_attention) {
    AttentionTrainConfig ac;
    ac.hidden = config.attention.hidden;
    ac.epochs = config.attention.epochs;
    ac.learning_rate = config.attention.learning_rate;
    ac.weight_decay = config.attention.weight_decay;
    ac.use_bias = config.attention.use_bias;
    ac.seed = derive_seed(run_seed, "attention:" + user, static_cast<std::uint64_t>(granularity));
    um.attention = train_attention(tensors, ac);
  }

  std::vector<Embedding> embeddings;
  std::vector<Label> labels;
  for (const auto& t : tensors) {
    embeddings.push_back(flatten_embedding(um.attention ? apply_attention(t.tensor, *um.attention) : t.tensor));
    labels.push_back(t.label);
  }
  const std::uint64_t detector_seed =
      derive_seed(run_seed, "detector:" + user, static_cast<std::uint64_t>(granularity));
  if (parse_detector_kind(config.detector.kind) == DetectorKind::Mlp) {
    MlpTrainConfig mc;
    mc.hidden = config.detector.hidden;
    mc.epochs = config.detector.epochs;
    mc.learning_rate = config.detector.learning_rate;
    mc.positive_weight = config.detector.positive_weight;
    if (config.detector.class_weight == "balanced") {
      const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), Label::Abnormal));
      mc.positive_weight = (static_cast<double>(labels.size()) - pos) / pos;
    }
    mc.weight_decay = config.detector.weight_decay;
    mc.threshold = config.detector.threshold;
    mc.seed = detector_seed;
    um.detector = train_mlp_detector(embeddings, labels, mc);
  } else {
    IForestTrainConfig ic;
    ic.trees = config.detector.trees;
    ic.subsample = std::min(config.detector.subsample, embeddings.size());
    ic.contamination = config.detector.contamination;
    ic.seed = detector_seed;
    um.detector = train_iforest_detector(embeddings, ic);
  }
  return um;
}

std::vector<Label> labels_of(std::span<const LabeledWindow> windows) {
  std::vector<Label> out;
  for (const auto& w : windows) out.push_back(w.label);
  return out;
}

}  // namespace

UserModel fit_user_model(const std::string& user, int granularity, std::span<const LabeledWindow> train,
                         std::span<const LabeledWindow> validation, const PipelineConfig& config,
                         std::uint64_t run_seed, const BaselineStats* shared_baseline) {
  ModulationConfig mod{config.modulation.beta, config.modulation.lambda, config.modulation.tau};
  mod.validate();
  const WaveletConfig wavelet = config.wavelet.resolve(bins_for(granularity, config.windows));
  bool tuned = false;
  if (!config.modulation.tau_grid.empty() && !config.ablation.no_modulation &&
      has_both_labels(validation)) {
    const std::vector<Label> truth = labels_of(validation);
    auto evaluate = [&](double tau) {
      ModulationConfig m = mod;
      m.tau = tau;
      const UserModel candidate = fit_once(user, granularity, train, m, config, run_seed, shared_baseline);
      std::vector<Prediction> preds;
      for (const auto& w : validation) {
        preds.push_back(candidate.detector.predict(embed(candidate, w.matrix.values, wavelet, config.ablation)));
      }
      return compute_metrics(preds, truth).f1;
    };
    mod.tau = tune_tau(validation, config.modulation.tau_grid, evaluate);
    tuned = true;
  }
  std::vector<LabeledWindow> fit_set(train.begin(), train.end());
  if (config.split.refit_on_validation) fit_set.insert(fit_set.end(), validation.begin(), validation.end());
  UserModel um = fit_once(user, granularity, fit_set, mod, config, run_seed, shared_baseline);
  um.tau_tuned = tuned;
  return um;
}

std::optional<BaselineStats> fit_pooled_baseline(const PipelineConfig& config, const LogData& data,
                                                 std::span<const std::string> users, int granularity) {
  if (!config.modulation.pool_users || config.ablation.no_modulation) return std::nullopt;
  std::vector<Matrix> normals;
  for (const auto& user : users) {
    UserWindows uw = build_user_windows(data, user, granularity, config.windows);
    const SplitPoints sp = split_windows(uw.windows.size(), config.split);
    const std::size_t end = config.split.refit_on_validation ? sp.validation_end : sp.train_end;
    for (std::size_t i = 0; i < end; ++i) {
      if (uw.windows[i].label == Label::Normal) normals.push_back(uw.windows[i].matrix.values);
    }
  }
  return fit_baseline(normals, config.modulation.epsilon);
}

ExperimentResult run_experiment(const PipelineConfig& config, const LogData& data, int granularity,
                                std::uint64_t run_seed) {
  config.validate();
  ExperimentResult result;
  result.granularity = granularity;
  result.seed = run_seed;
  const auto users = select_users(config, data, run_seed);
  const auto shared = fit_pooled_baseline(config, data, users, granularity);
  const WaveletConfig wavelet = config.wavelet.resolve(bins_for(granularity, config.windows));

  std::vector<Metrics> per_user;
  for (const auto& user : users) {
    UserWindows uw = build_user_windows(data, user, granularity, config.windows);
    const SplitPoints sp = split_windows(uw.windows.size(), config.split);
    std::span<const LabeledWindow> all(uw.windows);
    UserModel model = fit_user_model(user, granularity, all.subspan(0, sp.train_end),
                                     all.subspan(sp.train_end, sp.validation_end - sp.train_end), config,
                                     run_seed, shared ? &*shared : nullptr);
    UserResult ur;
    ur.user = user;
    ur.scenario = uw.scenario;
    std::vector<Label> truth;
    std::vector<Prediction> preds;
    for (std::size_t i = sp.validation_end; i < sp.total; ++i) {
      const auto& w = uw.windows[i];
      const Prediction p = model.detector.predict(embed(model, w.matrix.values, wavelet, config.ablation));
      ur.predictions.push_back({w.matrix.window_start, user, p, w.label});
      preds.push_back(p);
      truth.push_back(w.label);
    }
    ur.metrics = compute_metrics(preds, truth);
    per_user.push_back(ur.metrics);
    result.users.push_back(std::move(ur));
    result.models.push_back(std::move(model));
  }
  result.mean = macro_average(per_user);
  result.pooled = pooled(per_user);
  return result;
}

std::vector<WindowPrediction> detect_windows(const PipelineConfig& config, const LogData& data,
                                             std::span<const UserModel> models) {
  std::vector<WindowPrediction> out;
  for (const auto& model : models) {
    const WaveletConfig wavelet = config.wavelet.resolve(bins_for(model.granularity, config.windows));
    UserWindows uw = build_user_windows(data, model.user, model.granularity, config.windows);
    const SplitPoints sp = split_windows(uw.windows.size(), config.split);
    for (std::size_t i = sp.validation_end; i < sp.total; ++i) {
      const auto& w = uw.windows[i];
      out.push_back({w.matrix.window_start, model.user,
                     model.detector.predict(embed(model, w.matrix.values, wavelet, config.ablation)),
                     w.label});
    }
  }
  return out;
}

std::uint64_t repeat_seed(std::uint64_t master, int repeat) {
  return repeat == 0 ? master : derive_seed(master, "repeat", static_cast<std::uint64_t>(repeat));
}

}  // namespace mrad
