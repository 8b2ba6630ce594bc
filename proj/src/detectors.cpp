#include "mrad/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mrad/attention.hpp"
#include "mrad/rng.hpp"
#include "mrad/serialize_detail.hpp"

namespace mrad {

Embedding flatten_embedding(const Tensor3& tensor) {
  Embedding z(tensor.channels() * tensor.rows(), tensor.cols());
  std::copy(tensor.data().begin(), tensor.data().end(), z.data().begin());
  return z;
}

Tensor3 unflatten_embedding(const Embedding& z, std::size_t channels) {
  if (channels == 0 || z.rows() % channels != 0) {
    throw ShapeError("embedding with " + std::to_string(z.rows()) + " rows cannot hold " +
                     std::to_string(channels) + " channels");
  }
  Tensor3 t(channels, z.rows() / channels, z.cols());
  std::copy(z.data().begin(), z.data().end(), t.data().begin());
  return t;
}

std::string_view to_string(DetectorKind kind) {
  return kind == DetectorKind::Mlp ? "mlp" : "iforest";
}

DetectorKind parse_detector_kind(std::string_view s) {
  if (s == "mlp") return DetectorKind::Mlp;
  if (s == "iforest") return DetectorKind::IsolationForest;
  throw ConfigError("unknown detector kind '" + std::string(s) + "' (expected mlp or iforest)");
}

std::vector<double> compress_features(const Embedding& z) {
  std::vector<double> out(z.size());
  std::transform(z.data().begin(), z.data().end(), out.begin(), signed_log1p);
  return out;
}

double MlpModel::forward(std::span<const double> x) const {
  double out = b2;
  for (std::size_t k = 0; k < hidden; ++k) {
    const auto row = w1.row(k);
    double z = b1[k];
    for (std::size_t i = 0; i < input_dim; ++i) z += row[i] * x[i];
    out += w2[k] * std::tanh(z);
  }
  return sigmoid(out);
}

namespace {

double bce(double p, double y) {
  constexpr double kFloor = 1e-15;
  return -(y * std::log(std::max(p, kFloor)) + (1.0 - y) * std::log(std::max(1.0 - p, kFloor)));
}

}  // namespace

double mlp_loss(const MlpModel& m, std::span<const LabeledFeatures> data, double positive_weight,
                double weight_decay, MlpGradient* grad) {
  if (data.empty()) throw DataError("MLP loss over an empty set");
  if (grad) {
    *grad = {Matrix(m.hidden, m.input_dim), std::vector<double>(m.hidden, 0.0),
             std::vector<double>(m.hidden, 0.0), 0.0};
  }
  double total_weight = 0.0;
  for (const auto& s : data) total_weight += s.label == Label::Abnormal ? positive_weight : 1.0;

  std::vector<double> act(m.hidden);
  double loss = 0.0;
  for (const auto& s : data) {
    if (s.features.size() != m.input_dim) throw ShapeError("MLP input dimension mismatch");
    double logit = m.b2;
    for (std::size_t k = 0; k < m.hidden; ++k) {
      const auto row = m.w1.row(k);
      double z = m.b1[k];
      for (std::size_t i = 0; i < m.input_dim; ++i) z += row[i] * s.features[i];
      act[k] = std::tanh(z);
      logit += m.w2[k] * act[k];
    }
    const double p = sigmoid(logit);
    const double y = s.label == Label::Abnormal ? 1.0 : 0.0;
    const double w = (s.label == Label::Abnormal ? positive_weight : 1.0) / total_weight;
    loss += w * bce(p, y);
    if (!grad) continue;
    const double g = w * (p - y);
    grad->b2 += g;
    for (std::size_t k = 0; k < m.hidden; ++k) {
      grad->w2[k] += g * act[k];
      const double dz = g * m.w2[k] * (1.0 - act[k] * act[k]);
      grad->b1[k] += dz;
      auto grow = grad->w1.row(k);
      for (std::size_t i = 0; i < m.input_dim; ++i) grow[i] += dz * s.features[i];
    }
  }
  if (weight_decay > 0.0) {
    double sq = 0.0;
    for (double v : m.w1.data()) sq += v * v;
    for (double v : m.w2) sq += v * v;
    loss += 0.5 * weight_decay * sq;
    if (grad) {
      for (std::size_t i = 0; i < m.w1.size(); ++i) grad->w1.data()[i] += weight_decay * m.w1.data()[i];
      for (std::size_t k = 0; k < m.hidden; ++k) grad->w2[k] += weight_decay * m.w2[k];
    }
  }
  return loss;
}

Detector Detector::from_mlp(MlpModel model, double threshold) {
  Detector d;
  d.kind_ = DetectorKind::Mlp;
  d.mlp_ = std::move(model);
  d.threshold_ = threshold;
  return d;
}

Detector Detector::from_forest(IsolationForest forest, double threshold) {
  Detector d;
  d.kind_ = DetectorKind::IsolationForest;
  d.forest_ = std::move(forest);
  d.threshold_ = threshold;
  return d;
}

std::size_t Detector::input_dim() const {
  return kind_ == DetectorKind::Mlp ? mlp_.input_dim : forest_.dims();
}

double Detector::score(const Embedding& z) const {
  if (z.size() != input_dim()) {
    throw ShapeError("detector expects embedding dimension " + std::to_string(input_dim()) +
                     ", got " + std::to_string(z.size()));
  }
  const auto x = compress_features(z);
  return kind_ == DetectorKind::Mlp ? mlp_.forward(x) : forest_.score(x);
}

Prediction Detector::predict(const Embedding& z) const {
  const double s = score(z);
  return {s >= threshold_ ? Label::Abnormal : Label::Normal, s};
}

Prediction predict(const Detector& detector, const Embedding& z) { return detector.predict(z); }

Detector train_mlp_detector(std::span<const Embedding> data, std::span<const Label> labels,
                            const MlpTrainConfig& config) {
  if (data.size() != labels.size()) throw DataError("MLP training: data/label count mismatch");
  if (config.hidden < 1) throw ConfigError("MLP hidden width must be >= 1");
  if (!(config.learning_rate > 0.0)) throw ConfigError("MLP learning rate must be > 0");
  if (config.epochs < 0) throw ConfigError("MLP epochs must be >= 0");
  if (!(config.weight_decay >= 0.0)) throw ConfigError("MLP weight decay must be >= 0");
  const bool has_pos = std::find(labels.begin(), labels.end(), Label::Abnormal) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), Label::Normal) != labels.end();
  if (!has_pos || !has_neg) throw DataError("MLP training needs both Normal and Abnormal windows");

  std::vector<LabeledFeatures> samples;
  samples.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) samples.push_back({compress_features(data[i]), labels[i]});
  const std::size_t dim = samples.front().features.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) throw ShapeError("MLP training embeddings differ in dimension");
  }

  Rng rng(config.seed);
  MlpModel m;
  m.input_dim = dim;
  m.hidden = config.hidden;
  m.w1 = Matrix(config.hidden, dim);
  m.b1.resize(config.hidden);
  m.w2.resize(config.hidden);
  const double r1 = 1.0 / std::sqrt(static_cast<double>(dim));
  const double r2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  for (double& v : m.w1.data()) v = rng.uniform(-r1, r1);
  for (double& v : m.b1) v = rng.uniform(-r1, r1);
  for (double& v : m.w2) v = rng.uniform(-r2, r2);
  m.b2 = rng.uniform(-r2, r2);

  MlpGradient grad;
  double loss = mlp_loss(m, samples, config.positive_weight, config.weight_decay, &grad);
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      MlpModel trial = m;
      for (std::size_t i = 0; i < trial.w1.size(); ++i) trial.w1.data()[i] -= lr * grad.w1.data()[i];
      for (std::size_t k = 0; k < trial.hidden; ++k) {
        trial.b1[k] -= lr * grad.b1[k];
        trial.w2[k] -= lr * grad.w2[k];
      }
      trial.b2 -= lr * grad.b2;
      const double trial_loss = mlp_loss(trial, samples, config.positive_weight, config.weight_decay);
      if (trial_loss <= loss) {
        m = std::move(trial);
        loss = mlp_loss(m, samples, config.positive_weight, config.weight_decay, &grad);
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;
  }
  return Detector::from_mlp(std::move(m), config.threshold);
}

Detector train_iforest_detector(std::span<const Embedding> data, const IForestTrainConfig& config) {
  if (!(config.contamination > 0.0 && config.contamination < 1.0)) {
    throw ConfigError("isolation forest contamination must lie in (0, 1)");
  }
  if (data.size() < config.subsample) {
    throw DataError("isolation forest needs at least " + std::to_string(config.subsample) +
                    " windows, got " + std::to_string(data.size()));
  }
  std::vector<std::vector<double>> points;
  points.reserve(data.size());
  for (const auto& z : data) points.push_back(compress_features(z));
  IsolationForest forest = IsolationForest::fit(points, config.trees, config.subsample, config.seed);

  std::vector<double> scores;
  scores.reserve(points.size());
  for (const auto& p : points) scores.push_back(forest.score(p));
  std::sort(scores.begin(), scores.end(), std::greater<>());
  auto flagged = static_cast<std::size_t>(
      std::ceil(config.contamination * static_cast<double>(scores.size()) - 1e-9));
  flagged = std::clamp<std::size_t>(flagged, 1, scores.size());
  return Detector::from_forest(std::move(forest), scores[flagged - 1]);
}

std::string Detector::to_json() const {
  nlohmann::json j{{"kind", std::string(to_string(kind_))},
                   {"threshold", threshold_},
                   {"input_dim", input_dim()},
                   {"input_transform", "signed_log1p"}};
  if (kind_ == DetectorKind::Mlp) {
    j["mlp"] = {{"hidden", mlp_.hidden},
                {"w1", detail::matrix_to_json(mlp_.w1)},
                {"b1", mlp_.b1},
                {"w2", mlp_.w2},
                {"b2", mlp_.b2}};
  } else {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest_.trees()) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : tree) nodes.push_back({n.feature, n.split, n.left, n.right, n.size});
      trees.push_back(std::move(nodes));
    }
    j["iforest"] = {{"subsample", forest_.subsample()}, {"trees", std::move(trees)}};
  }
  return j.dump();
}

Detector Detector::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const DetectorKind kind = parse_detector_kind(j.at("kind").get<std::string>());
    const double threshold = j.at("threshold").get<double>();
    const auto dim = j.at("input_dim").get<std::size_t>();
    if (j.at("input_transform").get<std::string>() != "signed_log1p") {
      throw DataError("unsupported detector input transform");
    }
    if (kind == DetectorKind::Mlp) {
      const auto& p = j.at("mlp");
      MlpModel m;
      m.input_dim = dim;
      m.hidden = p.at("hidden").get<std::size_t>();
      m.w1 = detail::matrix_from_json(p.at("w1"));
      m.b1 = p.at("b1").get<std::vector<double>>();
      m.w2 = p.at("w2").get<std::vector<double>>();
      m.b2 = p.at("b2").get<double>();
      if (m.w1.rows() != m.hidden || m.w1.cols() != dim || m.b1.size() != m.hidden ||
          m.w2.size() != m.hidden) {
        throw ShapeError("MLP detector dimensions disagree with input_dim=" + std::to_string(dim));
      }
      return from_mlp(std::move(m), threshold);
    }
    const auto& p = j.at("iforest");
    std::vector<IsolationForest::Tree> trees;
    for (const auto& jt : p.at("trees")) {
      IsolationForest::Tree tree;
      for (const auto& jn : jt) {
        IsolationForest::Node n{jn.at(0).get<int>(), jn.at(1).get<double>(), jn.at(2).get<int>(),
                                jn.at(3).get<int>(), jn.at(4).get<std::size_t>()};
        if (n.feature >= static_cast<int>(dim)) {
          throw ShapeError("isolation tree feature index exceeds input_dim=" + std::to_string(dim));
        }
        tree.push_back(n);
      }
      const auto count = static_cast<int>(tree.size());
      for (const auto& n : tree) {
        if (n.feature >= 0 && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count)) {
          throw DataError("isolation tree has dangling child index");
        }
      }
      if (tree.empty()) throw DataError("isolation tree is empty");
      trees.push_back(std::move(tree));
    }
    return from_forest(IsolationForest(dim, p.at("subsample").get<std::size_t>(), std::move(trees)),
                       threshold);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid detector JSON: ") + e.what());
  }
}

}  // namespace mrad
