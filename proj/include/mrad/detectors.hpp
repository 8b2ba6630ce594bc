// Window classifiers over the flattened multi-resolution embedding.
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrad/common.hpp"
#include "mrad/isolation_forest.hpp"

namespace mrad {

/// ((J+1)*H) x W matrix; row c*H + h is channel c, row h of the tensor.
using Embedding = Matrix;

Embedding flatten_embedding(const Tensor3& tensor);

/// Inverse of flatten_embedding. Throws ShapeError unless rows divide evenly.
Tensor3 unflatten_embedding(const Embedding& z, std::size_t channels);

enum class DetectorKind { Mlp, IsolationForest };

std::string_view to_string(DetectorKind kind);
DetectorKind parse_detector_kind(std::string_view s);

struct Prediction {
  Label label = Label::Normal;
  double score = 0.0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// One hidden tanh layer, sigmoid output. Inputs pass through signed_log1p.
struct MlpModel {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  Matrix w1;               // hidden x input_dim
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  /// Probability of Abnormal for already-compressed features.
  double forward(std::span<const double> features) const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

struct MlpGradient {
  Matrix w1;
  std::vector<double> b1;
  std::vector<double> w2;
  double b2 = 0.0;
};

struct LabeledFeatures {
  std::vector<double> features;  // compressed, flattened
  Label label = Label::Normal;
};

/// Mean (optionally class-weighted) BCE plus 0.5 * weight_decay * |W|^2 over
/// both weight matrices (biases excluded); fills `grad` when non-null.
/// Abnormal samples are weighted by `positive_weight`.
double mlp_loss(const MlpModel& model, std::span<const LabeledFeatures> data,
                double positive_weight = 1.0, double weight_decay = 0.0, MlpGradient* grad = nullptr);

struct MlpTrainConfig {
  std::size_t hidden = 32;
  int epochs = 500;
  double learning_rate = 0.05;
  double positive_weight = 1.0;  // class weight for Abnormal samples
  double weight_decay = 0.0;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

struct IForestTrainConfig {
  std::size_t trees = 100;
  std::size_t subsample = 64;
  double contamination = 0.05;
  std::uint64_t seed = 0;
};

/// A trained detector. Scores are oriented so higher means more anomalous
/// and label = Abnormal iff score >= threshold.
class Detector {
 public:
  static Detector from_mlp(MlpModel model, double threshold);
  static Detector from_forest(IsolationForest forest, double threshold);

  DetectorKind kind() const { return kind_; }
  double threshold() const { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }
  std::size_t input_dim() const;

  const MlpModel& mlp() const { return mlp_; }
  const IsolationForest& forest() const { return forest_; }

  /// Throws ShapeError on a dimension mismatch.
  double score(const Embedding& z) const;
  Prediction predict(const Embedding& z) const;

  std::string to_json() const;
  static Detector from_json(std::string_view text);

 private:
  DetectorKind kind_ = DetectorKind::Mlp;
  double threshold_ = 0.5;
  MlpModel mlp_;
  IsolationForest forest_;
};

/// signed_log1p applied to every embedding entry, row-major.
std::vector<double> compress_features(const Embedding& z);

/// Seeded full-batch gradient descent on BCE; a step that would raise the
/// loss is retried with a halved learning rate. Throws DataError unless both
/// labels are present.
Detector train_mlp_detector(std::span<const Embedding> data, std::span<const Label> labels,
                            const MlpTrainConfig& config);

/// Unsupervised; threshold puts the top `contamination` fraction of the
/// training scores at or above it. Throws DataError when there are fewer
/// points than `subsample`.
Detector train_iforest_detector(std::span<const Embedding> data, const IForestTrainConfig& config);

Prediction predict(const Detector& detector, const Embedding& z);

}  // namespace mrad
