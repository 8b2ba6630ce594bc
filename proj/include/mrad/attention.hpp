// Resolution-adaptive channel attention over the multi-resolution tensor.
//
// Each channel is summarized by its mean and maximum; a two-layer
// perceptron (ReLU hidden layer, sigmoid output) maps the concatenated
// descriptors [avg || max] to one gate per channel, and every channel is
// scaled by its gate.
//
// The descriptors are standardized with a fixed per-feature shift/scale
// fitted on the training windows before entering the perceptron. That is an
// affine reparameterization of the first layer, so the map remains a plain
// two-layer perceptron of the raw descriptors; it keeps the optimization
// well-conditioned when modulated counts span many orders of magnitude.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrad/common.hpp"

namespace mrad {

struct ChannelDescriptors {
  std::vector<double> avg;
  std::vector<double> max;
};

ChannelDescriptors pool_descriptors(const Tensor3& tensor);

struct AttentionParams {
  std::size_t channels = 0;
  std::size_t hidden = 0;
  Matrix w1;               // hidden x 2*channels
  std::vector<double> b1;  // hidden
  Matrix w2;               // channels x hidden
  std::vector<double> b2;  // channels
  bool use_bias = true;
  std::vector<double> input_shift;  // 2*channels, not trained
  std::vector<double> input_scale;  // 2*channels, not trained

  // Training metadata (informational).
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;

  /// All weights zero, identity input normalization.
  static AttentionParams zeros(std::size_t channels, std::size_t hidden, bool use_bias = true);

  /// Throws ShapeError when the arrays disagree with channels/hidden.
  void validate() const;

  std::string to_json() const;
  static AttentionParams from_json(std::string_view text);

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

/// max(4, channels), the default hidden width.
std::size_t default_attention_hidden(std::size_t channels);

/// Logistic sigmoid with the pre-activation clamped to [-30, 30], so the
/// result stays strictly inside (0, 1) in double precision.
double sigmoid(double x);

/// s = sigmoid(W2 relu(W1 u + b1) + b2) with u the standardized [avg || max].
std::vector<double> attention_scores(const ChannelDescriptors& desc, const AttentionParams& params);

/// X'[c,h,w] = s_c X[c,h,w]. Throws ShapeError on a channel-count mismatch.
Tensor3 reweight(const Tensor3& tensor, std::span<const double> scores);

/// pool -> score -> reweight.
Tensor3 apply_attention(const Tensor3& tensor, const AttentionParams& params);

struct LabeledTensor {
  Tensor3 tensor;
  Label label = Label::Normal;
};

struct AttentionTrainConfig {
  std::size_t hidden = 0;  // 0 selects default_attention_hidden
  int epochs = 300;
  double learning_rate = 0.1;
  double weight_decay = 0.0;  // L2 on attention and proxy-head weights
  bool use_bias = true;
  std::uint64_t seed = 0;
};

/// Disposable logistic head used only while fitting the attention weights:
/// p = sigmoid(weights . signed_log1p(flatten(X')) + bias).
struct ProxyHead {
  std::vector<double> weights;
  double bias = 0.0;
};

struct AttentionGradient {
  Matrix w1;
  std::vector<double> b1;
  Matrix w2;
  std::vector<double> b2;
  ProxyHead head;
};

/// Mean binary cross-entropy of the proxy head over `data`; fills `grad`
/// with the analytic gradient when non-null. Bias gradients are zero when
/// params.use_bias is false.
double attention_loss(const AttentionParams& params, const ProxyHead& head,
                      std::span<const LabeledTensor> data, AttentionGradient* grad = nullptr);

/// Fits the descriptor normalization on `data`, then trains the attention
/// perceptron jointly with a proxy head by full-batch gradient descent. A
/// step that would raise the loss is retried with a halved learning rate, so
/// the loss never increases. Deterministic for a fixed seed. Throws
/// DataError unless both labels are present, ConfigError for lr <= 0.
AttentionParams train_attention(std::span<const LabeledTensor> data,
                                const AttentionTrainConfig& config);

/// Per-feature mean/stddev of [avg || max] over the given tensors (stddev
/// floored at 1e-12 -> 1). Without bias the shift is zero and the scale is
/// the root mean square.
void fit_descriptor_normalization(std::span<const LabeledTensor> data, AttentionParams& params);

}  // namespace mrad
