#include "mrad/attention.hpp"

#include <algorithm>
#include <cmath>

#include "mrad/rng.hpp"
#include "mrad/serialize_detail.hpp"

namespace mrad {

ChannelDescriptors pool_descriptors(const Tensor3& tensor) {
  ChannelDescriptors d;
  d.avg.resize(tensor.channels());
  d.max.resize(tensor.channels());
  const double count = static_cast<double>(tensor.plane_size());
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    const auto plane = tensor.channel(c);
    double sum = 0.0;
    double mx = plane.empty() ? 0.0 : plane[0];
    for (double v : plane) {
      sum += v;
      mx = std::max(mx, v);
    }
    d.avg[c] = plane.empty() ? 0.0 : sum / count;
    d.max[c] = mx;
  }
  return d;
}

AttentionParams AttentionParams::zeros(std::size_t channels, std::size_t hidden, bool use_bias) {
  AttentionParams p;
  p.channels = channels;
  p.hidden = hidden;
  p.w1 = Matrix(hidden, 2 * channels);
  p.b1.assign(hidden, 0.0);
  p.w2 = Matrix(channels, hidden);
  p.b2.assign(channels, 0.0);
  p.use_bias = use_bias;
  p.input_shift.assign(2 * channels, 0.0);
  p.input_scale.assign(2 * channels, 1.0);
  return p;
}

void AttentionParams::validate() const {
  if (hidden < 1) throw ShapeError("attention hidden width must be >= 1");
  if (w1.rows() != hidden || w1.cols() != 2 * channels || b1.size() != hidden ||
      w2.rows() != channels || w2.cols() != hidden || b2.size() != channels ||
      input_shift.size() != 2 * channels || input_scale.size() != 2 * channels) {
    throw ShapeError("attention parameter dimensions disagree with channels=" +
                     std::to_string(channels) + ", hidden=" + std::to_string(hidden));
  }
}

std::size_t default_attention_hidden(std::size_t channels) { return std::max<std::size_t>(4, channels); }

double sigmoid(double x) {
  x = std::clamp(x, -30.0, 30.0);
  return 1.0 / (1.0 + std::exp(-x));
}

namespace {

struct Forward {
  std::vector<double> input;   // standardized descriptors, 2C
  std::vector<double> pre;     // hidden pre-activation
  std::vector<double> act;     // relu(pre)
  std::vector<double> scores;  // C
};

Forward forward(const ChannelDescriptors& desc, const AttentionParams& p) {
  const std::size_t c = p.channels;
  if (desc.avg.size() != c || desc.max.size() != c) {
    throw ShapeError("attention expects " + std::to_string(c) + " channels, descriptors have " +
                     std::to_string(desc.avg.size()));
  }
  Forward f;
  f.input.resize(2 * c);
  for (std::size_t i = 0; i < c; ++i) {
    f.input[i] = (desc.avg[i] - p.input_shift[i]) / p.input_scale[i];
    f.input[c + i] = (desc.max[i] - p.input_shift[c + i]) / p.input_scale[c + i];
  }
  f.pre.assign(p.hidden, 0.0);
  f.act.assign(p.hidden, 0.0);
  for (std::size_t k = 0; k < p.hidden; ++k) {
    double z = p.use_bias ? p.b1[k] : 0.0;
    const auto row = p.w1.row(k);
    for (std::size_t i = 0; i < row.size(); ++i) z += row[i] * f.input[i];
    f.pre[k] = z;
    f.act[k] = z > 0.0 ? z : 0.0;
  }
  f.scores.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    double z = p.use_bias ? p.b2[i] : 0.0;
    const auto row = p.w2.row(i);
    for (std::size_t k = 0; k < p.hidden; ++k) z += row[k] * f.act[k];
    f.scores[i] = sigmoid(z);
  }
  return f;
}

}  // namespace

std::vector<double> attention_scores(const ChannelDescriptors& desc, const AttentionParams& params) {
  params.validate();
  return forward(desc, params).scores;
}

Tensor3 reweight(const Tensor3& tensor, std::span<const double> scores) {
  if (scores.size() != tensor.channels()) {
    throw ShapeError("reweight: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(tensor.channels()) + " channels");
  }
  Tensor3 out = tensor;
  for (std::size_t c = 0; c < tensor.channels(); ++c) {
    for (double& v : out.channel(c)) v *= scores[c];
  }
  return out;
}

Tensor3 apply_attention(const Tensor3& tensor, const AttentionParams& params) {
  return reweight(tensor, attention_scores(pool_descriptors(tensor), params));
}

namespace {

double bce(double p, double y) {
  constexpr double kFloor = 1e-15;
  return -(y * std::log(std::max(p, kFloor)) + (1.0 - y) * std::log(std::max(1.0 - p, kFloor)));
}

AttentionGradient zero_gradient(const AttentionParams& p, std::size_t features) {
  return {Matrix(p.hidden, 2 * p.channels), std::vector<double>(p.hidden, 0.0),
          Matrix(p.channels, p.hidden), std::vector<double>(p.channels, 0.0),
          ProxyHead{std::vector<double>(features, 0.0), 0.0}};
}

}  // namespace

double attention_loss(const AttentionParams& params, const ProxyHead& head,
                      std::span<const LabeledTensor> data, AttentionGradient* grad) {
  if (data.empty()) throw DataError("attention loss over an empty set");
  const std::size_t features = data.front().tensor.size();
  if (head.weights.size() != features) throw ShapeError("proxy head width does not match tensors");
  if (grad) *grad = zero_gradient(params, features);

  const double inv_n = 1.0 / static_cast<double>(data.size());
  const std::size_t channels = params.channels;
  std::vector<double> feat(features);
  double loss = 0.0;
  for (const LabeledTensor& sample : data) {
    const Tensor3& x = sample.tensor;
    if (x.size() != features || x.channels() != channels) {
      throw ShapeError("attention training tensors disagree in shape");
    }
    const Forward f = forward(pool_descriptors(x), params);
    const std::size_t plane = x.plane_size();
    double logit = head.bias;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto src = x.channel(c);
      for (std::size_t i = 0; i < plane; ++i) {
        const double v = signed_log1p(f.scores[c] * src[i]);
        feat[c * plane + i] = v;
        logit += head.weights[c * plane + i] * v;
      }
    }
    const double prob = sigmoid(logit);
    const double y = sample.label == Label::Abnormal ? 1.0 : 0.0;
    loss += bce(prob, y) * inv_n;
    if (!grad) continue;

    const double g = (prob - y) * inv_n;
    grad->head.bias += g;
    std::vector<double> d_score(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
      const auto src = x.channel(c);
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = c * plane + i;
        grad->head.weights[idx] += g * feat[idx];
        acc += g * head.weights[idx] * signed_log1p_derivative(f.scores[c] * src[i]) * src[i];
      }
      d_score[c] = acc;
    }
    std::vector<double> d_act(params.hidden, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
      const double da = d_score[c] * f.scores[c] * (1.0 - f.scores[c]);
      if (params.use_bias) grad->b2[c] += da;
      const auto w2row = params.w2.row(c);
      auto g2row = grad->w2.row(c);
      for (std::size_t k = 0; k < params.hidden; ++k) {
        g2row[k] += da * f.act[k];
        d_act[k] += da * w2row[k];
      }
    }
    for (std::size_t k = 0; k < params.hidden; ++k) {
      if (f.pre[k] <= 0.0) continue;
      if (params.use_bias) grad->b1[k] += d_act[k];
      auto g1row = grad->w1.row(k);
      for (std::size_t i = 0; i < g1row.size(); ++i) g1row[i] += d_act[k] * f.input[i];
    }
  }
  return loss;
}

void fit_descriptor_normalization(std::span<const LabeledTensor> data, AttentionParams& params) {
  const std::size_t width = 2 * params.channels;
  std::vector<std::vector<double>> columns(width);
  for (const auto& sample : data) {
    const ChannelDescriptors d = pool_descriptors(sample.tensor);
    for (std::size_t c = 0; c < params.channels; ++c) {
      columns[c].push_back(d.avg[c]);
      columns[params.channels + c].push_back(d.max[c]);
    }
  }
  params.input_shift.assign(width, 0.0);
  params.input_scale.assign(width, 1.0);
  for (std::size_t i = 0; i < width; ++i) {
    const auto& col = columns[i];
    if (col.empty()) continue;
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double var = 0.0;
    for (double v : col) {
      const double centered = params.use_bias ? v - mean : v;
      var += centered * centered;
    }
    const double scale = std::sqrt(var / static_cast<double>(col.size()));
    params.input_shift[i] = params.use_bias ? mean : 0.0;
    params.input_scale[i] = scale > 1e-12 ? scale : 1.0;
  }
}

namespace {

void fill_uniform(std::span<double> values, double bound, Rng& rng) {
  for (double& v : values) v = rng.uniform(-bound, bound);
}

struct Snapshot {
  AttentionParams params;
  ProxyHead head;
};

void step(Snapshot& s, const AttentionGradient& g, double lr) {
  auto axpy = [lr](std::span<double> dst, std::span<const double> src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * src[i];
  };
  axpy(s.params.w1.data(), g.w1.data());
  axpy(s.params.w2.data(), g.w2.data());
  if (s.params.use_bias) {
    axpy(s.params.b1, g.b1);
    axpy(s.params.b2, g.b2);
  }
  axpy(s.head.weights, g.head.weights);
  s.head.bias -= lr * g.head.bias;
}

}  // namespace

AttentionParams train_attention(std::span<const LabeledTensor> data, const AttentionTrainConfig& config) {
  if (!(config.learning_rate > 0.0)) throw ConfigError("attention learning rate must be > 0");
  if (config.epochs < 0) throw ConfigError("attention epochs must be >= 0");
  if (!(config.weight_decay >= 0.0)) throw ConfigError("attention weight decay must be >= 0");
  const bool has_pos = std::any_of(data.begin(), data.end(),
                                   [](const LabeledTensor& s) { return s.label == Label::Abnormal; });
  const bool has_neg = std::any_of(data.begin(), data.end(),
                                   [](const LabeledTensor& s) { return s.label == Label::Normal; });
  if (!has_pos || !has_neg) throw DataError("attention training needs both Normal and Abnormal windows");

  const std::size_t channels = data.front().tensor.channels();
  const std::size_t hidden = config.hidden ? config.hidden : default_attention_hidden(channels);
  const std::size_t features = data.front().tensor.size();

  Rng rng(config.seed);
  Snapshot cur{AttentionParams::zeros(channels, hidden, config.use_bias), {}};
  fill_uniform(cur.params.w1.data(), 1.0 / std::sqrt(static_cast<double>(2 * channels)), rng);
  fill_uniform(cur.params.w2.data(), 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  if (config.use_bias) {
    fill_uniform(cur.params.b1, 1.0 / std::sqrt(static_cast<double>(2 * channels)), rng);
    fill_uniform(cur.params.b2, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  }
  cur.head.weights.resize(features);
  fill_uniform(cur.head.weights, 1.0 / std::sqrt(static_cast<double>(features)), rng);
  fit_descriptor_normalization(data, cur.params);

  cur.params.seed = config.seed;
  cur.params.epochs = config.epochs;
  cur.params.learning_rate = config.learning_rate;

  // Training objective: proxy BCE plus an L2 penalty on every weight matrix
  // (attention and proxy head, biases excluded).
  auto objective = [&](const Snapshot& s, AttentionGradient* g) {
    double value = attention_loss(s.params, s.head, data, g);
    if (config.weight_decay <= 0.0) return value;
    auto penalize = [&](std::span<const double> w, std::span<double> gw) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        value += 0.5 * config.weight_decay * w[i] * w[i];
        if (g) gw[i] += config.weight_decay * w[i];
      }
    };
    penalize(s.params.w1.data(), g ? g->w1.data() : std::span<double>{});
    penalize(s.params.w2.data(), g ? g->w2.data() : std::span<double>{});
    penalize(s.head.weights, g ? std::span<double>(g->head.weights) : std::span<double>{});
    return value;
  };

  AttentionGradient grad;
  double loss = objective(cur, &grad);
  cur.params.initial_loss = loss;
  double lr = config.learning_rate;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Snapshot trial = cur;
      step(trial, grad, lr);
      const double trial_loss = objective(trial, nullptr);
      if (trial_loss <= loss) {
        cur = std::move(trial);
        loss = objective(cur, &grad);
        accepted = true;
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;
  }
  cur.params.final_loss = loss;
  return cur.params;
}

std::string AttentionParams::to_json() const {
  nlohmann::json j{{"channels", channels},
                   {"hidden", hidden},
                   {"w1", detail::matrix_to_json(w1)},
                   {"b1", b1},
                   {"w2", detail::matrix_to_json(w2)},
                   {"b2", b2},
                   {"use_bias", use_bias},
                   {"input_shift", input_shift},
                   {"input_scale", input_scale},
                   {"seed", seed},
                   {"training", {{"epochs", epochs},
                                 {"learning_rate", learning_rate},
                                 {"initial_loss", initial_loss},
                                 {"final_loss", final_loss}}}};
  return j.dump();
}

AttentionParams AttentionParams::from_json(std::string_view text) {
  AttentionParams p;
  try {
    const auto j = nlohmann::json::parse(text);
    p.channels = j.at("channels").get<std::size_t>();
    p.hidden = j.at("hidden").get<std::size_t>();
    p.w1 = detail::matrix_from_json(j.at("w1"));
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = detail::matrix_from_json(j.at("w2"));
    p.b2 = j.at("b2").get<std::vector<double>>();
    p.use_bias = j.at("use_bias").get<bool>();
    p.input_shift = j.at("input_shift").get<std::vector<double>>();
    p.input_scale = j.at("input_scale").get<std::vector<double>>();
    p.seed = j.at("seed").get<std::uint64_t>();
    const auto& t = j.at("training");
    p.epochs = t.at("epochs").get<int>();
    p.learning_rate = t.at("learning_rate").get<double>();
    p.initial_loss = t.at("initial_loss").get<double>();
    p.final_loss = t.at("final_loss").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid attention JSON: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace mrad
