#include "mrad/evaluation.hpp"

#include <string>
#include <vector>

namespace mrad {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  const double sum = m.precision + m.recall;
  m.f1 = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
  return m;
}

Metrics compute_metrics(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw DataError("metrics: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  }
  if (predicted.empty()) throw DataError("metrics: no predictions");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == Label::Abnormal;
    const bool t = truth[i] == Label::Abnormal;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
    tn += !p && !t;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

Metrics compute_metrics(std::span<const Prediction> predictions, std::span<const Label> truth) {
  std::vector<Label> labels;
  labels.reserve(predictions.size());
  for (const auto& p : predictions) labels.push_back(p.label);
  return compute_metrics(labels, truth);
}

Metrics macro_average(std::span<const Metrics> runs) {
  Metrics m;
  if (runs.empty()) return m;
  for (const auto& r : runs) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
    m.tp += r.tp;
    m.fp += r.fp;
    m.fn += r.fn;
    m.tn += r.tn;
  }
  const double n = static_cast<double>(runs.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

Metrics pooled(std::span<const Metrics> runs) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& r : runs) {
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    tn += r.tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

}  // namespace mrad
