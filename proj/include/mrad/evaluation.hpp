// Binary detection metrics with Abnormal as the positive class.
#pragma once

#include <cstddef>
#include <span>

#include "mrad/common.hpp"
#include "mrad/detectors.hpp"

namespace mrad {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Precision/recall/F1 from confusion counts; a zero denominator yields 0.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

/// Throws DataError for empty or unequal-length inputs.
Metrics compute_metrics(std::span<const Label> predicted, std::span<const Label> truth);
Metrics compute_metrics(std::span<const Prediction> predictions, std::span<const Label> truth);

/// Unweighted mean of precision, recall and F1 (counts are summed).
Metrics macro_average(std::span<const Metrics> runs);

/// Metrics recomputed from the summed confusion counts.
Metrics pooled(std::span<const Metrics> runs);

}  // namespace mrad
