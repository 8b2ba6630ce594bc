// Deviation-aware modulation: per-cell baselines fitted on normal windows,
// standardized deviation scores, and piecewise suppress/amplify weights.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "mrad/behavior_matrix.hpp"
#include "mrad/common.hpp"

namespace mrad {

/// Per-cell mean and population standard deviation over normal windows.
/// Immutable after fit_baseline.
struct BaselineStats {
  Matrix mu;
  Matrix sigma;
  std::size_t n_samples = 0;
  double epsilon = 1e-6;

  std::string to_json() const;
  static BaselineStats from_json(std::string_view text);

  friend bool operator==(const BaselineStats&, const BaselineStats&) = default;
};

struct ModulationConfig {
  double beta = 0.5;    // weight for stable cells, in (0, 1)
  double lambda = 1.0;  // amplification slope, > 0
  double tau = 2.0;     // deviation threshold, >= 0

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  friend bool operator==(const ModulationConfig&, const ModulationConfig&) = default;
};

/// Needs at least two matrices of identical shape; throws DataError
/// otherwise. Each cell's samples are sorted before summation, which makes
/// the result exactly invariant to the order of `normal_windows`.
BaselineStats fit_baseline(std::span<const Matrix> normal_windows, double epsilon = 1e-6);

/// |X - mu| / (sigma + epsilon), elementwise.
Matrix deviation_score(const Matrix& x, const BaselineStats& baseline);

/// beta where delta < tau, 1 + lambda * delta where delta >= tau.
Matrix modulation_weights(const Matrix& delta, const ModulationConfig& config);

/// Hadamard product X * M.
Matrix modulate(const Matrix& x, const Matrix& weights);

/// deviation_score -> modulation_weights -> modulate.
Matrix apply_modulation(const Matrix& x, const BaselineStats& baseline,
                        const ModulationConfig& config);

/// Exhaustive grid search: returns the candidate with the highest
/// `evaluate(tau)` (validation F1), ties to the smallest tau. Throws
/// ConfigError for an empty grid and DataError when the validation windows
/// do not contain both labels.
double tune_tau(std::span<const LabeledWindow> validation, std::span<const double> grid,
                const std::function<double(double tau)>& evaluate);

}  // namespace mrad
