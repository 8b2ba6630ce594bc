#include "mrad/modulation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mrad/serialize_detail.hpp"

namespace mrad {

void ModulationConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("modulation beta must lie in (0, 1)");
  if (!(lambda > 0.0)) throw ConfigError("modulation lambda must be > 0");
  if (!(tau >= 0.0)) throw ConfigError("modulation tau must be >= 0");
}

BaselineStats fit_baseline(std::span<const Matrix> normal_windows, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("baseline epsilon must be > 0");
  if (normal_windows.size() < 2) {
    throw DataError("baseline fitting needs at least 2 normal windows, got " +
                    std::to_string(normal_windows.size()));
  }
  const Matrix& first = normal_windows.front();
  for (const Matrix& m : normal_windows) require_same_shape(first, m, "fit_baseline");

  const std::size_t n = normal_windows.size();
  BaselineStats stats{Matrix(first.rows(), first.cols()), Matrix(first.rows(), first.cols()), n,
                      epsilon};
  std::vector<double> cell(n);
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) cell[k] = normal_windows[k].data()[i];
    std::sort(cell.begin(), cell.end());
    double sum = 0.0;
    for (double v : cell) sum += v;
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : cell) sq += (v - mean) * (v - mean);
    stats.mu.data()[i] = mean;
    stats.sigma.data()[i] = std::sqrt(sq / static_cast<double>(n));
  }
  return stats;
}

Matrix deviation_score(const Matrix& x, const BaselineStats& baseline) {
  require_same_shape(x, baseline.mu, "deviation_score");
  Matrix delta(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    delta.data()[i] =
        std::abs(x.data()[i] - baseline.mu.data()[i]) / (baseline.sigma.data()[i] + baseline.epsilon);
  }
  return delta;
}

Matrix modulation_weights(const Matrix& delta, const ModulationConfig& config) {
  Matrix weights(delta.rows(), delta.cols());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double d = delta.data()[i];
    weights.data()[i] = d < config.tau ? config.beta : 1.0 + config.lambda * d;
  }
  return weights;
}

Matrix modulate(const Matrix& x, const Matrix& weights) {
  require_same_shape(x, weights, "modulate");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = x.data()[i] * weights.data()[i];
  return out;
}

Matrix apply_modulation(const Matrix& x, const BaselineStats& baseline,
                        const ModulationConfig& config) {
  return modulate(x, modulation_weights(deviation_score(x, baseline), config));
}

double tune_tau(std::span<const LabeledWindow> validation, std::span<const double> grid,
                const std::function<double(double tau)>& evaluate) {
  if (grid.empty()) throw ConfigError("tau grid is empty");
  const bool has_normal = std::any_of(validation.begin(), validation.end(),
                                      [](const LabeledWindow& w) { return w.label == Label::Normal; });
  const bool has_abnormal = std::any_of(validation.begin(), validation.end(), [](const LabeledWindow& w) {
    return w.label == Label::Abnormal;
  });
  if (!has_normal || !has_abnormal) {
    throw DataError("tau tuning needs validation windows of both labels");
  }
  std::vector<double> candidates(grid.begin(), grid.end());
  std::sort(candidates.begin(), candidates.end());
  double best_tau = candidates.front();
  double best_f1 = -1.0;
  for (double tau : candidates) {
    if (!(tau >= 0.0)) throw ConfigError("tau candidates must be >= 0");
    const double f1 = evaluate(tau);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_tau = tau;
    }
  }
  return best_tau;
}

std::string BaselineStats::to_json() const {
  nlohmann::json j{{"mu", detail::matrix_to_json(mu)},
                   {"sigma", detail::matrix_to_json(sigma)},
                   {"n_samples", n_samples},
                   {"epsilon", epsilon}};
  return j.dump();
}

BaselineStats BaselineStats::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BaselineStats s{detail::matrix_from_json(j.at("mu")), detail::matrix_from_json(j.at("sigma")),
                    j.at("n_samples").get<std::size_t>(), j.at("epsilon").get<double>()};
    require_same_shape(s.mu, s.sigma, "baseline");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid baseline JSON: ") + e.what());
  }
}

}  // namespace mrad
