// Shared value types for the multi-resolution anomaly detection pipeline:
// error hierarchy, timestamps, dense row-major matrices and 3-d tensors.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mrad {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data: parse failures, shape mismatches, unusable samples
/// (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerHour = 3600;
inline constexpr Timestamp kSecondsPerDay = 24 * kSecondsPerHour;

/// Parses `MM/DD/YYYY HH:MM:SS` or ISO-8601 `YYYY-MM-DD[T ]HH:MM:SS[.fff][Z]`.
/// Fractional seconds are truncated. Throws DataError on malformed input.
Timestamp parse_timestamp(std::string_view text);

/// Formats as `MM/DD/YYYY HH:MM:SS`.
std::string format_timestamp(Timestamp t);

/// Formats as `YYYY-MM-DDTHH:MM:SS`.
std::string format_iso(Timestamp t);

enum class Label { Normal = 0, Abnormal = 1 };

std::string_view to_string(Label label);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense channels x rows x cols tensor, channel-major then row-major.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t rows, std::size_t cols, double fill = 0.0)
      : channels_(channels), rows_(rows), cols_(cols), data_(channels * rows * cols, fill) {}

  std::size_t channels() const { return channels_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return rows_ * cols_; }

  double& operator()(std::size_t c, std::size_t r, std::size_t k) {
    return data_[(c * rows_ + r) * cols_ + k];
  }
  double operator()(std::size_t c, std::size_t r, std::size_t k) const {
    return data_[(c * rows_ + r) * cols_ + k];
  }

  std::span<double> channel(std::size_t c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(std::size_t c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }
  std::span<double> row(std::size_t c, std::size_t r) {
    return {data_.data() + (c * rows_ + r) * cols_, cols_};
  }
  std::span<const double> row(std::size_t c, std::size_t r) const {
    return {data_.data() + (c * rows_ + r) * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// sign(x) * log(1 + |x|). Fixed compression applied to embeddings before
/// any learned head; modulated counts can reach ~1/epsilon.
inline double signed_log1p(double x) { return x < 0 ? -std::log1p(-x) : std::log1p(x); }

/// d/dx signed_log1p(x) = 1 / (1 + |x|).
inline double signed_log1p_derivative(double x) { return 1.0 / (1.0 + std::abs(x)); }

/// Throws ShapeError naming `what` unless the shapes agree.
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

}  // namespace mrad
