// Per-user behavior matrices: category x time-bin event counts over sliding
// windows, plus window labeling and debug dumps.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrad/common.hpp"
#include "mrad/events.hpp"

namespace mrad {

struct BehaviorMatrix {
  Matrix values;  // H x W
  Timestamp window_start = 0;
  int bin_hours = 1;
  std::string user;

  std::size_t categories() const { return values.rows(); }
  std::size_t bins() const { return values.cols(); }
  int window_hours() const { return static_cast<int>(values.cols()) * bin_hours; }

  friend bool operator==(const BehaviorMatrix&, const BehaviorMatrix&) = default;
};

struct LabeledWindow {
  BehaviorMatrix matrix;
  Label label = Label::Normal;
};

/// Counts events of category h in bin w = [start + w*bin, start + (w+1)*bin).
/// Events outside the window are ignored; events are not filtered by user.
/// Throws ConfigError unless bin_hours divides window_hours.
BehaviorMatrix build_matrix(std::span<const Event> events, Timestamp window_start, int window_hours,
                            int bin_hours, std::size_t categories);

/// Window starts t0, t0+step, ... with start + window <= t1. Empty when the
/// span is shorter than one window.
std::vector<Timestamp> slide_windows(int window_hours, int step_hours, Timestamp t0, Timestamp t1);

/// Abnormal iff some anomaly timestamp lies in [start, start + window).
Label label_window(Timestamp window_start, int window_hours, std::span<const Timestamp> anomalies);

/// Debug dump: `H,W,window_start` header line then H comma-separated rows.
void write_matrix_csv(std::ostream& out, const BehaviorMatrix& m);

/// Binary dump, little-endian: u32 H, u32 W, i64 window_start, H*W f64.
void write_matrix_binary(std::ostream& out, const BehaviorMatrix& m);
BehaviorMatrix read_matrix_binary(std::istream& in);

}  // namespace mrad
