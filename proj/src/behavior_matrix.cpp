#include "mrad/behavior_matrix.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "mrad/serialize_detail.hpp"

namespace mrad {

BehaviorMatrix build_matrix(std::span<const Event> events, Timestamp window_start, int window_hours,
                            int bin_hours, std::size_t categories) {
  if (window_hours <= 0 || bin_hours <= 0) {
    throw ConfigError("window and bin lengths must be positive");
  }
  if (window_hours % bin_hours != 0) {
    throw ConfigError("bin width " + std::to_string(bin_hours) + "h does not divide window " +
                      std::to_string(window_hours) + "h");
  }
  const auto bins = static_cast<std::size_t>(window_hours / bin_hours);
  const Timestamp bin_seconds = bin_hours * kSecondsPerHour;
  const Timestamp window_end = window_start + window_hours * kSecondsPerHour;

  BehaviorMatrix m{Matrix(categories, bins), window_start, bin_hours, {}};
  for (const Event& e : events) {
    if (e.time < window_start || e.time >= window_end) continue;
    if (e.category < 0 || static_cast<std::size_t>(e.category) >= categories) {
      throw DataError("event category " + std::to_string(e.category) + " outside taxonomy of size " +
                      std::to_string(categories));
    }
    const auto bin = static_cast<std::size_t>((e.time - window_start) / bin_seconds);
    m.values(static_cast<std::size_t>(e.category), bin) += 1.0;
  }
  return m;
}

std::vector<Timestamp> slide_windows(int window_hours, int step_hours, Timestamp t0, Timestamp t1) {
  if (window_hours <= 0 || step_hours <= 0) throw ConfigError("window and step must be positive");
  std::vector<Timestamp> starts;
  const Timestamp window = window_hours * kSecondsPerHour;
  const Timestamp step = step_hours * kSecondsPerHour;
  for (Timestamp s = t0; s + window <= t1; s += step) starts.push_back(s);
  return starts;
}

Label label_window(Timestamp window_start, int window_hours, std::span<const Timestamp> anomalies) {
  const Timestamp end = window_start + window_hours * kSecondsPerHour;
  for (Timestamp t : anomalies) {
    if (t >= window_start && t < end) return Label::Abnormal;
  }
  return Label::Normal;
}

void write_matrix_csv(std::ostream& out, const BehaviorMatrix& m) {
  out << m.values.rows() << ',' << m.values.cols() << ',' << m.window_start << '\n';
  for (std::size_t h = 0; h < m.values.rows(); ++h) {
    for (std::size_t w = 0; w < m.values.cols(); ++w) {
      if (w) out << ',';
      out << detail::format_double(m.values(h, w));
    }
    out << '\n';
  }
}

void write_matrix_binary(std::ostream& out, const BehaviorMatrix& m) {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.values.rows()));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.values.cols()));
  detail::write_le<std::int64_t>(out, m.window_start);
  for (double v : m.values.data()) detail::write_le<double>(out, v);
}

BehaviorMatrix read_matrix_binary(std::istream& in) {
  const auto rows = detail::read_le<std::uint32_t>(in);
  const auto cols = detail::read_le<std::uint32_t>(in);
  BehaviorMatrix m;
  m.window_start = detail::read_le<std::int64_t>(in);
  m.values = Matrix(rows, cols);
  for (double& v : m.values.data()) v = detail::read_le<double>(in);
  return m;
}

}  // namespace mrad
