#include "mrad/common.hpp"
#include "mrad/serialize_detail.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace mrad {

namespace {

bool read_int(std::string_view text, std::size_t& pos, std::size_t digits, int& out) {
  if (pos + digits > text.size()) return false;
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + digits, out);
  if (ec != std::errc{} || ptr != first + digits) return false;
  pos += digits;
  return true;
}

bool expect(std::string_view text, std::size_t& pos, char ch) {
  if (pos >= text.size() || text[pos] != ch) return false;
  ++pos;
  return true;
}

// Reads 1 or 2 digits (CERT writes zero-padded fields, hand-edited logs may not).
bool read_short_int(std::string_view text, std::size_t& pos, int& out) {
  std::size_t n = 0;
  while (pos + n < text.size() && n < 2 && text[pos + n] >= '0' && text[pos + n] <= '9') ++n;
  if (n == 0) return false;
  return read_int(text, pos, n, out);
}

Timestamp to_epoch(int year, int month, int day, int hour, int minute, int second,
                   std::string_view original) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 60) {
    throw DataError("invalid calendar time '" + std::string(original) + "'");
  }
  const sys_days days{ymd};
  return days.time_since_epoch().count() * kSecondsPerDay + hour * kSecondsPerHour + minute * 60 +
         second;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Timestamp parse_timestamp(std::string_view raw) {
  const std::string_view text = trim(raw);
  auto fail = [&]() -> Timestamp {
    throw DataError("malformed timestamp '" + std::string(raw) + "'");
  };
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  std::size_t pos = 0;
  const bool iso = text.size() >= 10 && text[4] == '-';
  if (iso) {
    if (!read_int(text, pos, 4, year) || !expect(text, pos, '-') || !read_int(text, pos, 2, month) ||
        !expect(text, pos, '-') || !read_int(text, pos, 2, day))
      return fail();
    if (pos == text.size()) return to_epoch(year, month, day, 0, 0, 0, raw);
    if (text[pos] != 'T' && text[pos] != ' ') return fail();
    ++pos;
  } else {
    if (!read_short_int(text, pos, month) || !expect(text, pos, '/') ||
        !read_short_int(text, pos, day) || !expect(text, pos, '/') || !read_int(text, pos, 4, year) ||
        !expect(text, pos, ' '))
      return fail();
  }
  if (!read_short_int(text, pos, hour) || !expect(text, pos, ':') || !read_int(text, pos, 2, minute) ||
      !expect(text, pos, ':') || !read_int(text, pos, 2, second))
    return fail();
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    const std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) return fail();
  }
  if (iso && pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) return fail();
  return to_epoch(year, month, day, hour, minute, second, raw);
}

namespace {

struct Civil {
  int year;
  unsigned month, day;
  int hour, minute, second;
};

Civil to_civil(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / kSecondsPerDay;
  Timestamp rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day()), static_cast<int>(rem / kSecondsPerHour),
          static_cast<int>(rem % kSecondsPerHour / 60), static_cast<int>(rem % 60)};
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const Civil c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02u/%02u/%04d %02d:%02d:%02d", c.month, c.day, c.year, c.hour,
                c.minute, c.second);
  return buf;
}

std::string format_iso(Timestamp t) {
  const Civil c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", c.year, c.month, c.day, c.hour,
                c.minute, c.second);
  return buf;
}

std::string_view to_string(Label label) {
  return label == Label::Abnormal ? "Abnormal" : "Normal";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

}  // namespace mrad

namespace mrad::detail {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace mrad::detail
