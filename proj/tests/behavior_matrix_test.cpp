#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>
#include <sstream>

#include "mrad/behavior_matrix.hpp"

using namespace mrad;

namespace {

const Timestamp kT0 = parse_timestamp("2010-01-04T00:00:00");

Event at(Timestamp t, int category) { return {t, "U1", category, "src", "act"}; }

}  // namespace

TEST_CASE("no events give a zero matrix") {
  const auto m = build_matrix({}, kT0, 24, 1, 6);
  CHECK(m.values == Matrix(6, 24));
  CHECK(m.bins() == 24);
  CHECK(m.window_hours() == 24);
}

TEST_CASE("three-event fixture") {
  const std::vector<Event> ev{at(kT0, 0), at(kT0 + 3599, 0), at(kT0 + 5 * kSecondsPerHour + 10, 1)};
  const auto m = build_matrix(ev, kT0, 24, 1, 6);
  CHECK(m.values(0, 0) == 2);
  CHECK(m.values(1, 5) == 1);
  CHECK(std::accumulate(m.values.data().begin(), m.values.data().end(), 0.0) == 3);
}

TEST_CASE("bins are half-open") {
  const std::vector<Event> ev{at(kT0 + 24 * kSecondsPerHour, 0), at(kT0 - 1, 0), at(kT0 + kSecondsPerHour, 2)};
  const auto m = build_matrix(ev, kT0, 24, 1, 6);
  CHECK(m.values(2, 1) == 1);
  CHECK(std::accumulate(m.values.data().begin(), m.values.data().end(), 0.0) == 1);
}

TEST_CASE("bin width must divide the window; categories must be in range") {
  CHECK_THROWS_AS(build_matrix({}, kT0, 24, 5, 6), ConfigError);
  CHECK_THROWS_AS(build_matrix({}, kT0, 24, 0, 6), ConfigError);
  const auto m = build_matrix(std::vector<Event>{at(kT0 + 7 * kSecondsPerHour, 3)}, kT0, 24, 6, 6);
  CHECK(m.bins() == 4);
  CHECK(m.values(3, 1) == 1);
  CHECK_THROWS_AS(build_matrix(std::vector<Event>{at(kT0, 9)}, kT0, 24, 1, 6), DataError);
}

TEST_CASE("mass conservation and permutation invariance") {
  std::mt19937_64 gen(3);
  std::vector<Event> ev;
  std::size_t inside = 0;
  for (int i = 0; i < 500; ++i) {
    const Timestamp t = kT0 - 10 * kSecondsPerHour + static_cast<Timestamp>(gen() % (100 * kSecondsPerHour));
    if (t >= kT0 && t < kT0 + 72 * kSecondsPerHour) ++inside;
    ev.push_back(at(t, static_cast<int>(gen() % 6)));
  }
  const auto m = build_matrix(ev, kT0, 72, 1, 6);
  CHECK(std::accumulate(m.values.data().begin(), m.values.data().end(), 0.0) == static_cast<double>(inside));
  for (double v : m.values.data()) CHECK(v == std::floor(v));
  std::shuffle(ev.begin(), ev.end(), gen);
  CHECK(build_matrix(ev, kT0, 72, 1, 6) == m);
}

TEST_CASE("sliding windows") {
  const Timestamp h = kSecondsPerHour;
  CHECK(slide_windows(24, 24, kT0, kT0 + 72 * h).size() == 3);
  CHECK(slide_windows(24, 24, kT0, kT0 + 24 * h).size() == 1);
  CHECK(slide_windows(168, 24, kT0, kT0 + 168 * h).size() == 1);
  CHECK(slide_windows(72, 24, kT0, kT0 + 48 * h).empty());
  for (int span : {24, 100, 24 * 60}) {
    for (int w : {24, 72, 168}) {
      const auto starts = slide_windows(w, 24, kT0, kT0 + span * h);
      const std::size_t expected = span >= w ? static_cast<std::size_t>((span - w) / 24 + 1) : 0;
      CHECK(starts.size() == expected);
      for (std::size_t i = 0; i < starts.size(); ++i) CHECK(starts[i] == kT0 + static_cast<Timestamp>(i) * 24 * h);
    }
  }
}

TEST_CASE("window labels") {
  const Timestamp h = kSecondsPerHour;
  CHECK(label_window(kT0, 24, {}) == Label::Normal);
  const std::vector<Timestamp> mid{kT0 + 12 * h};
  CHECK(label_window(kT0, 24, mid) == Label::Abnormal);
  const std::vector<Timestamp> before{kT0 - 1};
  CHECK(label_window(kT0, 24, before) == Label::Normal);
  const std::vector<Timestamp> end{kT0 + 24 * h};
  CHECK(label_window(kT0, 24, end) == Label::Normal);
  const std::vector<Timestamp> start{kT0};
  CHECK(label_window(kT0, 24, start) == Label::Abnormal);
}

TEST_CASE("debug dumps") {
  auto m = build_matrix(std::vector<Event>{at(kT0, 0), at(kT0 + 2 * kSecondsPerHour, 5)}, kT0, 24, 1, 6);
  m.user = "U1";
  std::ostringstream csv;
  write_matrix_csv(csv, m);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("6,24,", 0) == 0);
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  CHECK(rows == 6);

  std::stringstream bin;
  write_matrix_binary(bin, m);
  const auto back = read_matrix_binary(bin);
  CHECK(back.values == m.values);
  CHECK(back.window_start == m.window_start);

  std::istringstream truncated(bin.str().substr(0, 10));
  CHECK_THROWS_AS(read_matrix_binary(truncated), DataError);
}
