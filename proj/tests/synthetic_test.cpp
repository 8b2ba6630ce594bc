#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "mrad/synthetic.hpp"

using namespace mrad;

namespace {

const Timestamp kMonday = parse_timestamp("2010-01-04T00:00:00");

UserProfile profile(std::vector<double> rates, std::uint64_t seed = 1) {
  UserProfile p;
  p.user = "U1";
  p.base_rates = std::move(rates);
  p.seed = seed;
  return p;
}

int hour_of(Timestamp t) { return static_cast<int>((t % kSecondsPerDay) / kSecondsPerHour); }

}  // namespace

TEST_CASE("weekday") {
  CHECK(weekday(kMonday) == 0);
  CHECK(weekday(kMonday + 5 * kSecondsPerDay + 3) == 5);
  CHECK(weekday(parse_timestamp("1970-01-01T00:00:00")) == 3);
}

TEST_CASE("zero rates produce no events") {
  const auto tax = Taxonomy::cert_default();
  CHECK(generate_user_logs(profile(std::vector<double>(6, 0.0)), kMonday, 30, tax).empty());
}

TEST_CASE("profile validation") {
  const auto tax = Taxonomy::cert_default();
  CHECK_THROWS_AS(generate_user_logs(profile({1, 1, 1, 1, 1, -1}), kMonday, 3, tax), ConfigError);
  CHECK_THROWS_AS(generate_user_logs(profile({1, 1}), kMonday, 3, tax), ConfigError);
  auto p = profile(std::vector<double>(6, 1.0));
  p.work_start = 18;
  p.work_end = 9;
  CHECK_THROWS_AS(generate_user_logs(p, kMonday, 3, tax), ConfigError);
}

TEST_CASE("generation is deterministic per seed") {
  const auto tax = Taxonomy::cert_default();
  const auto a = generate_user_logs(profile({2, 1, 0.5, 3, 1, 4}, 5), kMonday, 14, tax);
  CHECK(a == generate_user_logs(profile({2, 1, 0.5, 3, 1, 4}, 5), kMonday, 14, tax));
  CHECK_FALSE(a == generate_user_logs(profile({2, 1, 0.5, 3, 1, 4}, 6), kMonday, 14, tax));
  CHECK(std::is_sorted(a.begin(), a.end(), [](const Event& x, const Event& y) { return x.time < y.time; }));
  for (const auto& e : a) {
    CHECK(e.time >= kMonday);
    CHECK(e.time < kMonday + 14 * kSecondsPerDay);
    CHECK(hour_of(e.time) >= 8);
    CHECK(hour_of(e.time) < 17);
    CHECK(map_event_type(e.source, e.activity, tax)->id == e.category);
  }
}

TEST_CASE("hourly counts follow the base rate") {
  const auto tax = Taxonomy::cert_default();
  auto p = profile({5, 0, 0, 0, 0, 0}, 9);
  p.weekly_pattern = {1, 1, 1, 1, 1, 1, 1};
  const int days = 200;
  const auto ev = generate_user_logs(p, kMonday, days, tax);
  const double hours = days * 9.0;
  const double mean = static_cast<double>(ev.size()) / hours;
  // Poisson(5) over 1800 hours: std error of the mean is ~0.053
  CHECK(std::abs(mean - 5.0) < 0.25);
}

TEST_CASE("weekend multiplier thins activity") {
  const auto tax = Taxonomy::cert_default();
  const auto ev = generate_user_logs(profile({10, 0, 0, 0, 0, 0}, 2), kMonday, 70, tax);
  std::size_t weekend = 0;
  for (const auto& e : ev) weekend += weekday(e.time) >= 5;
  const double weekday_share = 1.0 - static_cast<double>(weekend) / static_cast<double>(ev.size());
  CHECK(weekday_share > 0.97);
}

TEST_CASE("scenario 1 stays inside the window and outside work hours") {
  const auto tax = Taxonomy::cert_default();
  const auto p = profile({1, 1, 1, 1, 1, 1}, 3);
  const auto base = generate_user_logs(p, kMonday, 7, tax);
  const Timestamp start = kMonday + 2 * kSecondsPerDay + 20 * kSecondsPerHour;
  ScenarioSpec spec{1, {{start, 2}}, 10.0};
  const auto r = inject_scenario(base, p, spec, kMonday, kMonday + 7 * kSecondsPerDay, tax);
  REQUIRE_FALSE(r.injected.empty());
  const std::set<int> allowed{*tax.find("logon"), *tax.find("device"), *tax.find("file")};
  for (const auto& e : r.injected) {
    CHECK(e.time >= start);
    CHECK(e.time < start + 2 * kSecondsPerHour);
    CHECK((hour_of(e.time) < p.work_start || hour_of(e.time) >= p.work_end));
    CHECK(allowed.count(e.category) == 1);
  }
  // intensity 10 on unit rates, three categories, two hours
  CHECK(r.injected.size() > 20);
  CHECK(r.ground_truth.size() == r.injected.size());
}

TEST_CASE("injection is additive") {
  const auto tax = Taxonomy::cert_default();
  const auto p = profile({2, 1, 1, 2, 3, 4}, 4);
  const auto base = generate_user_logs(p, kMonday, 7, tax);
  for (int scenario : {1, 2, 3}) {
    CAPTURE(scenario);
    ScenarioSpec spec{scenario, {{kMonday + kSecondsPerDay, 24}, {kMonday + 4 * kSecondsPerDay + 6 * kSecondsPerHour, 8}}, 3.0};
    const auto r = inject_scenario(base, p, spec, kMonday, kMonday + 7 * kSecondsPerDay, tax);
    CHECK(r.events.size() == base.size() + r.injected.size());
    std::vector<Event> rest;
    std::vector<Event> sorted_all = r.events;
    std::vector<Event> sorted_inj = r.injected;
    auto key = [](const Event& a, const Event& b) {
      return std::tie(a.time, a.category, a.activity) < std::tie(b.time, b.category, b.activity);
    };
    std::sort(sorted_all.begin(), sorted_all.end(), key);
    std::sort(sorted_inj.begin(), sorted_inj.end(), key);
    std::set_difference(sorted_all.begin(), sorted_all.end(), sorted_inj.begin(), sorted_inj.end(),
                        std::back_inserter(rest), key);
    std::vector<Event> sorted_base = base;
    std::sort(sorted_base.begin(), sorted_base.end(), key);
    CHECK(rest == sorted_base);
    CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                         [](const Event& a, const Event& b) { return a.time < b.time; }));
  }
}

TEST_CASE("injection validation") {
  const auto tax = Taxonomy::cert_default();
  const auto p = profile(std::vector<double>(6, 1.0));
  const Timestamp end = kMonday + 2 * kSecondsPerDay;
  CHECK_THROWS_AS(inject_scenario({}, p, {4, {{kMonday, 2}}, 3.0}, kMonday, end, tax), ConfigError);
  CHECK_THROWS_AS(inject_scenario({}, p, {1, {{kMonday, 2}}, 1.0}, kMonday, end, tax), ConfigError);
  CHECK_THROWS_AS(inject_scenario({}, p, {1, {{end - kSecondsPerHour, 2}}, 3.0}, kMonday, end, tax), ConfigError);
  const Taxonomy small({"logon", "http"}, {});
  CHECK_THROWS_AS(inject_scenario({}, profile({1, 1}), {1, {{kMonday, 2}}, 3.0}, kMonday, end, small), ConfigError);
}

TEST_CASE("dataset generation") {
  const auto tax = Taxonomy::cert_default();
  GeneratorConfig cfg;
  const auto a = generate_dataset(cfg, 7, tax);
  CHECK(a.profiles.size() == 3);
  CHECK(a.span_end - a.span_start == 60 * kSecondsPerDay);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.profiles[i].user == "U00" + std::to_string(i + 1));
    CHECK(a.scenarios[i].scenario == static_cast<int>(i % 3) + 1);
    CHECK(a.scenarios[i].windows.size() == 3);  // ceil(0.05 * 60)
  }
  CHECK_FALSE(a.ground_truth.empty());
  const auto b = generate_dataset(cfg, 7, tax);
  CHECK(a.events == b.events);
  CHECK(a.ground_truth == b.ground_truth);
  CHECK_FALSE(generate_dataset(cfg, 8, tax).events == a.events);

  // scenario 2 anomalies land on workdays
  for (const auto& w : a.scenarios[1].windows) CHECK(weekday(w.start) < 5);

  GeneratorConfig bad = cfg;
  bad.anomaly_fraction = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.anomaly_hours = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.hour_jitter = 24;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ground truth csv round trip") {
  const std::vector<GroundTruthRow> rows{{kMonday + 5, "U1", 1}, {kMonday + 99, "U,2", 3}};
  std::stringstream s;
  write_ground_truth(s, rows);
  CHECK(read_ground_truth(s) == rows);
  std::istringstream bad("timestamp,user,scenario\nnot-a-time,U1,1\n");
  CHECK_THROWS_AS(read_ground_truth(bad), DataError);
}
