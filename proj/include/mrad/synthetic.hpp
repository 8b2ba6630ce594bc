// Deterministic CERT-like activity generator with injected insider-threat
// style scenarios. Scenario shapes are qualitative imitations only:
//   1  off-hours logon + removable device + file bursts
//   2  working-hours http + file exfiltration ramp
//   3  email + logon abuse bursts at any hour
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrad/common.hpp"
#include "mrad/events.hpp"

namespace mrad {

struct UserProfile {
  std::string user;
  int work_start = 8;  // active hours are [work_start, work_end)
  int work_end = 17;
  std::array<double, 7> weekly_pattern{1, 1, 1, 1, 1, 0.05, 0.05};  // Monday first
  std::vector<double> base_rates;  // mean events per active hour, per category
  std::uint64_t seed = 0;

  /// Throws ConfigError on negative rates or an invalid work interval.
  void validate(std::size_t categories) const;
};

struct AnomalyWindow {
  Timestamp start = 0;
  int duration_hours = 1;
};

struct ScenarioSpec {
  int scenario = 1;
  std::vector<AnomalyWindow> windows;
  double intensity = 10.0;
};

/// Monday = 0.
int weekday(Timestamp t);

/// Hourly Poisson counts with mean base_rate * weekday multiplier inside
/// work hours (zero outside), timestamps uniform within the hour.
std::vector<Event> generate_user_logs(const UserProfile& profile, Timestamp start, int span_days,
                                      const Taxonomy& taxonomy);

struct InjectionResult {
  std::vector<Event> events;          // original + injected, sorted by time
  std::vector<Event> injected;        // injected only, sorted by time
  std::vector<Timestamp> ground_truth;  // one timestamp per injected event
};

/// Adds scenario events inside each anomaly window. Scenario 1 only uses
/// hours outside work hours, scenario 2 only hours inside them, scenario 3
/// every hour. Each window receives at least one event. Throws ConfigError
/// when a window leaves [span_start, span_end), the scenario is unknown,
/// intensity <= 1, or the taxonomy lacks a needed category.
InjectionResult inject_scenario(std::span<const Event> events, const UserProfile& profile,
                                const ScenarioSpec& spec, Timestamp span_start, Timestamp span_end,
                                const Taxonomy& taxonomy);

struct GroundTruthRow {
  Timestamp time = 0;
  std::string user;
  int scenario = 0;

  friend bool operator==(const GroundTruthRow&, const GroundTruthRow&) = default;
};

/// `timestamp,user,scenario` with timestamps in the event-log date format.
void write_ground_truth(std::ostream& out, std::span<const GroundTruthRow> rows);
std::vector<GroundTruthRow> read_ground_truth(std::istream& in);
std::vector<GroundTruthRow> read_ground_truth_file(const std::string& path);

struct GeneratorConfig {
  int users = 3;
  int span_days = 60;
  std::string start = "2010-01-04T00:00:00";  // a Monday
  double anomaly_fraction = 0.05;  // fraction of days carrying an anomaly
  int anomaly_hours = 8;
  // Each insider acts near one habitual start hour, drifting by at most this
  // many hours from day to day.
  int hour_jitter = 5;
  double intensity = 3.0;
  // Anomalous days are spread over chronological segments of these relative
  // sizes (round-robin), so every evaluation split sees anomalies.
  std::vector<double> segments{0.6, 0.2, 0.2};

  void validate() const;

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

struct SyntheticDataset {
  std::vector<Event> events;  // all users, sorted by time
  std::vector<GroundTruthRow> ground_truth;
  std::vector<UserProfile> profiles;
  std::vector<ScenarioSpec> scenarios;  // one per profile
  Timestamp span_start = 0;
  Timestamp span_end = 0;
};

/// User i ("U00i") runs scenario (i mod 3) + 1. Profiles and anomaly
/// placement derive from derive_seed(seed, "generator", i).
SyntheticDataset generate_dataset(const GeneratorConfig& config, std::uint64_t seed,
                                  const Taxonomy& taxonomy);

}  // namespace mrad
