#include "mrad/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include "mrad/rng.hpp"

namespace mrad {

void UserProfile::validate(std::size_t categories) const {
  if (work_start < 0 || work_end > 24 || work_start >= work_end) {
    throw ConfigError("work hours must satisfy 0 <= start < end <= 24");
  }
  if (base_rates.size() != categories) {
    throw ConfigError("profile has " + std::to_string(base_rates.size()) + " base rates for " +
                      std::to_string(categories) + " categories");
  }
  for (double r : base_rates) {
    if (!(r >= 0.0)) throw ConfigError("base rates must be >= 0");
  }
  for (double m : weekly_pattern) {
    if (!(m >= 0.0)) throw ConfigError("weekly multipliers must be >= 0");
  }
}

int weekday(Timestamp t) {
  Timestamp days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --days;
  // 1970-01-01 was a Thursday (index 3).
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

namespace {

struct Emission {
  std::string source;
  std::string activity;
};

// First rule (in key order) that maps to each category; wildcard rules emit
// the category name as the activity.
std::vector<Emission> emissions(const Taxonomy& taxonomy) {
  std::vector<Emission> out(taxonomy.size());
  std::vector<bool> found(taxonomy.size(), false);
  for (const auto& [key, id] : taxonomy.rules()) {
    const auto idx = static_cast<std::size_t>(id);
    if (found[idx]) continue;
    const auto colon = key.find(':');
    out[idx].source = key.substr(0, colon);
    out[idx].activity = key.substr(colon + 1);
    if (out[idx].activity == "*") out[idx].activity = taxonomy.category(id).name;
    found[idx] = true;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!found[i]) {
      throw ConfigError("taxonomy has no rule producing category '" +
                        taxonomy.category(static_cast<int>(i)).name + "'");
    }
  }
  return out;
}

void sort_events(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
}

int hour_of_day(Timestamp t) {
  Timestamp rem = t % kSecondsPerDay;
  if (rem < 0) rem += kSecondsPerDay;
  return static_cast<int>(rem / kSecondsPerHour);
}

}  // namespace

std::vector<Event> generate_user_logs(const UserProfile& profile, Timestamp start, int span_days,
                                      const Taxonomy& taxonomy) {
  if (span_days < 1) throw ConfigError("span_days must be >= 1");
  profile.validate(taxonomy.size());
  const auto emit = emissions(taxonomy);
  Rng rng(derive_seed(profile.seed, "user-logs"));
  std::vector<Event> events;
  const Timestamp hours = static_cast<Timestamp>(span_days) * 24;
  for (Timestamp h = 0; h < hours; ++h) {
    const Timestamp hour_start = start + h * kSecondsPerHour;
    const int hod = hour_of_day(hour_start);
    if (hod < profile.work_start || hod >= profile.work_end) continue;
    const double multiplier = profile.weekly_pattern[static_cast<std::size_t>(weekday(hour_start))];
    for (std::size_t c = 0; c < profile.base_rates.size(); ++c) {
      const double rate = profile.base_rates[c] * multiplier;
      if (rate <= 0.0) continue;
      const auto n = rng.poisson(rate);
      for (std::uint64_t k = 0; k < n; ++k) {
        events.push_back({hour_start + static_cast<Timestamp>(rng.below(kSecondsPerHour)), profile.user,
                          static_cast<int>(c), emit[c].source, emit[c].activity});
      }
    }
  }
  sort_events(events);
  return events;
}

InjectionResult inject_scenario(std::span<const Event> events, const UserProfile& profile,
                                const ScenarioSpec& spec, Timestamp span_start, Timestamp span_end,
                                const Taxonomy& taxonomy) {
  if (spec.scenario < 1 || spec.scenario > 3) {
    throw ConfigError("unknown scenario " + std::to_string(spec.scenario));
  }
  if (!(spec.intensity > 1.0)) throw ConfigError("scenario intensity must be > 1");
  profile.validate(taxonomy.size());
  for (const auto& w : spec.windows) {
    if (w.duration_hours < 1 || w.start < span_start ||
        w.start + w.duration_hours * kSecondsPerHour > span_end) {
      throw ConfigError("anomaly window at " + format_iso(w.start) + " lies outside the generated span");
    }
  }
  auto need = [&](std::string_view name) {
    auto id = taxonomy.find(name);
    if (!id) throw ConfigError("scenario needs taxonomy category '" + std::string(name) + "'");
    return *id;
  };
  std::vector<int> cats;
  switch (spec.scenario) {
    case 1: cats = {need("logon"), need("device"), need("file")}; break;
    case 2: cats = {need("http"), need("file")}; break;
    default: cats = {need("email"), need("logon")}; break;
  }
  const auto emit = emissions(taxonomy);
  Rng rng(derive_seed(profile.seed, "inject", static_cast<std::uint64_t>(spec.scenario)));

  InjectionResult result;
  for (const auto& w : spec.windows) {
    std::vector<Timestamp> eligible;
    for (int k = 0; k < w.duration_hours; ++k) {
      const Timestamp hour_start = w.start + k * kSecondsPerHour;
      const int hod = hour_of_day(hour_start);
      const bool in_hours = hod >= profile.work_start && hod < profile.work_end;
      if (spec.scenario == 1 && in_hours) continue;
      if (spec.scenario == 2 && !in_hours) continue;
      eligible.push_back(hour_start);
    }
    const std::size_t before = result.injected.size();
    for (std::size_t k = 0; k < eligible.size(); ++k) {
      const double ramp = spec.scenario == 2 ? static_cast<double>(k + 1) / static_cast<double>(eligible.size())
                                             : 1.0;
      for (int c : cats) {
        // Categories the user never touches still get a unit rate to amplify.
        const double base = std::max(profile.base_rates[static_cast<std::size_t>(c)], 1.0);
        const auto n = rng.poisson(spec.intensity * base * ramp);
        for (std::uint64_t i = 0; i < n; ++i) {
          result.injected.push_back({eligible[k] + static_cast<Timestamp>(rng.below(kSecondsPerHour)),
                                     profile.user, c, emit[static_cast<std::size_t>(c)].source,
                                     emit[static_cast<std::size_t>(c)].activity});
        }
      }
    }
    if (result.injected.size() == before && !eligible.empty()) {
      const int c = cats.front();
      result.injected.push_back({eligible.back() + static_cast<Timestamp>(rng.below(kSecondsPerHour)),
                                 profile.user, c, emit[static_cast<std::size_t>(c)].source,
                                 emit[static_cast<std::size_t>(c)].activity});
    }
  }
  sort_events(result.injected);
  result.events.reserve(events.size() + result.injected.size());
  std::merge(events.begin(), events.end(), result.injected.begin(), result.injected.end(),
             std::back_inserter(result.events),
             [](const Event& a, const Event& b) { return a.time < b.time; });
  for (const auto& e : result.injected) result.ground_truth.push_back(e.time);
  return result;
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthRow> rows) {
  out << "timestamp,user,scenario\n";
  for (const auto& r : rows) {
    out << format_timestamp(r.time) << ',' << csv_escape(r.user) << ',' << r.scenario << '\n';
  }
}

std::vector<GroundTruthRow> read_ground_truth(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("ground-truth file is empty: missing header row");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "timestamp" || header[1] != "user" || header[2] != "scenario") {
    throw DataError("ground-truth header must be timestamp,user,scenario");
  }
  std::vector<GroundTruthRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() < 3) throw DataError("ground truth line " + std::to_string(line_no) + ": too few fields");
    try {
      rows.push_back({parse_timestamp(f[0]), f[1], std::stoi(f[2])});
    } catch (const std::logic_error&) {
      throw DataError("ground truth line " + std::to_string(line_no) + ": bad scenario '" + f[2] + "'");
    } catch (const DataError& e) {
      throw DataError("ground truth line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<GroundTruthRow> read_ground_truth_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground-truth file '" + path + "'");
  return read_ground_truth(in);
}

void GeneratorConfig::validate() const {
  if (users < 1) throw ConfigError("generator.users must be >= 1");
  if (span_days < 1) throw ConfigError("generator.span_days must be >= 1");
  if (!(anomaly_fraction >= 0.0 && anomaly_fraction <= 1.0)) {
    throw ConfigError("generator.anomaly_fraction must lie in [0, 1]");
  }
  if (anomaly_hours < 1 || anomaly_hours > 12) throw ConfigError("generator.anomaly_hours must lie in [1, 12]");
  if (hour_jitter < 0 || hour_jitter > 23) throw ConfigError("generator.hour_jitter must lie in [0, 23]");
  if (!(intensity > 1.0)) throw ConfigError("generator.intensity must be > 1");
  if (segments.empty()) throw ConfigError("generator.segments must be non-empty");
  for (double s : segments) {
    if (!(s > 0.0)) throw ConfigError("generator.segments entries must be > 0");
  }
  parse_timestamp(start);
}

namespace {

UserProfile random_profile(const std::string& user, std::size_t categories, Rng& rng, std::uint64_t seed) {
  // Default rates for logon, logoff, device, file, email, http; extra
  // categories of a custom taxonomy get 1 event/hour.
  static constexpr double kRates[] = {0.6, 0.6, 0.4, 2.0, 3.0, 6.0};
  UserProfile p;
  p.user = user;
  p.work_start = 7 + static_cast<int>(rng.below(3));
  p.work_end = p.work_start + 9;
  for (std::size_t d = 0; d < 5; ++d) p.weekly_pattern[d] = rng.uniform(0.9, 1.1);
  p.weekly_pattern[5] = rng.uniform(0.0, 0.1);
  p.weekly_pattern[6] = rng.uniform(0.0, 0.1);
  for (std::size_t c = 0; c < categories; ++c) {
    const double base = c < std::size(kRates) ? kRates[c] : 1.0;
    p.base_rates.push_back(base * rng.uniform(0.7, 1.3));
  }
  p.seed = seed;
  return p;
}

std::vector<int> start_hour_options(int scenario, const UserProfile& p, int duration) {
  std::vector<int> options;
  for (int h = 0; h + duration <= 24; ++h) {
    bool all_off = true, all_on = true;
    for (int k = h; k < h + duration; ++k) {
      const bool on = k >= p.work_start && k < p.work_end;
      all_off = all_off && !on;
      all_on = all_on && on;
    }
    if ((scenario == 1 && all_off) || (scenario == 2 && all_on) || scenario == 3) options.push_back(h);
  }
  if (options.empty()) throw ConfigError("no room for a scenario window inside one day");
  return options;
}

}  // namespace

SyntheticDataset generate_dataset(const GeneratorConfig& config, std::uint64_t seed,
                                  const Taxonomy& taxonomy) {
  config.validate();
  SyntheticDataset ds;
  ds.span_start = parse_timestamp(config.start);
  ds.span_end = ds.span_start + static_cast<Timestamp>(config.span_days) * kSecondsPerDay;

  const auto anomalous_days = static_cast<std::size_t>(
      config.anomaly_fraction > 0.0
          ? std::max(1.0, std::round(config.anomaly_fraction * config.span_days))
          : 0.0);
  const double segment_total = std::accumulate(config.segments.begin(), config.segments.end(), 0.0);

  for (int u = 0; u < config.users; ++u) {
    char name[16];
    std::snprintf(name, sizeof name, "U%03d", u + 1);
    Rng rng(derive_seed(seed, "generator", static_cast<std::uint64_t>(u)));
    UserProfile profile = random_profile(name, taxonomy.size(), rng, rng.next());

    ScenarioSpec spec;
    spec.scenario = u % 3 + 1;
    spec.intensity = config.intensity;
    std::set<int> days;
    for (std::size_t k = 0; k < anomalous_days; ++k) {
      const std::size_t seg = k % config.segments.size();
      double lo_frac = 0.0;
      for (std::size_t s = 0; s < seg; ++s) lo_frac += config.segments[s];
      const int lo = static_cast<int>(std::floor(lo_frac / segment_total * config.span_days));
      const int hi = std::max(lo + 1, static_cast<int>(std::floor((lo_frac + config.segments[seg]) /
                                                                  segment_total * config.span_days)));
      // Daytime exfiltration happens on days the user actually works.
      auto usable = [&](int d) {
        if (days.count(d)) return false;
        if (spec.scenario != 2) return true;
        return profile.weekly_pattern[weekday(ds.span_start + d * kSecondsPerDay)] >= 0.5;
      };
      int day = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo)));
      for (int tries = 0; !usable(day) && tries < hi - lo; ++tries) {
        day = lo + (day - lo + 1) % (hi - lo);
      }
      if (!usable(day)) continue;
      days.insert(day);
    }
    const auto options = start_hour_options(spec.scenario, profile, config.anomaly_hours);
    const int habit = options[rng.below(options.size())];
    std::vector<int> near;
    for (int h : options) {
      if (std::abs(h - habit) <= config.hour_jitter) near.push_back(h);
    }
    for (int day : days) {
      const int hour = near[rng.below(near.size())];
      spec.windows.push_back(
          {ds.span_start + day * kSecondsPerDay + hour * kSecondsPerHour, config.anomaly_hours});
    }

    const auto normal = generate_user_logs(profile, ds.span_start, config.span_days, taxonomy);
    auto injected = inject_scenario(normal, profile, spec, ds.span_start, ds.span_end, taxonomy);
    for (const auto& e : injected.injected) ds.ground_truth.push_back({e.time, profile.user, spec.scenario});
    ds.events.insert(ds.events.end(), injected.events.begin(), injected.events.end());
    ds.profiles.push_back(std::move(profile));
    ds.scenarios.push_back(std::move(spec));
  }
  sort_events(ds.events);
  std::stable_sort(ds.ground_truth.begin(), ds.ground_truth.end(),
                   [](const GroundTruthRow& a, const GroundTruthRow& b) { return a.time < b.time; });
  return ds;
}

}  // namespace mrad
