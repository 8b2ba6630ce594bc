// Event ingestion: CERT-style CSV activity logs -> normalized event stream.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrad/common.hpp"

namespace mrad {

struct BehaviorCategory {
  int id = 0;
  std::string name;

  friend bool operator==(const BehaviorCategory&, const BehaviorCategory&) = default;
};

/// Ordered behavior categories plus `source:activity` mapping rules.
///
/// A rule key is `"<source>:<activity>"`; `"<source>:*"` matches any
/// activity from that source. Exact keys win over wildcards. Matching is
/// case-sensitive.
class Taxonomy {
 public:
  Taxonomy() = default;
  /// Throws ConfigError on duplicate category names or rules that target an
  /// unknown category.
  Taxonomy(std::vector<std::string> category_names, std::map<std::string, std::string> rules);

  /// logon, logoff, device, file, email, http with rules for the CERT file
  /// names (logon.csv, device.csv, file.csv, email.csv, http.csv).
  static Taxonomy cert_default();

  /// `{"categories": [...], "rules": {"source:activity": "category"}}`
  static Taxonomy from_json(std::string_view text);
  static Taxonomy load(const std::string& path);
  std::string to_json() const;

  std::size_t size() const { return categories_.size(); }
  const std::vector<BehaviorCategory>& categories() const { return categories_; }
  const BehaviorCategory& category(int id) const { return categories_.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view name) const;
  const std::map<std::string, int>& rules() const { return rules_; }

 private:
  std::vector<BehaviorCategory> categories_;
  std::map<std::string, int> rules_;
};

struct Event {
  Timestamp time = 0;
  std::string user;
  int category = 0;
  std::string source;
  std::string activity;

  friend bool operator==(const Event&, const Event&) = default;
};

std::optional<BehaviorCategory> map_event_type(std::string_view source, std::string_view activity,
                                               const Taxonomy& taxonomy);

struct ParseResult {
  std::vector<Event> events;
  std::size_t data_rows = 0;
  std::size_t skipped = 0;
};

/// Parses an event CSV with a header row. Required columns: id, date, user,
/// activity. A non-empty `source` cell, when present, overrides `default_source`
/// per row. Rows with unmappable activities are counted in `skipped`.
/// Events come back stably sorted by time.
///
/// Throws DataError for a missing required column (fatal) or a malformed
/// timestamp (message carries the 1-based line number).
ParseResult parse_event_log(std::istream& in, const Taxonomy& taxonomy,
                            std::string_view default_source = "");

/// Reads `path`; the file's base name is the default source.
ParseResult parse_event_file(const std::string& path, const Taxonomy& taxonomy);

/// Writes `id,date,user,activity,source` rows that parse_event_log reads back
/// to an identical list.
void write_event_log(std::ostream& out, std::span<const Event> events);

/// Splits one CSV record honouring double-quote quoting ("" escapes a quote).
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace mrad
