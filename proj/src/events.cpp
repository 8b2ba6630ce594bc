#include "mrad/events.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace mrad {

Taxonomy::Taxonomy(std::vector<std::string> category_names,
                   std::map<std::string, std::string> rules) {
  if (category_names.empty()) throw ConfigError("taxonomy has no categories");
  for (std::size_t i = 0; i < category_names.size(); ++i) {
    if (find(category_names[i])) {
      throw ConfigError("duplicate taxonomy category '" + category_names[i] + "'");
    }
    categories_.push_back({static_cast<int>(i), std::move(category_names[i])});
  }
  for (auto& [key, target] : rules) {
    if (key.find(':') == std::string::npos) {
      throw ConfigError("taxonomy rule '" + key + "' is not of the form source:activity");
    }
    auto id = find(target);
    if (!id) throw ConfigError("taxonomy rule '" + key + "' targets unknown category '" + target + "'");
    rules_.emplace(key, *id);
  }
}

Taxonomy Taxonomy::cert_default() {
  return Taxonomy({"logon", "logoff", "device", "file", "email", "http"},
                  {
                      {"logon.csv:Logon", "logon"},
                      {"logon.csv:Logoff", "logoff"},
                      {"device.csv:Connect", "device"},
                      {"device.csv:Disconnect", "device"},
                      {"file.csv:File Open", "file"},
                      {"file.csv:File Write", "file"},
                      {"file.csv:File Copy", "file"},
                      {"file.csv:File Delete", "file"},
                      {"email.csv:Send", "email"},
                      {"email.csv:View", "email"},
                      {"http.csv:WWW Visit", "http"},
                      {"http.csv:WWW Download", "http"},
                      {"http.csv:WWW Upload", "http"},
                  });
}

Taxonomy Taxonomy::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    std::vector<std::string> names = j.at("categories").get<std::vector<std::string>>();
    std::map<std::string, std::string> rules = j.at("rules").get<std::map<std::string, std::string>>();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "categories" && it.key() != "rules") {
        throw ConfigError("unknown taxonomy key '" + it.key() + "'");
      }
    }
    return Taxonomy(std::move(names), std::move(rules));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid taxonomy JSON: ") + e.what());
  }
}

Taxonomy Taxonomy::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open taxonomy file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string Taxonomy::to_json() const {
  nlohmann::json j;
  j["categories"] = nlohmann::json::array();
  for (const auto& c : categories_) j["categories"].push_back(c.name);
  j["rules"] = nlohmann::json::object();
  for (const auto& [key, id] : rules_) j["rules"][key] = categories_[static_cast<std::size_t>(id)].name;
  return j.dump(2);
}

std::optional<int> Taxonomy::find(std::string_view name) const {
  for (const auto& c : categories_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

std::optional<BehaviorCategory> map_event_type(std::string_view source, std::string_view activity,
                                               const Taxonomy& taxonomy) {
  std::string key;
  key.reserve(source.size() + activity.size() + 1);
  key.append(source).append(":").append(activity);
  const auto& rules = taxonomy.rules();
  auto it = rules.find(key);
  if (it == rules.end()) {
    key.resize(source.size() + 1);
    key.append("*");
    it = rules.find(key);
  }
  if (it == rules.end()) return std::nullopt;
  return taxonomy.category(it->second);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (ch != '\r') {
      current.push_back(ch);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

namespace {

// Joins physical lines until the quote count balances, so quoted fields may
// span lines (CERT email content does).
bool read_record(std::istream& in, std::string& record, std::size_t& line_no) {
  record.clear();
  std::string line;
  bool open = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!record.empty() || open) record.push_back('\n');
    record += line;
    for (char ch : line) {
      if (ch == '"') open = !open;
    }
    if (!open) return true;
  }
  return !record.empty();
}

}  // namespace

ParseResult parse_event_log(std::istream& in, const Taxonomy& taxonomy,
                            std::string_view default_source) {
  if (taxonomy.size() == 0) throw ConfigError("empty taxonomy");
  ParseResult result;
  std::string record;
  std::size_t line_no = 0;
  if (!read_record(in, record, line_no)) throw DataError("event log is empty: missing header row");

  std::vector<std::string> header = split_csv_line(record);
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  std::size_t required[4];
  const char* names[4] = {"id", "date", "user", "activity"};
  for (int i = 0; i < 4; ++i) {
    auto c = column(names[i]);
    if (!c) throw DataError(std::string("event log is missing required column '") + names[i] + "'");
    required[i] = *c;
  }
  const std::size_t date_col = required[1], user_col = required[2], activity_col = required[3];
  const auto source_col = column("source");
  const std::size_t min_fields =
      std::max({required[0], date_col, user_col, activity_col, source_col.value_or(0)}) + 1;

  while (true) {
    const std::size_t first_line = line_no + 1;
    if (!read_record(in, record, line_no)) break;
    if (record.empty()) continue;
    ++result.data_rows;
    std::vector<std::string> fields = split_csv_line(record);
    if (fields.size() < min_fields) {
      throw DataError("line " + std::to_string(first_line) + ": expected at least " +
                      std::to_string(min_fields) + " fields, got " + std::to_string(fields.size()));
    }
    std::string source = source_col && !fields[*source_col].empty() ? fields[*source_col] : std::string(default_source);
    auto category = map_event_type(source, fields[activity_col], taxonomy);
    if (!category) {
      ++result.skipped;
      continue;
    }
    Event e;
    try {
      e.time = parse_timestamp(fields[date_col]);
    } catch (const DataError& err) {
      throw DataError("line " + std::to_string(first_line) + ": " + err.what());
    }
    e.user = std::move(fields[user_col]);
    e.category = category->id;
    e.source = std::move(source);
    e.activity = std::move(fields[activity_col]);
    result.events.push_back(std::move(e));
  }
  std::stable_sort(result.events.begin(), result.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  return result;
}

ParseResult parse_event_file(const std::string& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open event log '" + path + "'");
  try {
    return parse_event_log(in, taxonomy, std::filesystem::path(path).filename().string());
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_event_log(std::ostream& out, std::span<const Event> events) {
  out << "id,date,user,activity,source\n";
  std::size_t id = 0;
  for (const Event& e : events) {
    out << "E" << id++ << ',' << format_timestamp(e.time) << ',' << csv_escape(e.user) << ','
        << csv_escape(e.activity) << ',' << csv_escape(e.source) << '\n';
  }
}

}  // namespace mrad
