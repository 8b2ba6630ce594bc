#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "mrad/events.hpp"

using namespace mrad;

namespace {

ParseResult parse(const std::string& text, std::string_view source = "") {
  std::istringstream in(text);
  return parse_event_log(in, Taxonomy::cert_default(), source);
}

}  // namespace

TEST_CASE("timestamps parse in CERT and ISO forms") {
  const Timestamp t = parse_timestamp("01/02/2010 07:08:09");
  CHECK(t == parse_timestamp("2010-01-02T07:08:09"));
  CHECK(t == parse_timestamp("2010-01-02 07:08:09"));
  CHECK(t == parse_timestamp("2010-01-02T07:08:09.750Z"));
  CHECK(t == parse_timestamp("1/2/2010 7:08:09"));
  CHECK(parse_timestamp("1970-01-01T00:00:00") == 0);
  CHECK(format_timestamp(t) == "01/02/2010 07:08:09");
  CHECK(format_iso(t) == "2010-01-02T07:08:09");

  for (const char* bad : {"", "2010-13-01T00:00:00", "02/30/2010 00:00:00", "yesterday",
                          "2010-01-02T25:00:00", "01/02/2010 07:08"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_timestamp(bad), DataError);
  }
}

TEST_CASE("default taxonomy maps CERT activities") {
  const Taxonomy tax = Taxonomy::cert_default();
  REQUIRE(tax.size() == 6);
  const std::vector<std::string> names{"logon", "logoff", "device", "file", "email", "http"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(tax.categories()[i].id == static_cast<int>(i));
    CHECK(tax.categories()[i].name == names[i]);
  }
  CHECK(map_event_type("logon.csv", "Logon", tax)->name == "logon");
  CHECK(map_event_type("device.csv", "Connect", tax)->name == "device");
  CHECK_FALSE(map_event_type("http.csv", "UnknownVerb", tax).has_value());
  CHECK(map_event_type("logon.csv", "Logon", tax) == map_event_type("logon.csv", "Logon", tax));
}

TEST_CASE("taxonomy rules: wildcard fallback, validation, json round trip") {
  const Taxonomy tax({"a", "b"}, {{"x:*", "a"}, {"x:special", "b"}});
  CHECK(map_event_type("x", "anything", tax)->name == "a");
  CHECK(map_event_type("x", "special", tax)->name == "b");
  CHECK_FALSE(map_event_type("y", "special", tax).has_value());

  CHECK_THROWS_AS(Taxonomy({"a", "a"}, {}), ConfigError);
  CHECK_THROWS_AS(Taxonomy({"a"}, {{"x:y", "missing"}}), ConfigError);

  const Taxonomy back = Taxonomy::from_json(tax.to_json());
  CHECK(back.categories() == tax.categories());
  CHECK(back.rules() == tax.rules());
  CHECK_THROWS_AS(Taxonomy::from_json(R"({"categories":["a"],"rules":{},"extra":1})"), ConfigError);
  CHECK_THROWS_AS(Taxonomy::from_json("not json"), ConfigError);
}

TEST_CASE("header-only file gives no events") {
  const auto r = parse("id,date,user,pc,activity\n", "logon.csv");
  CHECK(r.events.empty());
  CHECK(r.data_rows == 0);
  CHECK(r.skipped == 0);
}

TEST_CASE("unmappable rows are skipped and counted") {
  const auto r = parse(
      "id,date,user,pc,activity\n"
      "1,01/04/2010 08:00:00,U1,PC1,Logon\n"
      "2,01/04/2010 09:00:00,U1,PC1,Teleport\n"
      "3,01/04/2010 17:00:00,U1,PC1,Logoff\n"
      "4,01/04/2010 18:00:00,U2,PC2,Logon\n",
      "logon.csv");
  CHECK(r.events.size() == 3);
  CHECK(r.skipped == 1);
  CHECK(r.data_rows == 4);
  CHECK(r.events.size() + r.skipped == r.data_rows);
}

TEST_CASE("rows out of order come back sorted") {
  const auto r = parse(
      "id,date,user,activity\n"
      "1,01/04/2010 12:00:00,U1,Logon\n"
      "2,01/04/2010 08:00:00,U1,Logon\n"
      "3,01/04/2010 10:00:00,U1,Logoff\n",
      "logon.csv");
  REQUIRE(r.events.size() == 3);
  CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                       [](const Event& a, const Event& b) { return a.time < b.time; }));
  CHECK(r.events.front().time == parse_timestamp("01/04/2010 08:00:00"));
}

TEST_CASE("malformed timestamp reports its line number") {
  try {
    parse("id,date,user,activity\n1,01/04/2010 08:00:00,U1,Logon\n2,notadate,U1,Logon\n", "logon.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("missing required column is fatal") {
  CHECK_THROWS_AS(parse("id,date,activity\n1,01/04/2010 08:00:00,Logon\n", "logon.csv"), DataError);
  CHECK_THROWS_AS(parse("", "logon.csv"), DataError);
}

TEST_CASE("source column overrides the default source; quoted fields may span lines") {
  const auto r = parse(
      "id,date,user,activity,source,content\n"
      "1,01/04/2010 08:00:00,U1,Connect,device.csv,\"plain\"\n"
      "2,01/04/2010 09:00:00,U1,Send,email.csv,\"multi\nline, with \"\"quotes\"\"\"\n"
      "3,01/04/2010 10:00:00,U1,Logon,,x\n",
      "logon.csv");
  REQUIRE(r.events.size() == 3);
  CHECK(r.events[0].category == 2);
  CHECK(r.events[1].category == 4);
  CHECK(r.events[2].category == 0);
  CHECK(r.events[2].source == "logon.csv");
}

TEST_CASE("csv helpers") {
  CHECK(split_csv_line("a,\"b,c\",\"d\"\"e\",") == std::vector<std::string>{"a", "b,c", "d\"e", ""});
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"") == "\"q\"\"\"");
}

TEST_CASE("write then parse round-trips the event list") {
  const Taxonomy tax = Taxonomy::cert_default();
  std::mt19937_64 gen(7);
  const char* sources[] = {"logon.csv", "logon.csv", "device.csv", "file.csv", "email.csv", "http.csv"};
  const char* activities[] = {"Logon", "Logoff", "Connect", "File Open", "Send", "WWW Visit"};
  std::vector<Event> events;
  for (int i = 0; i < 200; ++i) {
    const int c = static_cast<int>(gen() % 6);
    events.push_back({parse_timestamp("2010-01-04T00:00:00") + static_cast<Timestamp>(gen() % 864000),
                      "U," + std::to_string(gen() % 3), c, sources[c], activities[c]});
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
  for (const auto& e : events) REQUIRE(map_event_type(e.source, e.activity, tax)->id == e.category);

  std::ostringstream out;
  write_event_log(out, events);
  std::istringstream in(out.str());
  const auto r = parse_event_log(in, tax);
  CHECK(r.skipped == 0);
  CHECK(r.events == events);

  std::ostringstream again;
  write_event_log(again, r.events);
  CHECK(again.str() == out.str());
}
