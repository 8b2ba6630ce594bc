#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("mrad_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

RunResult run(const std::string& args) {
  const fs::path o = scratch() / "stdout.txt", e = scratch() / "stderr.txt";
  const std::string cmd = std::string(MRAD_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(o);
  r.err = slurp(e);
  return r;
}

// Small but complete profile: defaults for data, fewer training epochs.
fs::path quick_config() {
  const fs::path p = scratch() / "quick.json";
  if (!fs::exists(p)) {
    spit(p, R"({"seed":3,"attention":{"epochs":30},)"
            R"("detector":{"epochs":80,"hidden":4,"class_weight":"balanced"}})");
  }
  return p;
}

bool no_temp_files(const fs::path& dir) {
  if (!fs::exists(dir)) return true;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".tmp") return false;
  }
  return true;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("generate --granularity 25").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("config errors exit 1") {
  const auto missing = run("generate --config " + (scratch() / "nope.json").string());
  CHECK(missing.code == 1);
  CHECK(missing.err.find("config error") != std::string::npos);

  const fs::path bad = scratch() / "bad.json";
  spit(bad, R"({"modulation":{"beta":2}})");
  CHECK(run("generate --config " + bad.string() + " --out " + (scratch() / "x").string()).code == 1);

  spit(bad, R"({"detectr":{}})");
  const auto unknown = run("generate --config " + bad.string());
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("detectr") != std::string::npos);

  const fs::path ingest_out = scratch() / "ingest_noinput";
  CHECK(run("ingest --out " + ingest_out.string()).code == 1);
  CHECK_FALSE(fs::exists(ingest_out / "events.csv"));
}

TEST_CASE("data errors exit 2 and leave no partial output") {
  const fs::path cfg = scratch() / "missing_events.json";
  const fs::path missing = scratch() / "absent.csv";
  spit(cfg, json{{"input", {{"events", {missing.string()}}, {"ground_truth", missing.string()}}}}.dump());
  const fs::path out = scratch() / "failed_train";
  const auto r = run("train --config " + cfg.string() + " --out " + out.string());
  CHECK(r.code == 2);
  CHECK(r.err.find(missing.string()) != std::string::npos);
  CHECK((!fs::exists(out) || fs::is_empty(out)));
}

TEST_CASE("generate, ingest, train, detect") {
  const std::string cfg = quick_config().string();
  const fs::path gen = scratch() / "gen";
  REQUIRE(run("generate --config " + cfg + " --out " + gen.string()).code == 0);
  CHECK(fs::exists(gen / "events.csv"));
  CHECK(fs::exists(gen / "ground_truth.csv"));
  CHECK(no_temp_files(gen));

  const fs::path gen2 = scratch() / "gen2";
  REQUIRE(run("generate --config " + cfg + " --out " + gen2.string()).code == 0);
  CHECK(slurp(gen / "events.csv") == slurp(gen2 / "events.csv"));
  CHECK(slurp(gen / "ground_truth.csv") == slurp(gen2 / "ground_truth.csv"));
  const fs::path gen3 = scratch() / "gen3";
  REQUIRE(run("generate --config " + cfg + " --seed 4 --out " + gen3.string()).code == 0);
  CHECK(slurp(gen / "events.csv") != slurp(gen3 / "events.csv"));

  const fs::path file_cfg = scratch() / "from_files.json";
  json j = json::parse(slurp(quick_config()));
  j["input"] = {{"events", {(gen / "events.csv").string()}}, {"ground_truth", (gen / "ground_truth.csv").string()}};
  spit(file_cfg, j.dump());

  const fs::path ing = scratch() / "ingest";
  REQUIRE(run("ingest --config " + file_cfg.string() + " --out " + ing.string()).code == 0);
  CHECK(slurp(ing / "events.csv") == slurp(gen / "events.csv"));
  CHECK(slurp(ing / "matrices.csv").find("# user=U001") != std::string::npos);

  const fs::path art = scratch() / "artifacts";
  const auto tr = run("train --config " + file_cfg.string() + " --out " + art.string());
  REQUIRE(tr.code == 0);
  for (const char* f : {"baseline.json", "attention.json", "detector.json"}) CHECK(fs::exists(art / f));
  const auto det = json::parse(slurp(art / "detector.json"));
  CHECK(det.at("models").size() == 3);

  const fs::path pred = scratch() / "detect";
  const auto dr = run("detect --config " + file_cfg.string() + " --artifacts " + art.string() + " --out " + pred.string());
  REQUIRE(dr.code == 0);
  const std::string csv = slurp(pred / "predictions.csv");
  CHECK(csv.rfind("window_start,user,score,label\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') > 10);

  SUBCASE("tampered artifact dimension is a data error") {
    const fs::path bad = scratch() / "tampered";
    fs::create_directories(bad);
    for (const char* f : {"baseline.json", "attention.json", "detector.json"}) {
      json a = json::parse(slurp(art / f));
      a["models"][0]["granularity"] = 48;
      spit(bad / f, a.dump());
    }
    const fs::path out = scratch() / "tampered_out";
    const auto r = run("detect --config " + file_cfg.string() + " --artifacts " + bad.string() + " --out " + out.string());
    CHECK(r.code == 2);
    CHECK(r.err.find("dimension mismatch") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "predictions.csv"));
  }

  SUBCASE("a detector trained at one depth is rejected at another") {
    json k = j;
    k["wavelet"] = {{"levels", 1}};
    const fs::path other = scratch() / "levels1.json";
    spit(other, k.dump());
    const auto r = run("detect --config " + other.string() + " --artifacts " + art.string() + " --out " +
                       (scratch() / "levels1_out").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("mismatch") != std::string::npos);
  }
}

TEST_CASE("eval and ablate outputs") {
  const std::string cfg = quick_config().string();
  const fs::path ev = scratch() / "eval";
  const auto r = run("eval --config " + cfg + " --out " + ev.string());
  REQUIRE(r.code == 0);
  const std::string csv = slurp(ev / "report.csv");
  CHECK(csv.rfind("scenario,granularity,precision,recall,f1\n", 0) == 0);
  CHECK(csv.find("average,24,") != std::string::npos);
  CHECK(r.out == csv);
  const auto rep = json::parse(slurp(ev / "report.json"));
  CHECK(rep.at("runs").size() == 1);

  const fs::path ab = scratch() / "ablate";
  const auto a = run("ablate --config " + cfg + " --out " + ab.string());
  REQUIRE(a.code == 0);
  std::istringstream lines(slurp(ab / "ablation.csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "variant,precision,recall,f1,pooled_precision,pooled_recall,pooled_f1");
  CHECK(rows[1].rfind("full,", 0) == 0);
  CHECK(rows[2].rfind("w/o modulation,", 0) == 0);
  CHECK(rows[3].rfind("w/o DWT,", 0) == 0);
  CHECK(rows[4].rfind("w/o attention,", 0) == 0);

  const std::string first = slurp(ab / "ablation.json");
  REQUIRE(run("ablate --config " + cfg + " --out " + ab.string()).code == 0);
  CHECK(slurp(ab / "ablation.json") == first);
  CHECK(no_temp_files(ab));
}

TEST_CASE("cleanup") { fs::remove_all(scratch()); }
