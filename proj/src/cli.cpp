#include "mrad/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrad/pipeline.hpp"
#include "mrad/serialize_detail.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mrad {

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string artifacts_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> granularity;
  bool pool_users = false;
  bool no_bias = false;
};

PipelineConfig resolve_config(const Options& opt) {
  PipelineConfig c = opt.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(opt.config_path);
  if (!opt.out_dir.empty()) c.output_dir = opt.out_dir;
  if (opt.seed) c.seed = *opt.seed;
  if (opt.granularity) c.windows.granularities = {*opt.granularity};
  if (opt.pool_users) c.modulation.pool_users = true;
  if (opt.no_bias) c.attention.use_bias = false;
  c.validate();
  return c;
}

// Writes every file to a temporary sibling first and renames only after all
// writes succeeded, so a failure leaves no partial outputs behind.
void write_files_atomically(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& [name, content] : files) {
    const fs::path tmp = dir / ("." + name + ".tmp");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    out.close();
    if (!out) {
      cleanup();
      throw DataError("cannot write '" + (dir / name).string() + "'");
    }
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::rename(temps[i], dir / files[i].first, ec);
    if (ec) {
      cleanup();
      throw DataError("cannot move output into '" + (dir / files[i].first).string() + "'");
    }
  }
}

json metrics_json(const Metrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
          {"tp", m.tp},               {"fp", m.fp},         {"fn", m.fn},
          {"tn", m.tn}};
}

json config_json(const PipelineConfig& c) { return json::parse(c.to_json()); }

std::string predictions_csv(std::span<const WindowPrediction> preds) {
  std::ostringstream out;
  out << "window_start,user,score,label\n";
  for (const auto& p : preds) {
    out << format_iso(p.window_start) << ',' << csv_escape(p.user) << ','
        << detail::format_double(p.prediction.score) << ',' << to_string(p.prediction.label) << '\n';
  }
  return out.str();
}

int cmd_generate(const Options& opt, std::ostream& out) {
  const PipelineConfig c = resolve_config(opt);
  const Taxonomy taxonomy = load_taxonomy(c.input);
  const SyntheticDataset ds = generate_dataset(c.generator, c.seed, taxonomy);
  std::ostringstream events, truth;
  write_event_log(events, ds.events);
  write_ground_truth(truth, ds.ground_truth);
  write_files_atomically(c.output_dir, {{"events.csv", events.str()}, {"ground_truth.csv", truth.str()}});
  out << "generated " << ds.events.size() << " events and " << ds.ground_truth.size()
      << " ground-truth rows for " << ds.profiles.size() << " users in " << c.output_dir << "\n";
  return kExitOk;
}

int cmd_ingest(const Options& opt, std::ostream& out) {
  const PipelineConfig c = resolve_config(opt);
  if (c.input.events.empty()) throw ConfigError("ingest needs input.events");
  const LogData data = load_log_data(c, c.seed);
  std::ostringstream events, matrices;
  write_event_log(events, data.events);
  const int g = c.windows.granularities.front();
  for (const auto& user : select_users(c, data, c.seed)) {
    for (const auto& w : build_user_windows(data, user, g, c.windows).windows) {
      matrices << "# user=" << w.matrix.user << " label=" << to_string(w.label) << "\n";
      write_matrix_csv(matrices, w.matrix);
    }
  }
  write_files_atomically(c.output_dir, {{"events.csv", events.str()}, {"matrices.csv", matrices.str()}});
  out << "ingested " << data.events.size() << " events (" << data.skipped_rows << " rows skipped)\n";
  return kExitOk;
}

std::vector<UserModel> train_models(const PipelineConfig& c, const LogData& data) {
  std::vector<UserModel> models;
  for (int g : c.windows.granularities) {
    ExperimentResult r = run_experiment(c, data, g, c.seed);
    for (auto& m : r.models) models.push_back(std::move(m));
  }
  return models;
}

int cmd_train(const Options& opt, std::ostream& out) {
  const PipelineConfig c = resolve_config(opt);
  const LogData data = load_log_data(c, c.seed);
  const auto models = train_models(c, data);
  json baseline{{"models", json::array()}}, attention{{"models", json::array()}},
      detector{{"models", json::array()}};
  for (const auto& m : models) {
    const json key{{"user", m.user}, {"granularity", m.granularity}};
    json b = key;
    b["modulation"] = {{"beta", m.modulation.beta}, {"lambda", m.modulation.lambda},
                       {"tau", m.modulation.tau}, {"tau_tuned", m.tau_tuned}};
    b["baseline"] = m.baseline ? json::parse(m.baseline->to_json()) : json(nullptr);
    baseline["models"].push_back(std::move(b));
    json a = key;
    a["attention"] = m.attention ? json::parse(m.attention->to_json()) : json(nullptr);
    attention["models"].push_back(std::move(a));
    json d = key;
    d["detector"] = json::parse(m.detector.to_json());
    detector["models"].push_back(std::move(d));
  }
  write_files_atomically(c.output_dir, {{"baseline.json", baseline.dump()},
                                        {"attention.json", attention.dump()},
                                        {"detector.json", detector.dump()}});
  out << "trained " << models.size() << " user models; artifacts in " << c.output_dir << "\n";
  return kExitOk;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open artifact '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("artifact '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::vector<UserModel> load_models(const fs::path& dir, const PipelineConfig& c, const Taxonomy& taxonomy) {
  const json baseline = read_json_file(dir / "baseline.json");
  const json attention = read_json_file(dir / "attention.json");
  const json detector = read_json_file(dir / "detector.json");
  std::vector<UserModel> models;
  try {
    const auto& bm = baseline.at("models");
    const auto& am = attention.at("models");
    const auto& dm = detector.at("models");
    if (bm.size() != am.size() || bm.size() != dm.size()) throw DataError("artifact files disagree in model count");
    for (std::size_t i = 0; i < bm.size(); ++i) {
      UserModel m;
      m.user = bm[i].at("user").get<std::string>();
      m.granularity = bm[i].at("granularity").get<int>();
      if (am[i].at("user") != m.user || dm[i].at("user") != m.user ||
          am[i].at("granularity") != m.granularity || dm[i].at("granularity") != m.granularity) {
        throw DataError("artifact files list models in different orders");
      }
      const auto& mod = bm[i].at("modulation");
      m.modulation = {mod.at("beta").get<double>(), mod.at("lambda").get<double>(), mod.at("tau").get<double>()};
      m.tau_tuned = mod.at("tau_tuned").get<bool>();
      if (!bm[i].at("baseline").is_null()) m.baseline = BaselineStats::from_json(bm[i].at("baseline").dump());
      if (!am[i].at("attention").is_null()) m.attention = AttentionParams::from_json(am[i].at("attention").dump());
      m.detector = Detector::from_json(dm[i].at("detector").dump());

      // Dimension checks against what the configured pipeline will produce.
      if (c.windows.bin_hours <= 0 || m.granularity % c.windows.bin_hours != 0) {
        throw ShapeError("artifact granularity incompatible with bin width");
      }
      const auto bins = static_cast<std::size_t>(m.granularity / c.windows.bin_hours);
      const std::size_t channels =
          c.ablation.no_dwt ? 1 : static_cast<std::size_t>(c.wavelet.resolve(bins).levels) + 1;
      if (m.baseline && (m.baseline->mu.rows() != taxonomy.size() || m.baseline->mu.cols() != bins)) {
        throw ShapeError("baseline dimension mismatch for user " + m.user + ": expected " +
                         std::to_string(taxonomy.size()) + "x" + std::to_string(bins));
      }
      if (m.attention && m.attention->channels != channels) {
        throw ShapeError("attention dimension mismatch for user " + m.user + ": expected " +
                         std::to_string(channels) + " channels");
      }
      if (m.detector.input_dim() != channels * taxonomy.size() * bins) {
        throw ShapeError("detector dimension mismatch for user " + m.user + ": expected " +
                         std::to_string(channels * taxonomy.size() * bins) + ", artifact has " +
                         std::to_string(m.detector.input_dim()));
      }
      models.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed artifact: ") + e.what());
  }
  return models;
}

int cmd_detect(const Options& opt, std::ostream& out) {
  const PipelineConfig c = resolve_config(opt);
  const fs::path artifacts = opt.artifacts_dir.empty() ? fs::path(c.output_dir) : fs::path(opt.artifacts_dir);
  const LogData data = load_log_data(c, c.seed);
  const auto models = load_models(artifacts, c, data.taxonomy);
  const auto preds = detect_windows(c, data, models);
  write_files_atomically(c.output_dir, {{"predictions.csv", predictions_csv(preds)}});
  out << "wrote " << preds.size() << " predictions to " << (fs::path(c.output_dir) / "predictions.csv").string()
      << "\n";
  return kExitOk;
}

json run_json(const ExperimentResult& r) {
  json users = json::array();
  for (std::size_t i = 0; i < r.users.size(); ++i) {
    json u = metrics_json(r.users[i].metrics);
    u["user"] = r.users[i].user;
    u["scenario"] = r.users[i].scenario;
    u["tau"] = r.models[i].modulation.tau;
    u["tau_tuned"] = r.models[i].tau_tuned;
    users.push_back(std::move(u));
  }
  return {{"seed", r.seed},
          {"granularity", r.granularity},
          {"users", std::move(users)},
          {"mean", metrics_json(r.mean)},
          {"pooled", metrics_json(r.pooled)}};
}

int cmd_eval(const Options& opt, std::ostream& out) {
  const PipelineConfig c = resolve_config(opt);
  json runs = json::array();
  // (scenario, granularity) -> per-user metrics across repeats
  std::map<std::pair<int, int>, std::vector<Metrics>> cells;
  std::map<int, std::vector<Metrics>> by_granularity;
  std::vector<WindowPrediction> all_preds;
  for (int r = 0; r < c.repeats; ++r) {
    const std::uint64_t seed = repeat_seed(c.seed, r);
    const LogData data = load_log_data(c, seed);
    for (int g : c.windows.granularities) {
      const ExperimentResult res = run_experiment(c, data, g, seed);
      runs.push_back(run_json(res));
      for (const auto& u : res.users) {
        cells[{u.scenario, g}].push_back(u.metrics);
        by_granularity[g].push_back(u.metrics);
        if (r == 0) all_preds.insert(all_preds.end(), u.predictions.begin(), u.predictions.end());
      }
    }
  }
  std::ostringstream csv;
  csv << "scenario,granularity,precision,recall,f1\n";
  json table = json::array();
  auto row = [&](const std::string& scenario, int g, const Metrics& m) {
    csv << scenario << ',' << g << ',' << detail::format_double(m.precision) << ','
        << detail::format_double(m.recall) << ',' << detail::format_double(m.f1) << '\n';
    table.push_back({{"scenario", scenario}, {"granularity", g}, {"precision", m.precision},
                     {"recall", m.recall}, {"f1", m.f1}});
  };
  for (const auto& [key, ms] : cells) row(std::to_string(key.first), key.second, macro_average(ms));
  for (const auto& [g, ms] : by_granularity) row("average", g, macro_average(ms));

  const json report{{"config", config_json(c)}, {"runs", std::move(runs)}, {"table", std::move(table)}};
  write_files_atomically(c.output_dir, {{"report.json", report.dump(2)},
                                        {"report.csv", csv.str()},
                                        {"predictions.csv", predictions_csv(all_preds)}});
  out << csv.str();
  return kExitOk;
}

int cmd_ablate(const Options& opt, std::ostream& out) {
  const PipelineConfig base = resolve_config(opt);
  const int g = base.windows.granularities.front();
  struct Variant {
    const char* name;
    AblationFlags flags;
  };
  const Variant variants[] = {{"full", {false, false, false}},
                              {"w/o modulation", {true, false, false}},
                              {"w/o DWT", {false, true, false}},
                              {"w/o attention", {false, false, true}}};
  std::vector<std::vector<Metrics>> per_variant(std::size(variants));
  std::vector<json> variant_runs(std::size(variants), json::array());
  for (int r = 0; r < base.repeats; ++r) {
    const std::uint64_t seed = repeat_seed(base.seed, r);
    const LogData data = load_log_data(base, seed);
    for (std::size_t v = 0; v < std::size(variants); ++v) {
      PipelineConfig c = base;
      c.ablation = variants[v].flags;
      const ExperimentResult res = run_experiment(c, data, g, seed);
      for (const auto& u : res.users) per_variant[v].push_back(u.metrics);
      variant_runs[v].push_back(run_json(res));
    }
  }
  std::ostringstream csv;
  csv << "variant,precision,recall,f1,pooled_precision,pooled_recall,pooled_f1\n";
  json rows = json::array();
  for (std::size_t v = 0; v < std::size(variants); ++v) {
    const Metrics mean = macro_average(per_variant[v]);
    const Metrics pool = pooled(per_variant[v]);
    csv << variants[v].name << ',' << detail::format_double(mean.precision) << ','
        << detail::format_double(mean.recall) << ',' << detail::format_double(mean.f1) << ','
        << detail::format_double(pool.precision) << ',' << detail::format_double(pool.recall) << ','
        << detail::format_double(pool.f1) << '\n';
    rows.push_back({{"variant", variants[v].name},
                    {"no_modulation", variants[v].flags.no_modulation},
                    {"no_dwt", variants[v].flags.no_dwt},
                    {"no_attention", variants[v].flags.no_attention},
                    {"mean", metrics_json(mean)},
                    {"pooled", metrics_json(pool)},
                    {"runs", std::move(variant_runs[v])}});
  }
  const json report{{"config", config_json(base)}, {"granularity", g}, {"variants", std::move(rows)}};
  write_files_atomically(base.output_dir, {{"ablation.json", report.dump(2)}, {"ablation.csv", csv.str()}});
  out << csv.str();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-resolution anomaly detection over user activity logs"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed_value = 0;
  int granularity_value = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON pipeline config");
    sub->add_option("--out", opt.out_dir, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed_value, "master seed (overrides seed)");
    sub->add_option("--granularity", granularity_value, "window length in hours")
        ->check(CLI::IsMember({24, 72, 168}));
    sub->add_flag("--pool-users", opt.pool_users, "fit one baseline over all users' training windows");
    sub->add_flag("--no-bias", opt.no_bias, "drop the attention perceptron biases");
  };
  CLI::App* generate = app.add_subcommand("generate", "write a synthetic event log and ground truth");
  CLI::App* ingest = app.add_subcommand("ingest", "parse event logs and dump behavior matrices");
  CLI::App* train = app.add_subcommand("train", "fit baseline, attention and detector artifacts");
  CLI::App* detect = app.add_subcommand("detect", "score test windows with trained artifacts");
  CLI::App* eval = app.add_subcommand("eval", "run the evaluation protocol and write reports");
  CLI::App* ablate = app.add_subcommand("ablate", "compare the full pipeline against single ablations");
  for (CLI::App* sub : {generate, ingest, train, detect, eval, ablate}) add_common(sub);
  detect->add_option("--artifacts", opt.artifacts_dir, "directory holding trained artifacts (default: --out)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  for (CLI::App* sub : {generate, ingest, train, detect, eval, ablate}) {
    if (sub->count("--seed")) opt.seed = seed_value;
    if (sub->count("--granularity")) opt.granularity = granularity_value;
  }

  try {
    if (*generate) return cmd_generate(opt, out);
    if (*ingest) return cmd_ingest(opt, out);
    if (*train) return cmd_train(opt, out);
    if (*detect) return cmd_detect(opt, out);
    if (*eval) return cmd_eval(opt, out);
    return cmd_ablate(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace mrad
