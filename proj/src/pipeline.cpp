#include "occml/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "occml/eda.hpp"
#include "occml/metrics.hpp"
#include "occml/rng.hpp"

namespace occml::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::kInvalidArgument, "config must be a JSON object");
  static const std::set<std::string> known = {"dataset",       "synthetic",  "seed",           "test_fraction",
                                              "stratified",    "folds",      "profile",        "models",
                                              "output_dir",    "background_size", "explain_samples", "shap_pairs",
                                              "series_columns", "grids"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? (base_dir / path).lexically_normal() : path;
  };
  RunConfig c;
  try {
    if (j.contains("dataset")) c.dataset_path = resolve(j.at("dataset").get<std::string>());
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      SyntheticSource src;
      src.n_rows = s.value("n_rows", src.n_rows);
      src.seed = s.value("seed", src.seed);
      c.synthetic = src;
    }
    c.seed = j.value("seed", c.seed);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.stratified = j.value("stratified", c.stratified);
    c.folds = j.value("folds", c.folds);
    if (j.contains("profile")) c.profile = tuning::parse_profile(j.at("profile").get<std::string>());
    if (j.contains("models")) {
      for (const auto& m : j.at("models")) c.models.push_back(models::parse_kind(m.get<std::string>()));
    }
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    c.background_size = j.value("background_size", c.background_size);
    c.explain_samples = j.value("explain_samples", c.explain_samples);
    c.shap_pairs = j.value("shap_pairs", c.shap_pairs);
    if (j.contains("series_columns")) c.series_columns = j.at("series_columns").get<std::vector<std::string>>();
    if (j.contains("grids")) c.grids = j.at("grids");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("malformed config: ") + e.what());
  }
  if (c.dataset_path.has_value() == c.synthetic.has_value()) {
    throw Error(ErrorKind::kInvalidArgument, "config needs exactly one of 'dataset' or 'synthetic'");
  }
  if (!(c.test_fraction >= 0.0 && c.test_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "test_fraction must be in [0, 1)");
  }
  if (c.folds < 2) throw Error(ErrorKind::kInvalidArgument, "folds must be at least 2");
  if (c.background_size == 0) throw Error(ErrorKind::kInvalidArgument, "background_size must be positive");
  if (c.shap_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "shap_pairs must be positive");
  if (!c.grids.is_object()) throw Error(ErrorKind::kInvalidArgument, "grids must be an object");
  for (const auto& [kind, grid] : c.grids.items()) tuning::grid_from_json(models::parse_kind(kind), grid);
  if (c.models.empty()) c.models = models::all_kinds();
  if (c.series_columns.empty()) {
    c.series_columns = {"S1_Temp", "S1_Light", "S1_Sound", "S5_CO2", "S5_CO2_Slope", "S6_PIR", data::kLabelColumn};
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json config_identity(const RunConfig& c) {
  json j;
  if (c.dataset_path) j["dataset"] = fs::absolute(*c.dataset_path).lexically_normal().string();
  if (c.synthetic) j["synthetic"] = {{"n_rows", c.synthetic->n_rows}, {"seed", c.synthetic->seed}};
  j["seed"] = c.seed;
  j["test_fraction"] = c.test_fraction;
  j["stratified"] = c.stratified;
  j["folds"] = c.folds;
  j["profile"] = tuning::profile_name(c.profile);
  j["background_size"] = c.background_size;
  j["explain_samples"] = c.explain_samples;
  j["shap_pairs"] = c.shap_pairs;
  j["grids"] = c.grids;
  return j;
}

std::string config_hash(const RunConfig& config) { return fnv1a_hex(config_identity(config).dump()); }

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::string> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ResultsStore::ResultsStore(fs::path dir, std::string config_hash, std::uint64_t seed)
    : dir_(std::move(dir)), config_hash_(std::move(config_hash)), seed_(seed) {
  fs::create_directories(dir_);
}

void ResultsStore::write_json(const std::string& file, const json& body, const json& sidecar) {
  const std::string body_hash = fnv1a_hex(body.dump());
  json doc = {{"artifact", file},
              {"meta",
               {{"config_hash", config_hash_},
                {"body_hash", body_hash},
                {"seed", seed_},
                {"versions", {{"occml", OCCML_VERSION}, {"model_format", models::kModelFormatVersion}}}}},
              {"body", body},
              {"sidecar", {{"written_at", utc_timestamp()}, {"timings", sidecar}}}};
  write_file_atomic(dir_ / file, doc.dump(2) + "\n");
  record(file, "json", body_hash);
}

void ResultsStore::write_text(const std::string& file, const std::string& text) {
  write_file_atomic(dir_ / file, text);
  record(file, "csv", fnv1a_hex(text));
}

std::optional<json> ResultsStore::read_json(const std::string& file) const {
  const auto text = slurp(dir_ / file);
  if (!text) return std::nullopt;
  try {
    return json::parse(*text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, "corrupt artifact " + (dir_ / file).string() + ": " + e.what());
  }
}

std::optional<std::string> ResultsStore::read_text(const std::string& file) const { return slurp(dir_ / file); }

bool ResultsStore::exists(const std::string& file) const { return fs::exists(dir_ / file); }

json ResultsStore::index() const {
  const auto text = slurp(dir_ / "index.json");
  if (!text) return {{"artifacts", json::object()}};
  try {
    return json::parse(*text);
  } catch (const json::exception&) {
    return {{"artifacts", json::object()}};
  }
}

void ResultsStore::record(const std::string& file, const std::string& kind, const std::string& body_hash) {
  json idx = index();
  idx["artifacts"][file] = {{"format", kind}, {"config_hash", config_hash_}, {"body_hash", body_hash}};
  write_file_atomic(dir_ / "index.json", idx.dump(2) + "\n");
}

std::string tuning_file(models::ModelKind kind) { return "tuning_" + std::string(models::kind_name(kind)) + ".json"; }
std::string evaluation_file(models::ModelKind kind) {
  return "evaluation_" + std::string(models::kind_name(kind)) + ".json";
}

json default_grids_json() {
  json out = json::object();
  for (auto profile : {tuning::GridProfile::kFast, tuning::GridProfile::kFull}) {
    json p = json::object();
    for (auto kind : models::all_kinds()) {
      p[std::string(models::kind_name(kind))] = tuning::grid_to_json(tuning::default_grid(kind, profile));
    }
    out[std::string(tuning::profile_name(profile))] = p;
  }
  return out;
}

namespace {

bool is_input_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::kInvalidArgument:
    case ErrorKind::kIo:
    case ErrorKind::kMissingColumn:
    case ErrorKind::kNonNumericValue:
    case ErrorKind::kMissingValue:
    case ErrorKind::kLabelOutOfRange:
    case ErrorKind::kValueOutOfRange:
    case ErrorKind::kDegenerateClass:
    case ErrorKind::kUnknownColumn:
    case ErrorKind::kInvalidHyperparameter:
      return true;
    default:
      return false;
  }
}

template <typename Fn>
int guarded(const Console& console, int stage_code, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    console.err << "error: " << e.what() << '\n';
    return is_input_error(e.kind()) ? exit_code::kInput : stage_code;
  } catch (const fs::filesystem_error& e) {
    console.err << "error: " << e.what() << '\n';
    return exit_code::kInput;
  } catch (const std::exception& e) {
    console.err << "error: " << e.what() << '\n';
    return stage_code;
  }
}

struct Prepared {
  data::Dataset dataset;
  data::Split split;
  std::string source;
  Matrix x_train;
  Labels y_train;
  Matrix x_test;
  Labels y_test;
};

data::Dataset load_source(const RunConfig& c, std::string* source) {
  if (c.dataset_path) {
    if (!fs::exists(*c.dataset_path)) throw Error(ErrorKind::kIo, "dataset not found: " + c.dataset_path->string());
    *source = c.dataset_path->filename().string();
    return data::load_dataset(*c.dataset_path);
  }
  *source = "synthetic(n_rows=" + std::to_string(c.synthetic->n_rows) + ", seed=" + std::to_string(c.synthetic->seed) + ")";
  return data::generate_synthetic(c.synthetic->n_rows, c.synthetic->seed);
}

Prepared prepare(const RunConfig& c, ResultsStore& store) {
  Prepared p;
  p.dataset = load_source(c, &p.source);
  if (c.test_fraction == 0.0) {
    p.split.train_indices.resize(p.dataset.size());
    std::iota(p.split.train_indices.begin(), p.split.train_indices.end(), 0);
    p.split.seed = c.seed;
    p.split.stratified = c.stratified;
  } else {
    p.split = data::split(p.dataset, c.test_fraction, derive_seed(c.seed, "split"), c.stratified);
  }
  p.x_train = p.dataset.features(p.split.train_indices);
  p.y_train = p.dataset.labels(p.split.train_indices);
  p.x_test = p.dataset.features(p.split.test_indices);
  p.y_test = p.dataset.labels(p.split.test_indices);
  json manifest = p.split;
  manifest["source"] = p.source;
  manifest["row_count"] = p.dataset.size();
  store.write_json("split.json", manifest);
  return p;
}

ResultsStore open_store(const RunConfig& c) { return ResultsStore(c.output_dir, config_hash(c), c.seed); }

tuning::HyperGrid grid_for(const RunConfig& c, models::ModelKind kind) {
  const std::string name(models::kind_name(kind));
  if (c.grids.contains(name)) return tuning::grid_from_json(kind, c.grids.at(name));
  return tuning::default_grid(kind, c.profile);
}

std::string kind_list(const std::vector<models::ModelKind>& kinds) {
  std::string s;
  for (auto k : kinds) s += (s.empty() ? "" : ",") + std::string(models::kind_name(k));
  return s;
}

// Artifact body when it exists and was produced under the current config.
std::optional<json> current_body(const ResultsStore& store, const std::string& file, const std::string& hash) {
  const auto doc = store.read_json(file);
  if (!doc || doc->at("meta").at("config_hash") != hash) return std::nullopt;
  return doc->at("body");
}

void write_timing_table(const RunConfig& c, ResultsStore& store) {
  const std::string hash = config_hash(c);
  std::vector<tuning::TimingRow> rows;
  for (auto kind : c.models) {
    const auto doc = store.read_json(tuning_file(kind));
    if (!doc || doc->at("meta").at("config_hash") != hash) continue;
    const auto& timings = doc->at("sidecar").at("timings");
    tuning::TimingRow row;
    row.model = std::string(models::kind_name(kind));
    row.total_fits = doc->at("body").at("total_fits").get<std::size_t>();
    row.tuning_time = timings.at("tuning_time").get<double>();
    row.average_tuning_time = timings.at("average_tuning_time").get<double>();
    row.best_model_fit_time = timings.at("best_model_fit_time").get<double>();
    rows.push_back(row);
  }
  store.write_text("timing_table.csv", tuning::timing_table_csv(rows));
}

int tune_one(const RunConfig& c, const Prepared& p, ResultsStore& store, models::ModelKind kind,
             const Console& console) {
  return guarded(console, exit_code::kTuning, [&] {
    const auto grid = grid_for(c, kind);
    const auto folds = tuning::stratified_kfold(p.y_train, c.folds, derive_seed(c.seed, "cv"));
    const auto result = tuning::grid_search(grid, p.x_train, p.y_train, data::kNumClasses, folds,
                                            derive_seed(c.seed, "model"));
    json body = tuning::to_json(result);
    body["profile"] = c.grids.contains(std::string(models::kind_name(kind))) ? "custom" : tuning::profile_name(c.profile);
    body["grid"] = tuning::grid_to_json(grid);
    store.write_json(tuning_file(kind), body, tuning::timings_json(result));
    console.out << "tuned " << models::kind_name(kind) << ": " << result.total_fits << " fits, best "
                << result.best().params.dump() << " (cv score " << format_fixed(result.best().mean_score, 5) << ")\n";
    return exit_code::kOk;
  });
}

struct LoadedModel {
  data::Scaler scaler;
  std::unique_ptr<models::Classifier> model;
  json best_params;
};

std::optional<LoadedModel> load_tuned(const ResultsStore& store, models::ModelKind kind, const std::string& hash) {
  const auto body = current_body(store, tuning_file(kind), hash);
  if (!body) return std::nullopt;
  LoadedModel m;
  m.scaler = body->at("scaler").get<data::Scaler>();
  m.model = models::from_json(body->at("model"));
  m.best_params = body->at("best_params");
  return m;
}

std::string missing_model_message(const ResultsStore& store, models::ModelKind kind) {
  const auto file = tuning_file(kind);
  if (store.exists(file)) return file + " was produced under a different config; re-run tune";
  return "no tuned model " + (store.dir() / file).string() + "; run tune first or pass --tune-on-demand";
}

}  // namespace

int cmd_eda(const RunConfig& c, const Console& console) {
  return guarded(console, exit_code::kInput, [&] {
    ResultsStore store = open_store(c);
    std::string source;
    const auto dataset = load_source(c, &source);
    const auto report = eda::run_eda(dataset);
    json body = eda::to_json(report);
    body["source"] = source;
    store.write_json("eda.json", body);
    store.write_json("ols.json", eda::to_json(report.ols));
    store.write_text("autocorr.csv", eda::autocorr_csv(report.autocorr));
    store.write_text("corr.csv", eda::correlation_csv(report.corr));
    store.write_text("stats.csv", eda::stats_csv(report.stats));
    const auto paths = eda::time_series_export(dataset, c.series_columns, store.dir() / "series");
    console.out << "eda: " << dataset.size() << " rows, " << paths.size() << " series exported to "
                << store.dir().string() << '\n';
    return exit_code::kOk;
  });
}

int cmd_tune(const RunConfig& c, const std::vector<models::ModelKind>& kinds, const Console& console) {
  std::optional<ResultsStore> store;
  std::optional<Prepared> prepared;
  const int code = guarded(console, exit_code::kTuning, [&] {
    store.emplace(open_store(c));
    prepared.emplace(prepare(c, *store));
    return exit_code::kOk;
  });
  if (code != exit_code::kOk) return code;
  int worst = exit_code::kOk;
  for (auto kind : kinds) {
    const int rc = tune_one(c, *prepared, *store, kind, console);
    if (rc != exit_code::kOk && worst == exit_code::kOk) worst = rc;
  }
  const int rc = guarded(console, exit_code::kTuning, [&] {
    write_timing_table(c, *store);
    return exit_code::kOk;
  });
  return worst != exit_code::kOk ? worst : rc;
}

int cmd_evaluate(const RunConfig& c, const std::vector<models::ModelKind>& kinds, bool tune_on_demand,
                 const Console& console) {
  std::optional<ResultsStore> store;
  std::optional<Prepared> p;
  int code = guarded(console, exit_code::kEvaluation, [&] {
    store.emplace(open_store(c));
    p.emplace(prepare(c, *store));
    if (p->y_test.empty()) throw Error(ErrorKind::kEmptyInput, "test set is empty; nothing to evaluate");
    return exit_code::kOk;
  });
  if (code != exit_code::kOk) return code;
  const std::string hash = config_hash(c);
  bool tuned_now = false;
  for (auto kind : kinds) {
    if (!current_body(*store, tuning_file(kind), hash) && tune_on_demand) {
      const int rc = tune_one(c, *p, *store, kind, console);
      if (rc != exit_code::kOk) return rc;
      tuned_now = true;
    }
    const int rc = guarded(console, exit_code::kEvaluation, [&] {
      auto loaded = load_tuned(*store, kind, hash);
      if (!loaded) throw Error(ErrorKind::kMissingArtifact, missing_model_message(*store, kind));
      const auto start = std::chrono::steady_clock::now();
      const Matrix proba = loaded->model->predict_proba(loaded->scaler.transform(p->x_test));
      const double predict_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      auto report = metrics::evaluate(proba, p->y_test, data::kNumClasses);
      json body = metrics::to_json(report);
      body.erase("timings");
      body["model"] = models::kind_name(kind);
      body["best_params"] = loaded->best_params;
      body["test_rows"] = p->y_test.size();
      store->write_json(evaluation_file(kind), body, {{"predict_seconds", predict_seconds}});
      console.out << "evaluated " << models::kind_name(kind) << " on " << p->y_test.size() << " test rows\n";
      return exit_code::kOk;
    });
    if (rc != exit_code::kOk) return rc;
  }
  return guarded(console, exit_code::kEvaluation, [&] {
    if (tuned_now) write_timing_table(c, *store);
    std::vector<metrics::TableRow> rows;
    for (auto kind : c.models) {
      const auto body = current_body(*store, evaluation_file(kind), hash);
      if (!body) continue;
      auto maybe = [&](const char* key) -> metrics::MaybeValue {
        const auto& v = body->at(key);
        return v.is_null() ? std::nullopt : metrics::MaybeValue(v.get<double>());
      };
      rows.push_back({std::string(models::kind_name(kind)), maybe("weighted_f1"), maybe("weighted_auc"),
                      maybe("balanced_accuracy_macro")});
    }
    store->write_text("results_table.csv", metrics::results_table_csv(rows));
    console.out << "results table: " << rows.size() << " models (" << kind_list(kinds) << " evaluated now)\n";
    return exit_code::kOk;
  });
}

int cmd_explain(const RunConfig& c, const std::vector<models::ModelKind>& kinds, const ExplainRequest& request,
                const Console& console) {
  return guarded(console, exit_code::kEvaluation, [&] {
    ResultsStore store = open_store(c);
    const Prepared p = prepare(c, store);
    const std::string hash = config_hash(c);
    if (p.y_test.empty()) throw Error(ErrorKind::kEmptyInput, "test set is empty; nothing to explain");
    const std::size_t n = std::min(request.n_samples.value_or(c.explain_samples), p.y_test.size());
    if (n == 0) throw Error(ErrorKind::kInvalidArgument, "n_samples must be positive");

    std::vector<std::size_t> positions(p.y_test.size());
    std::iota(positions.begin(), positions.end(), 0);
    Rng rng(derive_seed(c.seed, "explain"));
    rng.shuffle(std::span(positions));
    positions.resize(n);
    std::sort(positions.begin(), positions.end());

    for (auto kind : kinds) {
      const auto loaded = load_tuned(store, kind, hash);
      if (!loaded) throw Error(ErrorKind::kMissingArtifact, missing_model_message(store, kind));
      const Matrix train = loaded->scaler.transform(p.x_train);
      const Matrix background = explain::sample_background(train, c.background_size, derive_seed(c.seed, "background"));
      Matrix rows(static_cast<Eigen::Index>(n), p.x_test.cols());
      for (std::size_t i = 0; i < n; ++i) rows.row(static_cast<Eigen::Index>(i)) = p.x_test.row(static_cast<Eigen::Index>(positions[i]));
      rows = loaded->scaler.transform(rows);

      explain::ExplainOptions options;
      options.method = request.method;
      options.n_pairs = request.pairs.value_or(c.shap_pairs);
      options.seed = derive_seed(c.seed, "shap");
      const auto start = std::chrono::steady_clock::now();
      const auto explanation = explain::explain_rows(*loaded->model, rows, background, data::Dataset::feature_names(), options);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto summary = explain::shap_summary(explanation);

      json body = explain::to_json(explanation);
      body["model"] = models::kind_name(kind);
      std::vector<std::size_t> dataset_rows;
      for (auto pos : positions) dataset_rows.push_back(p.split.test_indices[pos]);
      body["dataset_rows"] = dataset_rows;
      body["background_rows"] = background.rows();
      body["n_pairs"] = options.method == explain::Method::kSampled ? json(options.n_pairs) : json(nullptr);
      body["summary"] = explain::to_json(summary);
      const std::string name(models::kind_name(kind));
      store.write_json("explanation_" + name + ".json", body, {{"explain_seconds", seconds}});
      const auto csv = explain::summary_csv(summary);
      store.write_text("shap_summary_" + name + ".csv", csv);
      store.write_text("shap_summary.csv", csv);
      console.out << "explained " << n << " rows with " << name << "; top feature " << summary.front().name << '\n';
    }
    return exit_code::kOk;
  });
}

namespace {

std::string csv_to_markdown(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::ostringstream md;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string cell;
    std::istringstream cells(line);
    std::size_t count = 0;
    md << '|';
    while (std::getline(cells, cell, ',')) {
      md << ' ' << cell << " |";
      ++count;
    }
    md << '\n';
    if (header) {
      md << '|';
      for (std::size_t i = 0; i < count; ++i) md << " --- |";
      md << '\n';
      header = false;
    }
  }
  return md.str();
}

}  // namespace

int cmd_report(const RunConfig& c, const Console& console) {
  return guarded(console, exit_code::kReportIncomplete, [&] {
    ResultsStore store = open_store(c);
    const std::string hash = config_hash(c);
    const json index = store.index();

    std::vector<std::string> warnings;
    for (const auto& [file, entry] : index.at("artifacts").items()) {
      if (entry.value("config_hash", "") != hash) {
        warnings.push_back(file + " was written under config hash " + entry.value("config_hash", "?") +
                           ", current is " + hash);
      }
    }

    struct Section {
      const char* title;
      const char* file;
      bool required;
    };
    const Section sections[] = {{"Model comparison (values x 1000)", "results_table.csv", true},
                                {"Tuning cost", "timing_table.csv", true},
                                {"Lag-1 autocorrelation", "autocorr.csv", true},
                                {"Mean absolute SHAP value", "shap_summary.csv", false}};
    std::vector<std::string> missing;
    std::ostringstream md;
    md << "# occml report\n\n";
    md << "- config hash: `" << hash << "`\n";
    md << "- seed: " << c.seed << "\n";
    md << "- profile: " << tuning::profile_name(c.profile) << ", folds: " << c.folds
       << ", test fraction: " << format_double(c.test_fraction) << "\n";
    md << "- occml version: " << OCCML_VERSION << "\n\n";
    if (!warnings.empty()) {
      md << "> **Warning: stale artifacts.**\n";
      for (const auto& w : warnings) md << "> - " << w << "\n";
      md << "\n";
    }
    for (const auto& s : sections) {
      const auto text = store.read_text(s.file);
      if (!text) {
        if (s.required) missing.push_back(s.file);
        continue;
      }
      md << "## " << s.title << "\n\n" << csv_to_markdown(*text) << "\n";
    }
    if (!missing.empty()) {
      md << "## Missing artifacts\n\n";
      for (const auto& m : missing) md << "- " << m << "\n";
    }
    write_file_atomic(store.dir() / "report.md", md.str());
    for (const auto& w : warnings) console.err << "warning: " << w << '\n';
    if (!missing.empty()) {
      console.err << "report incomplete; missing:";
      for (const auto& m : missing) console.err << ' ' << m;
      console.err << '\n';
      return exit_code::kReportIncomplete;
    }
    console.out << "report written to " << (store.dir() / "report.md").string() << '\n';
    return exit_code::kOk;
  });
}

}  // namespace occml::pipeline
