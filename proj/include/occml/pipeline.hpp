#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/data.hpp"
#include "occml/explain.hpp"
#include "occml/models/classifier.hpp"
#include "occml/tuning.hpp"

namespace occml::pipeline {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInput = 2;
inline constexpr int kTuning = 3;
inline constexpr int kEvaluation = 4;
inline constexpr int kReportIncomplete = 5;
}  // namespace exit_code

struct SyntheticSource {
  std::size_t n_rows = 5000;
  std::uint64_t seed = 7;
};

struct RunConfig {
  // Exactly one of dataset_path / synthetic is set.
  std::optional<std::filesystem::path> dataset_path;
  std::optional<SyntheticSource> synthetic;
  std::uint64_t seed = 42;
  // 0 keeps every row for training and leaves the test set empty.
  double test_fraction = 0.3;
  bool stratified = true;
  int folds = 5;
  tuning::GridProfile profile = tuning::GridProfile::kFast;
  std::vector<models::ModelKind> models;
  std::filesystem::path output_dir = "occml_out";
  std::size_t background_size = 100;
  std::size_t explain_samples = 200;
  int shap_pairs = 16;
  std::vector<std::string> series_columns;
  // Optional per-kind grid overrides: {"rf": {"n_trees": [50, 100]}}.
  nlohmann::json grids = nlohmann::json::object();
};

// Relative paths in the file resolve against the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
// Every field that can influence results; the output directory is excluded.
nlohmann::json config_identity(const RunConfig& config);
std::string config_hash(const RunConfig& config);

std::string fnv1a_hex(const std::string& bytes);

// JSON artifacts: {artifact, meta{config_hash, body_hash, seed, versions}, body, sidecar}.
// `sidecar` carries timings and timestamps and is excluded from body_hash.
class ResultsStore {
 public:
  ResultsStore(std::filesystem::path dir, std::string config_hash, std::uint64_t seed);

  const std::filesystem::path& dir() const { return dir_; }

  void write_json(const std::string& file, const nlohmann::json& body, const nlohmann::json& sidecar = nullptr);
  void write_text(const std::string& file, const std::string& text);
  std::optional<nlohmann::json> read_json(const std::string& file) const;
  std::optional<std::string> read_text(const std::string& file) const;
  bool exists(const std::string& file) const;
  nlohmann::json index() const;

 private:
  void record(const std::string& file, const std::string& kind, const std::string& body_hash);

  std::filesystem::path dir_;
  std::string config_hash_;
  std::uint64_t seed_;
};

// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

struct Console {
  std::ostream& out;
  std::ostream& err;
};

struct ExplainRequest {
  std::optional<std::size_t> n_samples;
  explain::Method method = explain::Method::kSampled;
  std::optional<int> pairs;
};

int cmd_eda(const RunConfig& config, const Console& console);
int cmd_tune(const RunConfig& config, const std::vector<models::ModelKind>& kinds, const Console& console);
int cmd_evaluate(const RunConfig& config, const std::vector<models::ModelKind>& kinds, bool tune_on_demand,
                 const Console& console);
int cmd_explain(const RunConfig& config, const std::vector<models::ModelKind>& kinds,
                const ExplainRequest& request, const Console& console);
int cmd_report(const RunConfig& config, const Console& console);

// Both grid profiles for every kind, as written to config/grids.json.
nlohmann::json default_grids_json();

std::string tuning_file(models::ModelKind kind);
std::string evaluation_file(models::ModelKind kind);

}  // namespace occml::pipeline
