#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"

namespace occml::data {

inline constexpr int kNumFeatures = 16;
inline constexpr int kNumClasses = 4;

// CSV header, in file order. The first two columns are Date/Time and the last
// is the occupancy label.
inline constexpr std::array<const char*, 19> kColumns = {
    "Date",      "Time",      "S1_Temp",      "S2_Temp",   "S3_Temp",   "S4_Temp",
    "S1_Light",  "S2_Light",  "S3_Light",     "S4_Light",  "S1_Sound",  "S2_Sound",
    "S3_Sound",  "S4_Sound",  "S5_CO2",       "S5_CO2_Slope", "S6_PIR", "S7_PIR",
    "Room_Occupancy_Count"};

inline constexpr const char* kLabelColumn = "Room_Occupancy_Count";

// Feature positions of the two PIR flags.
inline constexpr int kPirFeatures[] = {14, 15};

struct SensorRecord {
  std::string date;
  std::string time;
  std::array<double, kNumFeatures> features{};
  int label = 0;
};

// Immutable after construction; record order is file order.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<SensorRecord> records);

  const std::vector<SensorRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const SensorRecord& operator[](std::size_t i) const { return records_[i]; }

  static std::vector<std::string> feature_names();

  Labels labels() const;
  Labels labels(const Indices& rows) const;
  Matrix features() const;
  Matrix features(const Indices& rows) const;
  // One column by name; accepts any feature name or the label column.
  std::vector<double> column(const std::string& name) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<SensorRecord> records_;
};

bool operator==(const SensorRecord& a, const SensorRecord& b);

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::istream& in, const std::string& source_name = "<stream>");
void write_dataset(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct Split {
  Indices train_indices;
  Indices test_indices;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
  bool stratified = false;
};

Split split(const Dataset& dataset, double test_fraction, std::uint64_t seed, bool stratified);
Split split_labels(const Labels& labels, double test_fraction, std::uint64_t seed, bool stratified);

// Largest-remainder allocation of round(fraction * total) over the classes:
// floor(fraction * count_c) each, the remainder to the largest fractional
// parts, ties to the lower class index.
std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_counts,
                                                double test_fraction);

void to_json(nlohmann::json& j, const Split& s);
void from_json(const nlohmann::json& j, Split& s);

// Per-feature standardization fitted on training rows. Population standard
// deviation; a std below 1e-12 is clamped to 1 and a warning recorded.
struct Scaler {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<std::string> warnings;

  Matrix transform(const Matrix& rows) const;
};

Scaler fit_scaler(const Matrix& features, const Indices& train_indices);
Scaler fit_scaler(const Matrix& features);
Scaler fit_scaler(const Dataset& dataset, const Indices& train_indices);
Matrix apply_scaler(const Scaler& scaler, const Matrix& rows);

void to_json(nlohmann::json& j, const Scaler& s);
void from_json(const nlohmann::json& j, Scaler& s);

// Occupancy-like synthetic data: a sticky Markov chain over {0..3} drives
// light, sound, temperature and CO2 channels; the CO2 channel integrates the
// occupancy through an AR(1) filter so it is strongly autocorrelated.
Dataset generate_synthetic(std::size_t n_rows, std::uint64_t seed);

}  // namespace occml::data
