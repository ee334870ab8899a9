#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"
#include "occml/data.hpp"

namespace occml::eda {

struct SeriesStats {
  std::string name;
  std::size_t count = 0;
  double mean = 0.0;
  // Sample standard deviation (n - 1 denominator); 0 for a single value.
  double std = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

// Quantile of sorted data by linear interpolation at position q * (n - 1).
double quantile_sorted(std::span<const double> sorted, double q);

SeriesStats series_stats(const std::string& name, std::span<const double> values);
// One entry per feature over the selected rows.
std::vector<SeriesStats> summary_stats(const data::Dataset& dataset, const Indices& rows);

// r1 = sum_{t<n} (x_t - m)(x_{t+1} - m) / sum_t (x_t - m)^2 with m the full-series mean.
double lag1_autocorrelation(std::span<const double> series);

// nullopt when either series is constant.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> values;
};

// The 16 features plus the label, in file order.
CorrelationMatrix correlation_matrix(const data::Dataset& dataset);

struct OlsFit {
  double intercept = 0.0;
  double slope = 0.0;
};

OlsFit ols_fit(std::span<const double> x, std::span<const double> y);

// Writes <dir>/series_<column>.csv with header row_index,value; returns paths.
std::vector<std::filesystem::path> time_series_export(const data::Dataset& dataset,
                                                      const std::vector<std::string>& columns,
                                                      const std::filesystem::path& dir);

struct AutocorrEntry {
  std::string name;
  std::optional<double> value;
  std::string note;
};

struct EdaReport {
  std::vector<SeriesStats> stats;
  std::vector<AutocorrEntry> autocorr;
  CorrelationMatrix corr;
  OlsFit ols;
};

// Runs on every row of the dataset, in file order.
EdaReport run_eda(const data::Dataset& dataset);

nlohmann::json to_json(const SeriesStats& s);
nlohmann::json to_json(const EdaReport& report);
nlohmann::json to_json(const OlsFit& fit);
std::string autocorr_csv(const std::vector<AutocorrEntry>& entries);
std::string correlation_csv(const CorrelationMatrix& corr);
std::string stats_csv(const std::vector<SeriesStats>& stats);

}  // namespace occml::eda
