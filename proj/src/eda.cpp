#include "occml/eda.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "occml/parallel.hpp"

namespace occml::eda {

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::kEmptySelection, "quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

SeriesStats series_stats(const std::string& name, std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kEmptySelection, "no rows selected for " + name);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  SeriesStats s;
  s.name = name;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1)) : 0.0;
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.q3 = quantile_sorted(sorted, 0.75);
  return s;
}

std::vector<SeriesStats> summary_stats(const data::Dataset& dataset, const Indices& rows) {
  if (rows.empty()) throw Error(ErrorKind::kEmptySelection, "summary statistics need at least one row");
  const auto names = data::Dataset::feature_names();
  std::vector<SeriesStats> out(names.size());
  parallel_for(names.size(), [&](std::size_t f) {
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] >= dataset.size()) throw Error(ErrorKind::kInvalidArgument, "row index out of range");
      values[i] = dataset[rows[i]].features[f];
    }
    out[f] = series_stats(names[f], values);
  });
  return out;
}

double lag1_autocorrelation(std::span<const double> x) {
  if (x.size() < 3) throw Error(ErrorKind::kTooShort, "autocorrelation needs at least 3 values");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double num = 0.0;
  double den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double d = x[t] - mean;
    den += d * d;
    if (t + 1 < x.size()) num += d * (x[t + 1] - mean);
  }
  if (!(den > 0.0)) throw Error(ErrorKind::kConstantSeries, "autocorrelation of a constant series");
  return num / den;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::kLengthMismatch, "pearson: series lengths differ");
  if (a.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

std::vector<std::string> non_time_columns() {
  auto names = data::Dataset::feature_names();
  names.emplace_back(data::kLabelColumn);
  return names;
}

}  // namespace

CorrelationMatrix correlation_matrix(const data::Dataset& dataset) {
  CorrelationMatrix out;
  out.names = non_time_columns();
  const std::size_t m = out.names.size();
  std::vector<std::vector<double>> cols(m);
  for (std::size_t j = 0; j < m; ++j) cols[j] = dataset.column(out.names[j]);
  out.values.assign(m, std::vector<std::optional<double>>(m));
  parallel_for(m, [&](std::size_t i) {
    for (std::size_t j = i; j < m; ++j) {
      std::optional<double> r = pearson(cols[i], cols[j]);
      if (i == j && r) r = 1.0;
      out.values[i][j] = r;
    }
  });
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) out.values[i][j] = out.values[j][i];
  }
  return out;
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kLengthMismatch, "ols: series lengths differ");
  if (x.size() < 2) throw Error(ErrorKind::kTooShort, "ols needs at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::kConstantRegressor, "ols regressor is constant");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

std::vector<std::filesystem::path> time_series_export(const data::Dataset& dataset,
                                                      const std::vector<std::string>& columns,
                                                      const std::filesystem::path& dir) {
  // Resolve every column before touching the filesystem.
  std::vector<std::vector<double>> values;
  for (const auto& name : columns) values.push_back(dataset.column(name));
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto path = dir / ("series_" + columns[c] + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out << "row_index,value\n";
    for (std::size_t i = 0; i < values[c].size(); ++i) out << i << ',' << format_double(values[c][i]) << '\n';
    if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
    paths.push_back(path);
  }
  return paths;
}

EdaReport run_eda(const data::Dataset& dataset) {
  if (dataset.empty()) throw Error(ErrorKind::kEmptySelection, "dataset is empty");
  EdaReport report;
  Indices all(dataset.size());
  std::iota(all.begin(), all.end(), 0);
  report.stats = summary_stats(dataset, all);
  for (const auto& name : non_time_columns()) {
    AutocorrEntry e;
    e.name = name;
    try {
      e.value = lag1_autocorrelation(dataset.column(name));
    } catch (const Error& err) {
      e.note = std::string(error_kind_name(err.kind()));
    }
    report.autocorr.push_back(std::move(e));
  }
  report.corr = correlation_matrix(dataset);
  const auto slope = dataset.column("S5_CO2_Slope");
  const auto occupancy = dataset.column(data::kLabelColumn);
  report.ols = ols_fit(slope, occupancy);
  return report;
}

nlohmann::json to_json(const SeriesStats& s) {
  return {{"name", s.name}, {"count", s.count}, {"mean", s.mean}, {"std", s.std},   {"min", s.min},
          {"q1", s.q1},     {"median", s.median}, {"q3", s.q3},   {"max", s.max}};
}

nlohmann::json to_json(const OlsFit& fit) {
  return {{"response", data::kLabelColumn}, {"regressor", "S5_CO2_Slope"}, {"intercept", fit.intercept}, {"slope", fit.slope}};
}

namespace {

nlohmann::json maybe(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string maybe_csv(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

nlohmann::json to_json(const EdaReport& r) {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : r.stats) stats.push_back(to_json(s));
  nlohmann::json autocorr = nlohmann::json::array();
  for (const auto& e : r.autocorr) {
    nlohmann::json entry = {{"name", e.name}, {"lag1", maybe(e.value)}};
    if (!e.note.empty()) entry["note"] = e.note;
    autocorr.push_back(std::move(entry));
  }
  nlohmann::json matrix = nlohmann::json::array();
  for (const auto& row : r.corr.values) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& v : row) jr.push_back(maybe(v));
    matrix.push_back(std::move(jr));
  }
  return {{"row_count", r.stats.empty() ? 0 : r.stats.front().count},
          {"quantile_rule", "linear interpolation at q*(n-1)"},
          {"stats", stats},
          {"autocorrelation", autocorr},
          {"correlation", {{"names", r.corr.names}, {"values", matrix}}},
          {"ols", to_json(r.ols)}};
}

std::string autocorr_csv(const std::vector<AutocorrEntry>& entries) {
  std::ostringstream os;
  os << "feature,autocorrelation\n";
  for (const auto& e : entries) os << e.name << ',' << maybe_csv(e.value) << '\n';
  return os.str();
}

std::string correlation_csv(const CorrelationMatrix& corr) {
  std::ostringstream os;
  os << "feature";
  for (const auto& n : corr.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < corr.names.size(); ++i) {
    os << corr.names[i];
    for (const auto& v : corr.values[i]) os << ',' << maybe_csv(v);
    os << '\n';
  }
  return os.str();
}

std::string stats_csv(const std::vector<SeriesStats>& stats) {
  std::ostringstream os;
  os << "feature,count,mean,std,min,25%,50%,75%,max\n";
  for (const auto& s : stats) {
    os << s.name << ',' << s.count << ',' << format_fixed(s.mean, 2) << ',' << format_fixed(s.std, 2) << ','
       << format_fixed(s.min, 2) << ',' << format_fixed(s.q1, 2) << ',' << format_fixed(s.median, 2) << ','
       << format_fixed(s.q3, 2) << ',' << format_fixed(s.max, 2) << '\n';
  }
  return os.str();
}

}  // namespace occml::eda
