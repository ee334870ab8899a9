#include "occml/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "occml/rng.hpp"

namespace occml::data {
namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" || s == "null" ||
         s == "NULL";
}

std::string location(const std::string& source, std::size_t row, std::string_view column) {
  std::ostringstream os;
  os << source << ": row " << row << ", column " << column;
  return os.str();
}

double parse_cell(std::string_view cell, const std::string& source, std::size_t row,
                  std::string_view column) {
  cell = trim(cell);
  if (is_missing_token(cell)) {
    throw Error(ErrorKind::kMissingValue, location(source, row, column));
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorKind::kNonNumericValue,
                location(source, row, column) + " ('" + std::string(cell) + "')");
  }
  if (!std::isfinite(value)) {
    throw Error(ErrorKind::kMissingValue, location(source, row, column));
  }
  return value;
}

}  // namespace

Dataset::Dataset(std::vector<SensorRecord> records) : records_(std::move(records)) {}

std::vector<std::string> Dataset::feature_names() {
  return {kColumns.begin() + 2, kColumns.begin() + 2 + kNumFeatures};
}

Labels Dataset::labels() const {
  Labels out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) out[i] = records_[i].label;
  return out;
}

Labels Dataset::labels(const Indices& rows) const {
  Labels out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = records_.at(rows[i]).label;
  return out;
}

Matrix Dataset::features() const {
  Matrix m(static_cast<Eigen::Index>(records_.size()), kNumFeatures);
  for (std::size_t i = 0; i < records_.size(); ++i) {
    for (int f = 0; f < kNumFeatures; ++f) m(static_cast<Eigen::Index>(i), f) = records_[i].features[f];
  }
  return m;
}

Matrix Dataset::features(const Indices& rows) const {
  Matrix m(static_cast<Eigen::Index>(rows.size()), kNumFeatures);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& rec = records_.at(rows[i]);
    for (int f = 0; f < kNumFeatures; ++f) m(static_cast<Eigen::Index>(i), f) = rec.features[f];
  }
  return m;
}

std::vector<double> Dataset::column(const std::string& name) const {
  std::vector<double> out;
  out.reserve(records_.size());
  if (name == kLabelColumn) {
    for (const auto& r : records_) out.push_back(r.label);
    return out;
  }
  const auto names = feature_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::kUnknownColumn, name);
  const auto f = static_cast<std::size_t>(it - names.begin());
  for (const auto& r : records_) out.push_back(r.features[f]);
  return out;
}

bool operator==(const SensorRecord& a, const SensorRecord& b) {
  return a.date == b.date && a.time == b.time && a.features == b.features && a.label == b.label;
}

bool operator==(const Dataset& a, const Dataset& b) { return a.records_ == b.records_; }

Dataset parse_dataset(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kMissingColumn, source_name + ": empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (c >= header.size() || trim(header[c]) != kColumns[c]) {
      throw Error(ErrorKind::kMissingColumn,
                  source_name + ": expected column " + std::to_string(c + 1) + " to be '" +
                      kColumns[c] + "'");
    }
  }
  if (header.size() != kColumns.size()) {
    throw Error(ErrorKind::kMissingColumn, source_name + ": unexpected extra columns in header");
  }

  std::vector<SensorRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != kColumns.size()) {
      const std::size_t missing_at = std::min(cells.size(), kColumns.size() - 1);
      throw Error(ErrorKind::kMissingValue,
                  location(source_name, row, kColumns[missing_at]) + " (expected " +
                      std::to_string(kColumns.size()) + " fields, got " +
                      std::to_string(cells.size()) + ")");
    }
    SensorRecord rec;
    rec.date = std::string(trim(cells[0]));
    rec.time = std::string(trim(cells[1]));
    if (rec.date.empty()) throw Error(ErrorKind::kMissingValue, location(source_name, row, "Date"));
    if (rec.time.empty()) throw Error(ErrorKind::kMissingValue, location(source_name, row, "Time"));
    for (int f = 0; f < kNumFeatures; ++f) {
      rec.features[f] = parse_cell(cells[f + 2], source_name, row, kColumns[f + 2]);
    }
    for (int f : kPirFeatures) {
      if (rec.features[f] != 0.0 && rec.features[f] != 1.0) {
        throw Error(ErrorKind::kValueOutOfRange,
                    location(source_name, row, kColumns[f + 2]) + " must be 0 or 1");
      }
    }
    const double label = parse_cell(cells[18], source_name, row, kLabelColumn);
    if (label != std::floor(label) || label < 0 || label >= kNumClasses) {
      throw Error(ErrorKind::kLabelOutOfRange,
                  location(source_name, row, kLabelColumn) + " value " + format_double(label));
    }
    rec.label = static_cast<int>(label);
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return parse_dataset(in, path.string());
}

void write_dataset(const Dataset& dataset, std::ostream& out) {
  for (std::size_t c = 0; c < kColumns.size(); ++c) out << (c ? "," : "") << kColumns[c];
  out << '\n';
  for (const auto& r : dataset.records()) {
    out << r.date << ',' << r.time;
    for (double v : r.features) out << ',' << format_double(v);
    out << ',' << r.label << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  write_dataset(dataset, out);
}

// ---------------------------------------------------------------------------
// Splitting

std::vector<std::size_t> stratified_test_counts(const std::vector<std::size_t>& class_counts,
                                                double test_fraction) {
  const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  const auto target = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(total)));
  std::vector<std::size_t> counts(class_counts.size());
  // Remainders are quantized to 1e-9 so products such as 0.3 * 8228 and
  // 0.3 * 748 compare as the tie they are and fall back to class order.
  std::vector<long long> remainders(class_counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const double exact = test_fraction * static_cast<double>(class_counts[c]);
    const double whole = std::floor(exact + 1e-9);
    counts[c] = std::min(static_cast<std::size_t>(whole), class_counts[c]);
    remainders[c] = std::max(0LL, std::llround((exact - whole) * 1e9));
    assigned += counts[c];
  }
  std::vector<std::size_t> order(class_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
    const std::size_t c = order[k];
    if (remainders[c] > 0 && counts[c] < class_counts[c]) {
      ++counts[c];
      ++assigned;
    }
  }
  return counts;
}

Split split_labels(const Labels& labels, double test_fraction, std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "test_fraction must lie in (0, 1)");
  }
  if (labels.empty()) throw Error(ErrorKind::kEmptyInput, "cannot split an empty dataset");
  Split out;
  out.seed = seed;
  out.test_fraction = test_fraction;
  out.stratified = stratified;
  Rng rng(derive_seed(seed, "split"));

  if (!stratified) {
    Indices all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(std::span(all));
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(all.size())));
    if (all.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, all.size() - 1);
    out.test_indices.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train_indices.assign(all.begin() + static_cast<std::ptrdiff_t>(n_test), all.end());
  } else {
    const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<Indices> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0) throw Error(ErrorKind::kLabelOutOfRange, "negative label");
      by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::vector<std::size_t> class_counts;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (!by_class[c].empty() && by_class[c].size() < 2) {
        throw Error(ErrorKind::kDegenerateClass,
                    "class " + std::to_string(c) + " has fewer than 2 rows");
      }
      class_counts.push_back(by_class[c].size());
    }
    const auto test_counts = stratified_test_counts(class_counts, test_fraction);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      Rng class_rng(derive_seed(seed, c));
      class_rng.shuffle(std::span(by_class[c]));
      const auto n_test = static_cast<std::ptrdiff_t>(test_counts[c]);
      out.test_indices.insert(out.test_indices.end(), by_class[c].begin(), by_class[c].begin() + n_test);
      out.train_indices.insert(out.train_indices.end(), by_class[c].begin() + n_test, by_class[c].end());
    }
  }
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.test_indices.begin(), out.test_indices.end());
  return out;
}

Split split(const Dataset& dataset, double test_fraction, std::uint64_t seed, bool stratified) {
  return split_labels(dataset.labels(), test_fraction, seed, stratified);
}

void to_json(nlohmann::json& j, const Split& s) {
  j = nlohmann::json{{"seed", s.seed},
                     {"test_fraction", s.test_fraction},
                     {"stratified", s.stratified},
                     {"train_indices", s.train_indices},
                     {"test_indices", s.test_indices}};
}

void from_json(const nlohmann::json& j, Split& s) {
  j.at("seed").get_to(s.seed);
  j.at("test_fraction").get_to(s.test_fraction);
  j.at("stratified").get_to(s.stratified);
  j.at("train_indices").get_to(s.train_indices);
  j.at("test_indices").get_to(s.test_indices);
}

// ---------------------------------------------------------------------------
// Standardization

Scaler fit_scaler(const Matrix& features, const Indices& train_indices) {
  if (train_indices.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no training rows for scaler");
  const auto cols = static_cast<std::size_t>(features.cols());
  Scaler s;
  s.means.assign(cols, 0.0);
  s.stds.assign(cols, 0.0);
  const auto n = static_cast<double>(train_indices.size());
  for (std::size_t f = 0; f < cols; ++f) {
    double sum = 0.0;
    for (auto i : train_indices) sum += features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
    const double mean = sum / n;
    double ss = 0.0;
    for (auto i : train_indices) {
      const double d = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / n);
    if (sd < 1e-12) {
      s.warnings.push_back("ConstantFeature: column " + std::to_string(f));
      sd = 1.0;
    }
    s.means[f] = mean;
    s.stds[f] = sd;
  }
  return s;
}

Scaler fit_scaler(const Matrix& features) {
  Indices all(static_cast<std::size_t>(features.rows()));
  std::iota(all.begin(), all.end(), 0);
  return fit_scaler(features, all);
}

Scaler fit_scaler(const Dataset& dataset, const Indices& train_indices) {
  if (train_indices.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "no training rows for scaler");
  Scaler s = fit_scaler(dataset.features(train_indices));
  const auto names = Dataset::feature_names();
  for (auto& w : s.warnings) {
    const auto col = std::stoul(w.substr(w.rfind(' ') + 1));
    w = "ConstantFeature: " + names.at(col);
  }
  return s;
}

Matrix Scaler::transform(const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != means.size()) {
    throw Error(ErrorKind::kLengthMismatch, "scaler fitted on a different feature count");
  }
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index f = 0; f < rows.cols(); ++f) {
      const auto k = static_cast<std::size_t>(f);
      out(i, f) = (rows(i, f) - means[k]) / stds[k];
    }
  }
  return out;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& rows) { return scaler.transform(rows); }

void to_json(nlohmann::json& j, const Scaler& s) {
  j = nlohmann::json{{"means", s.means}, {"stds", s.stds}, {"warnings", s.warnings}};
}

void from_json(const nlohmann::json& j, Scaler& s) {
  j.at("means").get_to(s.means);
  j.at("stds").get_to(s.stds);
  if (j.contains("warnings")) j.at("warnings").get_to(s.warnings);
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

// Days since 1970-01-01 to civil date (H. Hinnant's algorithm).
void civil_from_days(long z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(yoe) + static_cast<int>(era * 400) + (m <= 2);
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

Dataset generate_synthetic(std::size_t n_rows, std::uint64_t seed) {
  if (n_rows < 100) throw Error(ErrorKind::kInvalidArgument, "generate_synthetic needs n_rows >= 100");
  Rng rng(derive_seed(seed, "synthetic"));

  // Mostly-empty room with occasional stays; counts change by at most one.
  constexpr double kStay[kNumClasses] = {0.992, 0.97, 0.97, 0.97};
  constexpr double kLightBase[4] = {8.0, 7.0, 10.0, 4.0};
  constexpr double kLightGain[4] = {90.0, 85.0, 60.0, 18.0};
  constexpr double kLightNoise[4] = {6.0, 7.0, 15.0, 6.0};
  constexpr double kTempBase[4] = {25.1, 25.2, 24.7, 25.6};

  const long start_day = 17522;  // 2017-12-22
  long seconds = 10 * 3600 + 49 * 60 + 41;

  std::vector<SensorRecord> records;
  records.reserve(n_rows);
  int occ = 0;
  double smooth_occ = 0.0;
  double co2 = 355.0;
  double prev_co2 = co2;
  double slope = 0.0;
  std::array<double, 4> temp_drift{};
  for (std::size_t t = 0; t < n_rows; ++t) {
    if (t > 0 && !rng.bernoulli(kStay[occ])) {
      if (occ == 0) {
        occ = 1;
      } else if (occ == 3) {
        occ = 2;
      } else {
        occ += rng.bernoulli(0.5) ? 1 : -1;
      }
    }
    smooth_occ = 0.9 * smooth_occ + 0.1 * occ;

    SensorRecord rec;
    const long day = start_day + seconds / 86400;
    const long sod = seconds % 86400;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    civil_from_days(day, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d/%02u/%02u", y, m, d);
    rec.date = buf;
    std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld", sod / 3600, (sod / 60) % 60, sod % 60);
    rec.time = buf;
    seconds += 30;

    for (int s = 0; s < 4; ++s) {
      temp_drift[s] = 0.995 * temp_drift[s] + 0.005 * (0.35 * occ) + rng.normal(0.0, 0.004);
      rec.features[s] = round_to(kTempBase[s] + temp_drift[s] + rng.normal(0.0, 0.02), 0.06);
      const double light = kLightBase[s] + kLightGain[s] * occ * (1.0 + 0.05 * rng.normal()) +
                           rng.normal(0.0, kLightNoise[s]);
      rec.features[4 + s] = std::max(0.0, std::round(light));
      double sound = 0.06 + rng.normal(0.0, 0.008);
      if (occ > 0 && rng.bernoulli(0.15 + 0.1 * occ)) sound += rng.uniform(0.1, 1.5 + 0.5 * occ);
      rec.features[8 + s] = std::max(0.01, round_to(sound, 0.01));
    }
    const double co2_target = 350.0 + 130.0 * smooth_occ;
    co2 = 0.985 * co2 + 0.015 * co2_target + rng.normal(0.0, 0.4);
    rec.features[12] = std::round(co2);
    slope = 0.9 * slope + 0.1 * (co2 - prev_co2) * 4.0;
    prev_co2 = co2;
    rec.features[13] = round_to(slope + rng.normal(0.0, 0.01), 0.001);
    rec.features[14] = rng.bernoulli(occ > 0 ? 0.2 + 0.15 * occ : 0.01) ? 1.0 : 0.0;
    rec.features[15] = rng.bernoulli(occ > 0 ? 0.15 + 0.15 * occ : 0.01) ? 1.0 : 0.0;
    rec.label = occ;
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

}  // namespace occml::data
