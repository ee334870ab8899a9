#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "occml/data.hpp"
#include "occml/eda.hpp"
#include "oracles.hpp"

using namespace occml;
using namespace occml::eda;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an occml::Error");
  return ErrorKind::kInvalidArgument;
}

std::vector<double> normals(oracle::Gen& g, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = g.normal();
  return v;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("occml_eda_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("eda") {
  TEST_CASE("quantiles of 1..4") {
    const std::vector<double> v = {1, 2, 3, 4};
    CHECK(quantile_sorted(v, 0.5) == 2.5);
    CHECK(quantile_sorted(v, 0.25) == 1.75);
    CHECK(quantile_sorted(v, 0.75) == 3.25);
    const auto s = series_stats("v", v);
    CHECK(s.count == 4);
    CHECK(s.mean == 2.5);
    // sqrt(5/3)
    CHECK(s.std == doctest::Approx(1.2909944487358056).epsilon(1e-15));
    CHECK(s.min == 1);
    CHECK(s.max == 4);
  }

  TEST_CASE("constant column has zero spread") {
    const std::vector<double> v(7, 3.5);
    const auto s = series_stats("c", v);
    CHECK(s.std == 0.0);
    CHECK(s.q1 == 3.5);
    CHECK(s.q3 == 3.5);
    CHECK(series_stats("one", std::vector<double>{2.0}).std == 0.0);
  }

  TEST_CASE("summary stats cover every feature of the selected rows") {
    const auto d = data::generate_synthetic(200, 2);
    const auto stats = summary_stats(d, {0, 1, 2, 3});
    REQUIRE(stats.size() == 16);
    CHECK(stats[0].name == "S1_Temp");
    CHECK(stats[0].count == 4);
    const auto col = d.column("S1_Temp");
    CHECK(stats[0].max == std::max({col[0], col[1], col[2], col[3]}));
    CHECK(kind_of([&] { summary_stats(d, {}); }) == ErrorKind::kEmptySelection);
  }

  TEST_CASE("alternating series has lag-1 autocorrelation near -1") {
    for (std::size_t n : {10U, 101U, 1000U}) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 ? 1.0 : -1.0;
      CHECK(std::abs(lag1_autocorrelation(v) + 1.0) <= 2.0 / static_cast<double>(n));
    }
    // Linear trend: independently computed value for 1..5 is 0.4.
    CHECK(lag1_autocorrelation(std::vector<double>{1, 2, 3, 4, 5}) == doctest::Approx(0.4).epsilon(1e-15));
  }

  TEST_CASE("autocorrelation errors") {
    CHECK(kind_of([] { lag1_autocorrelation(std::vector<double>{1, 2}); }) == ErrorKind::kTooShort);
    CHECK(kind_of([] { lag1_autocorrelation(std::vector<double>{4, 4, 4, 4}); }) == ErrorKind::kConstantSeries);
  }

  TEST_CASE("property: shuffled white noise has small autocorrelation") {
    oracle::Gen g(3);
    int inside = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const std::size_t n = 2000;
      const auto v = normals(g, n);
      inside += std::abs(lag1_autocorrelation(v)) < 3.0 / std::sqrt(static_cast<double>(n)) ? 1 : 0;
    }
    // A 3-sigma band; a miss or two is allowed by chance.
    CHECK(inside >= 38);
  }

  TEST_CASE("pearson examples") {
    const std::vector<double> x = {1, 2, 3, 4, 5};
    const std::vector<double> up = {2, 4, 6, 8, 10};
    const std::vector<double> down = {5, 4, 3, 2, 1};
    CHECK(*pearson(x, up) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(*pearson(x, down) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_FALSE(pearson(x, std::vector<double>(5, 1.0)).has_value());
    CHECK(kind_of([&] { pearson(x, std::vector<double>{1, 2}); }) == ErrorKind::kLengthMismatch);
  }

  TEST_CASE("property: pearson is symmetric, bounded, affine invariant and matches a naive formula") {
    oracle::Gen g(4);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = static_cast<std::size_t>(g.integer(3, 60));
      const auto a = normals(g, n);
      auto b = normals(g, n);
      const double mix = g.uniform(-1, 1);
      for (std::size_t i = 0; i < n; ++i) b[i] += mix * 3.0 * a[i];
      const double r = *pearson(a, b);
      CHECK(std::abs(r) <= 1.0);
      CHECK(r == doctest::Approx(*pearson(b, a)).epsilon(1e-12));
      CHECK(r == doctest::Approx(oracle::naive_pearson(a, b)).epsilon(1e-10));
      const double scale = g.uniform(0.1, 10.0), shift = g.uniform(-100, 100);
      std::vector<double> t(n);
      for (std::size_t i = 0; i < n; ++i) t[i] = scale * a[i] + shift;
      CHECK(*pearson(t, b) == doctest::Approx(r).epsilon(1e-9));
    }
  }

  TEST_CASE("correlation matrix over features and label") {
    const auto d = data::generate_synthetic(300, 5);
    const auto m = correlation_matrix(d);
    REQUIRE(m.names.size() == 17);
    CHECK(m.names.back() == data::kLabelColumn);
    for (std::size_t i = 0; i < 17; ++i) {
      CHECK(m.values[i][i] == 1.0);
      for (std::size_t j = 0; j < 17; ++j) {
        if (m.values[i][j]) CHECK(*m.values[i][j] == doctest::Approx(*m.values[j][i]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("OLS recovers an exact line") {
    const std::vector<double> x = {0, 1, 2, 3, 4};
    std::vector<double> y;
    for (double v : x) y.push_back(2.0 * v + 1.0);
    const auto f = ols_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("OLS on unrelated noise has a small slope") {
    oracle::Gen g(6);
    const auto x = normals(g, 5000);
    const auto y = normals(g, 5000);
    CHECK(std::abs(ols_fit(x, y).slope) < 0.05);
  }

  TEST_CASE("property: OLS residuals are orthogonal to the regressor and sum to zero") {
    oracle::Gen g(7);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = static_cast<std::size_t>(g.integer(3, 80));
      const auto x = normals(g, n);
      auto y = normals(g, n);
      for (std::size_t i = 0; i < n; ++i) y[i] += g.uniform(-5, 5) * x[i];
      const auto f = ols_fit(x, y);
      double sum = 0.0, dot = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        sum += r;
        dot += r * x[i];
        scale += std::abs(y[i]) * (1.0 + std::abs(x[i]));
      }
      CHECK(std::abs(sum) <= 1e-10 * scale);
      CHECK(std::abs(dot) <= 1e-10 * scale);
    }
  }

  TEST_CASE("OLS errors") {
    CHECK(kind_of([] { ols_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}); }) ==
          ErrorKind::kConstantRegressor);
    CHECK(kind_of([] { ols_fit(std::vector<double>{1}, std::vector<double>{1}); }) == ErrorKind::kTooShort);
    CHECK(kind_of([] { ols_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}); }) ==
          ErrorKind::kLengthMismatch);
  }

  TEST_CASE("time series export round-trips values in row order") {
    const auto d = data::generate_synthetic(150, 8);
    const auto dir = scratch_dir("export");
    const auto paths = time_series_export(d, {"S5_CO2", data::kLabelColumn}, dir);
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].filename() == "series_S5_CO2.csv");
    std::ifstream in(paths[0]);
    std::string line;
    std::getline(in, line);
    CHECK(line == "row_index,value");
    const auto col = d.column("S5_CO2");
    std::size_t i = 0;
    while (std::getline(in, line)) {
      const auto comma = line.find(',');
      REQUIRE(i < col.size());
      CHECK(std::stoul(line.substr(0, comma)) == i);
      CHECK(std::strtod(line.c_str() + comma + 1, nullptr) == col[i]);
      ++i;
    }
    CHECK(i == col.size());
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("export rejects unknown columns before writing anything") {
    const auto d = data::generate_synthetic(150, 8);
    const auto dir = scratch_dir("unknown");
    CHECK(kind_of([&] { time_series_export(d, {"S5_CO2", "S9_CO2"}, dir); }) == ErrorKind::kUnknownColumn);
    CHECK_FALSE(std::filesystem::exists(dir / "series_S5_CO2.csv"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("report on the full dataset") {
    const auto d = data::generate_synthetic(500, 9);
    const auto r = run_eda(d);
    CHECK(r.stats.size() == 16);
    CHECK(r.stats[0].count == 500);
    CHECK(r.autocorr.size() >= 16);
    const auto csv = autocorr_csv(r.autocorr);
    CHECK(csv.rfind("feature,autocorrelation\n", 0) == 0);
    const auto stats = stats_csv(r.stats);
    CHECK(stats.find("count") != std::string::npos);
    const auto j = to_json(r);
    CHECK(j.contains("ols"));
  }
}
