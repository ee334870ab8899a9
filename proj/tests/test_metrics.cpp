#include "doctest.h"
#include "occml/metrics.hpp"
#include "oracles.hpp"

using namespace occml;
using metrics::MaybeValue;

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

// Mean recall over present classes, computed from raw label lists.
double mean_recall(const Labels& t, const Labels& p, int c) {
  double sum = 0.0;
  int present = 0;
  for (int k = 0; k < c; ++k) {
    int pos = 0;
    int hit = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i] != k) continue;
      ++pos;
      hit += p[i] == k ? 1 : 0;
    }
    if (pos == 0) continue;
    sum += static_cast<double>(hit) / pos;
    ++present;
  }
  return sum / present;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("confusion matrix examples") {
    CHECK(metrics::confusion_matrix({0, 1}, {0, 1}, 2).counts == std::vector<std::vector<long>>{{1, 0}, {0, 1}});
    CHECK(metrics::confusion_matrix({0, 0, 1}, {1, 0, 1}, 2).counts == std::vector<std::vector<long>>{{1, 1}, {0, 1}});
    CHECK(kind_of([] { metrics::confusion_matrix({}, {}, 2); }) == ErrorKind::kEmptyInput);
    CHECK(kind_of([] { metrics::confusion_matrix({0, 1}, {0}, 2); }) == ErrorKind::kLengthMismatch);
    CHECK(kind_of([] { metrics::confusion_matrix({0, 2}, {0, 1}, 2); }) == ErrorKind::kLabelOutOfRange);
  }

  TEST_CASE("property: confusion counts match a direct count") {
    oracle::Gen g(1);
    for (int trial = 0; trial < 100; ++trial) {
      const int c = g.integer(2, 4);
      const int n = g.integer(1, 50);
      Labels t(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        t[static_cast<std::size_t>(i)] = g.integer(0, c - 1);
        p[static_cast<std::size_t>(i)] = g.integer(0, c - 1);
      }
      const auto cm = metrics::confusion_matrix(t, p, c);
      CHECK(cm.counts == oracle::confusion(t, p, c));
      CHECK(cm.total() == n);
    }
  }

  TEST_CASE("balanced accuracy: perfect, majority baseline, per-class value") {
    const Labels t = {0, 0, 0, 0, 1, 1, 2, 3, 3, 2};
    CHECK(metrics::balanced_accuracy(metrics::confusion_matrix(t, t, 4)).macro == 1.0);

    const Labels majority(t.size(), 0);
    const double expected = mean_recall(t, majority, 4);
    CHECK(expected == 0.25);
    CHECK(metrics::balanced_accuracy(metrics::confusion_matrix(t, majority, 4)).macro == 0.25);

    // Class 1: 5 positives with 4 found (recall 0.8); 5 negatives with 3
    // correctly rejected (specificity 0.6).
    const Labels t2 = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
    const Labels p2 = {1, 1, 1, 1, 0, 0, 0, 0, 1, 1};
    const auto ba = metrics::balanced_accuracy(metrics::confusion_matrix(t2, p2, 2));
    CHECK(*ba.per_class[1] == doctest::Approx(0.7).epsilon(1e-15));
  }

  TEST_CASE("property: macro balanced accuracy equals mean recall; constant predictors score 1/C") {
    oracle::Gen g(9);
    for (int trial = 0; trial < 200; ++trial) {
      const int c = 4;
      const int n = g.integer(4, 50);
      Labels t(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        t[static_cast<std::size_t>(i)] = i < c ? i : g.integer(0, c - 1);
        p[static_cast<std::size_t>(i)] = g.integer(0, c - 1);
      }
      CHECK(metrics::balanced_accuracy(metrics::confusion_matrix(t, p, c)).macro ==
            doctest::Approx(mean_recall(t, p, c)).epsilon(1e-12));
      const Labels constant(t.size(), g.integer(0, c - 1));
      CHECK(metrics::balanced_accuracy(metrics::confusion_matrix(t, constant, c)).macro == 0.25);
    }
  }

  TEST_CASE("F1 conventions and weighting") {
    // TP 9, FP 1, FN 1: precision = recall = 0.9.
    Labels t, p;
    for (int i = 0; i < 9; ++i) {
      t.push_back(1);
      p.push_back(1);
    }
    t.push_back(0), p.push_back(1);
    t.push_back(1), p.push_back(0);
    for (int i = 0; i < 5; ++i) t.push_back(0), p.push_back(0);
    const auto f1 = metrics::f1_scores(metrics::confusion_matrix(t, p, 2));
    CHECK(*f1.per_class[1] == doctest::Approx(0.9).epsilon(1e-15));

    // Class 1 never predicted: TP = 0 with FN > 0 gives F1 = 0.
    const auto zero = metrics::f1_scores(metrics::confusion_matrix({0, 1, 1}, {0, 0, 0}, 2));
    CHECK(*zero.per_class[1] == 0.0);
    // Class 2 absent everywhere: undefined.
    const auto absent = metrics::f1_scores(metrics::confusion_matrix({0, 1}, {0, 1}, 3));
    CHECK_FALSE(absent.per_class[2].has_value());

    CHECK(metrics::weighted_aggregate(std::vector<double>{0.5, 1.0}, {2, 6}) == 0.875);
  }

  TEST_CASE("weighted aggregate examples") {
    CHECK(metrics::weighted_aggregate(std::vector<double>{0.2, 0.4, 0.9}, {1, 1, 1}) == doctest::Approx(0.5));
    CHECK(metrics::weighted_aggregate(std::vector<double>{0.0, 1.0}, {1, 3}) == 0.75);
    CHECK(metrics::weighted_aggregate(std::vector<MaybeValue>{0.25, std::nullopt, 0.75}, {1, 100, 1}) == 0.5);
    CHECK(kind_of([] { metrics::weighted_aggregate(std::vector<MaybeValue>{std::nullopt, 1.0}, {1, 0}); }) ==
          ErrorKind::kZeroTotalWeight);
  }

  TEST_CASE("binary AUC examples") {
    CHECK(*metrics::binary_auc({0.9, 0.4, 0.6, 0.2}, {true, true, false, false}) == 0.75);
    CHECK(*metrics::binary_auc({0.9, 0.8, 0.1, 0.2}, {true, true, false, false}) == 1.0);
    CHECK(*metrics::binary_auc({0.3, 0.3, 0.3, 0.3}, {true, false, true, false}) == 0.5);
    CHECK_FALSE(metrics::binary_auc({0.3, 0.4}, {true, true}).has_value());
  }

  TEST_CASE("property: rank AUC equals pair counting, and is rank-invariant") {
    oracle::Gen g(31);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = g.integer(2, 50);
      std::vector<double> s(static_cast<std::size_t>(n));
      std::vector<bool> pos(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        // Coarse grid so ties are common.
        s[static_cast<std::size_t>(i)] = std::round(g.uniform(0, 10)) / 10.0;
        pos[static_cast<std::size_t>(i)] = g.u01() < 0.4;
      }
      const auto got = metrics::binary_auc(s, pos);
      const auto want = oracle::pair_auc(s, pos);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(std::abs(*got - *want) <= 1e-12);
      std::vector<double> transformed(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) transformed[i] = std::exp(3.0 * s[i]) - 7.0;
      CHECK(*metrics::binary_auc(transformed, pos) == doctest::Approx(*got).epsilon(1e-12));
      std::vector<double> rs(s.rbegin(), s.rend());
      std::vector<bool> rp(pos.rbegin(), pos.rend());
      CHECK(*metrics::binary_auc(rs, rp) == doctest::Approx(*got).epsilon(1e-12));
    }
  }

  TEST_CASE("property: weighted OvR AUC equals the support-weighted pair-counting oracle and lies within class range") {
    oracle::Gen g(77);
    for (int trial = 0; trial < 200; ++trial) {
      const int c = g.integer(2, 4);
      const int n = g.integer(c, 50);
      Matrix scores(n, c);
      Labels y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] = i < c ? i : g.integer(0, c - 1);
        for (int k = 0; k < c; ++k) scores(i, k) = std::round(g.uniform(0, 20)) / 20.0;
      }
      const auto auc = metrics::auc_ovr(scores, y);
      std::vector<std::optional<double>> per;
      std::vector<double> w;
      for (int k = 0; k < c; ++k) {
        std::vector<double> col(static_cast<std::size_t>(n));
        std::vector<bool> pos(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          col[static_cast<std::size_t>(i)] = scores(i, k);
          pos[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] == k;
        }
        per.push_back(oracle::pair_auc(col, pos));
        w.push_back(static_cast<double>(std::count(y.begin(), y.end(), k)));
      }
      const auto want = oracle::weighted(per, w);
      REQUIRE(auc.weighted.has_value() == want.has_value());
      if (!want) continue;
      CHECK(std::abs(*auc.weighted - *want) <= 1e-12);
      double lo = 1.0, hi = 0.0;
      for (const auto& v : per) {
        if (!v) continue;
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
      }
      CHECK(*auc.weighted >= lo - 1e-12);
      CHECK(*auc.weighted <= hi + 1e-12);
    }
  }

  TEST_CASE("perfect predictions score one on every metric") {
    const Labels y = {0, 1, 2, 3, 0, 1, 2, 3, 3};
    Matrix scores = Matrix::Zero(9, 4);
    for (int i = 0; i < 9; ++i) scores(i, y[static_cast<std::size_t>(i)]) = 1.0;
    const auto r = metrics::evaluate(scores, y, 4);
    CHECK(*r.weighted_f1 == 1.0);
    CHECK(*r.weighted_auc == 1.0);
    CHECK(*r.balanced_accuracy_macro == 1.0);
    for (const auto& c : r.per_class) {
      CHECK(*c.f1 == 1.0);
      CHECK(*c.auc == 1.0);
      CHECK(*c.balanced_accuracy == 1.0);
    }
  }

  TEST_CASE("constant predictor: AUC undefined, balanced accuracy 1/C") {
    const Labels y = {0, 0, 0, 1, 2, 3, 0, 0};
    Matrix scores = Matrix::Zero(8, 4);
    scores.col(0).setOnes();
    const auto r = metrics::evaluate(scores, y, 4);
    CHECK_FALSE(r.weighted_auc.has_value());
    CHECK(*r.balanced_accuracy_macro == 0.25);
    CHECK(r.weighted_f1.has_value());
  }

  TEST_CASE("absent classes and non-finite scores") {
    Matrix scores(3, 3);
    scores << 0.6, 0.3, 0.1, 0.2, 0.7, 0.1, 0.5, 0.4, 0.1;
    const auto auc = metrics::auc_ovr(scores, {0, 1, 0});
    CHECK_FALSE(auc.per_class[2].has_value());
    CHECK_FALSE(auc.warnings.empty());
    scores(1, 1) = std::nan("");
    CHECK(kind_of([&] { metrics::auc_ovr(scores, {0, 1, 0}); }) == ErrorKind::kNonFiniteScore);
    CHECK(kind_of([] { metrics::balanced_accuracy(metrics::ConfusionMatrix{{{0, 0}, {0, 0}}}); }) ==
          ErrorKind::kAllClassesAbsent);
  }

  TEST_CASE("results table layout") {
    std::vector<metrics::TableRow> rows = {
        {"rf", 0.99852, 0.99996, 0.99490},
        {"benchmark", 0.5, std::nullopt, 0.25},
        {"logistic", 0.98177, 0.99900, 0.97000},
    };
    const std::string expected =
        "model,weighted_f1,weighted_auc,balanced_accuracy,best\n"
        "benchmark,500.00,N/A,250.00,\n"
        "logistic,981.77,999.00,970.00,\n"
        "rf,998.52,999.96,994.90,weighted_f1;weighted_auc;balanced_accuracy\n";
    CHECK(metrics::results_table_csv(rows) == expected);
  }
}
