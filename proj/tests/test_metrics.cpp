#include <doctest.h>

#include <cmath>

#include "memeguard/metrics.hpp"
#include "memeguard/predictions.hpp"
#include "memeguard/rng.hpp"
#include "support.hpp"

using namespace memeguard;

TEST_CASE("auroc examples") {
  CHECK(auroc(ScoredLabels{{0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}}) == 1.0);
  CHECK(auroc(ScoredLabels{{0.9, 0.8, 0.3, 0.2}, {1, 0, 1, 0}}) == 0.75);
  CHECK(auroc(ScoredLabels{{0.9, 0.8, 0.3, 0.2}, {1, 0, 0, 1}}) == 0.5);
  CHECK(auroc(ScoredLabels{{0.4, 0.4, 0.4}, {1, 0, 1}}) == 0.5);
  CHECK(auroc(ScoredLabels{{0.1, 0.9}, {1, 0}}) == 0.0);
  CHECK_THROWS_AS(auroc(ScoredLabels{{0.1, 0.9}, {1, 1}}), MetricError);
  CHECK_THROWS_AS(auroc(ScoredLabels{{}, {}}), MetricError);
  CHECK_THROWS_AS(auroc(ScoredLabels{{0.1, 0.2}, {1}}), MetricError);
  CHECK_THROWS_AS(auroc(ScoredLabels{{0.1, 0.2}, {1, 2}}), MetricError);
  CHECK_THROWS_AS(auroc(ScoredLabels{{0.1, NAN}, {1, 0}}), MetricError);
}

TEST_CASE("auroc oracle on random inputs with ties") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(300);
    const std::uint64_t levels = 1 + rng.below(trial % 2 ? 5 : 1000);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(rng.below(levels)) / double(levels);
      y[i] = int(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(auroc(s, y) == oracle::auroc_pairs(s, y).value());

    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(auroc(t, y) == auroc(s, y));

    std::vector<int> flipped(n);
    for (std::size_t i = 0; i < n; ++i) flipped[i] = 1 - y[i];
    CHECK(auroc(s, y) + auroc(s, flipped) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("accuracy") {
  CHECK(accuracy(ScoredLabels{{1.0, 0.0}, {1, 0}}) == 1.0);
  CHECK(accuracy(ScoredLabels{{0.4, 0.4}, {1, 1}}) == 0.0);
  CHECK(accuracy(ScoredLabels{{0.9, 0.6, 0.2, 0.7}, {1, 1, 0, 0}}) == 0.75);
  CHECK(accuracy(ScoredLabels{{0.5}, {1}}) == 1.0);
  CHECK(accuracy(ScoredLabels{{0.2, 0.3, 0.9, 0.1}, {1, 0, 0, 1}}, 0.0) == 0.5);
  const auto csv = metrics_report_csv(ScoredLabels{{0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}});
  CHECK(csv.rfind("metric,value\n", 0) == 0);
  CHECK(csv.find("auroc,1.0") != std::string::npos);
  CHECK(csv.find("acc,1.0") != std::string::npos);
}

TEST_CASE("prediction CSV") {
  const auto set = make_predictions("m", {4, 2, 9}, {0.25, 0.5, 0.123456789});
  CHECK(set.rows[0].label == 0);
  CHECK(set.rows[1].label == 1);
  const auto csv = predictions_to_csv(set);
  CHECK(csv == "id,proba,label\n4,0.25000000,0\n2,0.50000000,1\n9,0.12345679,0\n");
  const auto back = predictions_from_csv(parse_csv(csv, "p"), "m");
  REQUIRE(back.size() == 3);
  CHECK(back.rows[2].proba == 0.12345679);
  CHECK_THROWS(predictions_from_csv(parse_csv("id,proba,label\n1,1.2,1\n", "p"), "m"));
  CHECK_THROWS(predictions_from_csv(parse_csv("id,proba,label\n1,0.2,0\n1,0.3,0\n", "p"), "m"));
  CHECK_THROWS(predictions_from_csv(parse_csv("id,proba,label\nx,0.2,0\n", "p"), "m"));
  const auto no_label = predictions_from_csv(parse_csv("id,proba\n3,0.7\n", "p"), "m");
  CHECK_FALSE(no_label.rows[0].label.has_value());
}
