#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "memeguard/ensemble.hpp"
#include "memeguard/metrics.hpp"
#include "memeguard/rng.hpp"
#include "support.hpp"

using namespace memeguard;

namespace {

PredictionMatrix matrix(const std::vector<std::vector<double>>& cols) {
  std::vector<PredictionSet> sets;
  std::vector<std::uint64_t> ids(cols.front().size());
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  for (std::size_t j = 0; j < cols.size(); ++j) sets.push_back(make_predictions("m" + std::to_string(j), ids, cols[j]));
  return align_predictions(sets);
}

FeatureMatrix random_features(Rng& rng, std::size_t rows, std::size_t cols, int levels) {
  FeatureMatrix x;
  x.rows = rows;
  x.cols = cols;
  for (std::size_t c = 0; c < cols; ++c) x.column_names.push_back("f" + std::to_string(c));
  for (std::size_t i = 0; i < rows * cols; ++i) x.values.push_back(double(rng.below(std::uint64_t(levels))) / levels);
  return x;
}

}  // namespace

TEST_CASE("majority vote") {
  const auto pm = matrix({{0.9, 0.1}, {0.6, 0.2}, {0.1, 0.7}});
  const auto v = majority_vote(pm);
  CHECK(v.labels == std::vector<int>{1, 0});
  CHECK(v.proba[0] == doctest::Approx(2.0 / 3.0));

  const auto tie = matrix({{0.9}, {0.1}});
  CHECK(majority_vote(tie).labels[0] == 0);
  CHECK(majority_vote(tie).proba[0] == 0.5);
  CHECK(majority_vote(tie, 0.5, true).labels[0] == 1);

  const auto single = matrix({{0.2, 0.5, 0.8}});
  CHECK(majority_vote(single).labels == std::vector<int>{0, 1, 1});

  const auto agree = matrix({{0.9, 0.1, 0.7}, {0.8, 0.2, 0.6}, {0.7, 0.3, 0.9}});
  CHECK(majority_vote(agree).labels == std::vector<int>{1, 0, 1});
}

TEST_CASE("average vote") {
  CHECK(average_vote(matrix({{0.2}, {0.4}, {0.9}}))[0] == doctest::Approx(0.5));
  const std::vector<double> col{0.3, 0.6, 0.1};
  CHECK(average_vote(matrix({col, col, col})) == col);
  CHECK(average_vote(matrix({col})) == col);
  const std::vector<int> y{0, 1, 1};
  CHECK(auroc(average_vote(matrix({col, col})), y) == auroc(col, y));
}

TEST_CASE("alignment") {
  auto a = make_predictions("a", {3, 1, 2}, {0.1, 0.2, 0.3});
  auto b = make_predictions("b", {1, 2, 3}, {0.5, 0.6, 0.7});
  const auto pm = align_predictions({a, b});
  CHECK(pm.ids == std::vector<std::uint64_t>{3, 1, 2});
  CHECK(pm.at(0, 1) == 0.7);
  auto c = make_predictions("c", {1, 2}, {0.5, 0.6});
  CHECK_THROWS(align_predictions({a, c}));
}

TEST_CASE("stack features") {
  const auto pm = align_predictions({make_predictions("zeta", {1, 2}, {0.1, 0.2}),
                                     make_predictions("alpha", {1, 2}, {0.8, 0.9})});
  TagTable tags;
  TagVector t1;
  t1.set(Category::profanity);
  t1.hatexplain_proba = 0.3;
  tags.insert(1, t1);
  tags.insert(2, TagVector{});
  const auto x = build_stack(pm, tags);
  CHECK(x.cols == 11);
  CHECK(x.column_names.front() == "proba_alpha");
  CHECK(x.column_names[1] == "proba_zeta");
  CHECK(x.at(0, 0) == 0.8);
  CHECK(x.at(0, 8) == 1.0);
  CHECK(x.at(0, 9) == 1.0);
  CHECK(x.at(0, 10) == 0.3);
  CHECK(x.at(1, 9) == 0.0);
  CHECK(x.at(1, 10) == 0.5);

  TagTable partial;
  partial.insert(1, TagVector{});
  try {
    build_stack(pm, partial);
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
}

TEST_CASE("weighted gini") {
  CHECK(weighted_gini(5, 0) == 0.0);
  CHECK(weighted_gini(2, 2) == doctest::Approx(2.0));
  CHECK(weighted_gini(1, 3) == doctest::Approx(4 * oracle::gini_index(1, 3)));
}

TEST_CASE("forest basics") {
  Rng rng(5);
  auto x = random_features(rng, 40, 3, 10);
  std::vector<int> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = x.at(i, 1) > 0.45 ? 1 : 0;

  RFConfig cfg;
  cfg.n_trees = 1;
  cfg.bootstrap = false;
  cfg.features_per_split = 3;
  cfg.max_depth = 1;
  const auto stump = rf_train(x, y, cfg);
  REQUIRE(stump.trees.size() == 1);
  const auto& root = stump.trees[0].nodes[0];
  CHECK(root.feature == 1);
  CHECK(root.threshold == doctest::Approx(0.45));
  const auto p = rf_predict(stump, x);
  for (std::size_t i = 0; i < 40; ++i) CHECK(p[i] == double(y[i]));

  SUBCASE("determinism and serialization") {
    RFConfig c2;
    c2.n_trees = 15;
    c2.seed = 3;
    const auto f1 = rf_train(x, y, c2);
    const auto f2 = rf_train(x, y, c2);
    CHECK(f1 == f2);
    CHECK(decode_forest(encode_forest(f1)) == f1);
    CHECK(encode_forest(decode_forest(encode_forest(f1))) == encode_forest(f1));
    for (double v : rf_predict(f1, x)) CHECK((v >= 0.0 && v <= 1.0));
    auto bad = encode_forest(f1);
    bad.pop_back();
    CHECK_THROWS(decode_forest(bad));
  }
  SUBCASE("leaf sizes respect min_samples_leaf") {
    RFConfig c3;
    c3.n_trees = 5;
    c3.min_samples_leaf = 4;
    c3.bootstrap = false;
    const auto f = rf_train(x, y, c3);
    for (const auto& t : f.trees) {
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) CHECK(n.count0 + n.count1 >= 4);
        if (!n.is_leaf()) CHECK(std::size_t(n.feature) < x.cols);
      }
    }
  }
  SUBCASE("prior-only trees") {
    std::vector<int> noisy(40);
    for (std::size_t i = 0; i < 40; ++i) noisy[i] = i < 10;
    FeatureMatrix constant = x;
    std::fill(constant.values.begin(), constant.values.end(), 1.0);
    const auto f = rf_train(constant, noisy, RFConfig{.n_trees = 3, .bootstrap = false});
    for (double v : rf_predict(f, constant)) CHECK(v == 0.25);
  }
  SUBCASE("errors") {
    std::vector<int> ones(40, 1);
    CHECK_THROWS(rf_train(x, ones, cfg));
    CHECK_THROWS(rf_train(FeatureMatrix{}, {}, cfg));
    auto other = x;
    other.column_names[0] = "renamed";
    CHECK_THROWS(rf_predict(stump, other));
  }
}

TEST_CASE("hand-traced single split") {
  FeatureMatrix x;
  x.rows = 6;
  x.cols = 1;
  x.column_names = {"v"};
  x.values = {0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  const std::vector<int> y{0, 0, 1, 1, 1, 0};
  const auto f = rf_train(x, y, RFConfig{.n_trees = 1, .max_depth = 1, .bootstrap = false});
  const auto& root = f.trees[0].nodes[0];
  // left {0,0}: gini 0; right {1,1,1,0}: 4 * (1 - 9/16 - 1/16) = 1.5; best among all thresholds.
  CHECK(root.threshold == doctest::Approx(0.25));
  FeatureMatrix q = x;
  q.rows = 2;
  q.values = {0.0, 1.0};
  const auto p = rf_predict(f, q);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == 0.75);
}

TEST_CASE("gini splits match exhaustive enumeration") {
  Rng rng(404);
  int mismatches = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    const std::size_t cols = 1 + rng.below(4);
    const auto x = random_features(rng, n, cols, trial % 2 ? 4 : 50);
    std::vector<int> y(n);
    for (auto& v : y) v = int(rng.below(2));
    y[0] = 0;
    y[1] = 1;
    RFConfig cfg{.n_trees = 1, .max_depth = 64, .features_per_split = int(cols), .bootstrap = false};
    const auto f = rf_train(x, y, cfg);
    oracle::check_tree(f.trees[0], 0, x, y, 1, mismatches);
  }
  CHECK(mismatches == 0);
}

TEST_CASE("more trees reduce spread") {
  Rng rng(6);
  const auto x = random_features(rng, 80, 4, 20);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < 80; ++i) y[i] = (x.at(i, 0) + 0.3 * rng.uniform()) > 0.6;
  const auto f = rf_train(x, y, RFConfig{.n_trees = 256, .seed = 1});
  auto spread = [&](std::size_t group) {
    double var = 0;
    const std::size_t groups = f.trees.size() / group;
    for (std::size_t r = 0; r < x.rows; ++r) {
      std::vector<double> means;
      for (std::size_t g = 0; g < groups; ++g) {
        double m = 0;
        for (std::size_t t = g * group; t < (g + 1) * group; ++t) m += f.trees[t].predict(x.row(r));
        means.push_back(m / double(group));
      }
      const double mu = std::accumulate(means.begin(), means.end(), 0.0) / double(groups);
      for (double m : means) var += (m - mu) * (m - mu) / double(groups);
    }
    return var;
  };
  CHECK(spread(64) < spread(4));
}

TEST_CASE("stratified folds") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 10 + rng.below(200);
    std::vector<int> y(n);
    for (auto& v : y) v = rng.uniform() < 0.3;
    const int k = 2 + int(rng.below(5));
    const auto folds = stratified_folds(y, k, rng.next());
    const double pos = double(std::count(y.begin(), y.end(), 1));
    std::vector<int> size(std::size_t(k), 0), fold_pos(std::size_t(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      size[std::size_t(folds[i])]++;
      fold_pos[std::size_t(folds[i])] += y[i];
    }
    for (int f = 0; f < k; ++f) {
      const double expected_pos = pos * size[std::size_t(f)] / double(n);
      CHECK(std::abs(fold_pos[std::size_t(f)] - expected_pos) <= 1.0);
    }
  }
  const std::vector<int> y{0, 1, 0, 1, 0, 0};
  CHECK(stratified_folds(y, 2, 7) == stratified_folds(y, 2, 7));
}

TEST_CASE("random search") {
  Rng rng(9);
  const auto x = random_features(rng, 60, 3, 20);
  std::vector<int> y(60);
  for (std::size_t i = 0; i < 60; ++i) y[i] = x.at(i, 2) > 0.5;

  const SearchSpace small{{10, 30}, {2, 4}, {1, 3}};
  const auto a = random_search_cv(x, y, small, 3, 4, 77);
  const auto b = random_search_cv(x, y, small, 3, 4, 77);
  CHECK(a.best == b.best);
  REQUIRE(a.table.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.table[i].config == b.table[i].config);
  for (const auto& e : a.table) {
    CHECK((e.config.n_trees >= 10 && e.config.n_trees <= 30));
    CHECK((e.config.max_depth >= 2 && e.config.max_depth <= 4));
    CHECK(e.mean_cv_auroc > 0.8);
  }

  const auto one = random_search_cv(x, y, small, 3, 1, 5);
  CHECK(one.best == one.table[0].config);

  const SearchSpace point{{20, 20}, {3, 3}, {2, 2}};
  const auto p = random_search_cv(x, y, point, 3, 5, 5);
  CHECK(p.best.n_trees == 20);
  CHECK(p.best.max_depth == 3);
  CHECK(p.best.min_samples_leaf == 2);

  std::vector<int> rare(60, 0);
  rare[3] = rare[40] = 1;
  const auto r = random_search_cv(x, rare, small, 5, 1, 5);
  CHECK(r.n_folds_used == 2);
  CHECK_FALSE(r.warnings.empty());

  CHECK(cv_report_csv(a).rfind("config_id,n_trees,max_depth,min_samples_leaf,mean_cv_auroc\n", 0) == 0);
  CHECK_THROWS(random_search_cv(x, y, small, 3, 0, 5));
  CHECK_THROWS(SearchSpace{{5, 2}, {1, 2}, {1, 1}}.validate());
}

TEST_CASE("merged dev set gives a 640-row stack") {
  const auto merged = merge_dedup(fixtures::id_split(0, 500), fixtures::id_split(100, 540));
  std::vector<double> p(merged.size(), 0.5);
  const auto pm = align_predictions({make_predictions("m", merged.ids(), p)});
  TagTable tags;
  for (auto id : merged.ids()) tags.insert(id, TagVector{});
  CHECK(build_stack(pm, tags).rows == 640);
}
