#include "memeguard/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "memeguard/csv.hpp"
#include "memeguard/metrics.hpp"
#include "memeguard/rng.hpp"

namespace memeguard {

PredictionMatrix align_predictions(const std::vector<PredictionSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("ensemble needs at least one prediction set");
  PredictionMatrix pm;
  for (const auto& r : sets.front().rows) pm.ids.push_back(r.id);
  std::unordered_map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < pm.ids.size(); ++i) pos.emplace(pm.ids[i], i);

  const std::size_t m = sets.size();
  pm.probas.assign(pm.ids.size() * m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& s = sets[j];
    pm.model_names.push_back(s.model_name);
    if (s.rows.size() != pm.ids.size()) {
      throw std::invalid_argument("prediction set '" + s.model_name + "' has " + std::to_string(s.rows.size()) +
                                  " rows, expected " + std::to_string(pm.ids.size()));
    }
    std::vector<bool> filled(pm.ids.size(), false);
    for (const auto& r : s.rows) {
      auto it = pos.find(r.id);
      if (it == pos.end()) {
        throw std::invalid_argument("prediction set '" + s.model_name + "' has id " + std::to_string(r.id) +
                                    " missing from '" + sets.front().model_name + "'");
      }
      if (!(r.proba >= 0.0 && r.proba <= 1.0)) {
        throw std::invalid_argument("prediction set '" + s.model_name + "' has proba outside [0, 1]");
      }
      if (filled[it->second]) throw std::invalid_argument("duplicate id in '" + s.model_name + "'");
      filled[it->second] = true;
      pm.probas[it->second * m + j] = r.proba;
    }
  }
  return pm;
}

VoteResult majority_vote(const PredictionMatrix& pm, double threshold, bool tie_to_hateful) {
  if (pm.m() == 0) throw std::invalid_argument("majority_vote needs at least one model");
  VoteResult out;
  out.labels.reserve(pm.n());
  out.proba.reserve(pm.n());
  for (std::size_t i = 0; i < pm.n(); ++i) {
    std::size_t votes = 0;
    for (std::size_t j = 0; j < pm.m(); ++j) votes += pm.at(i, j) >= threshold;
    const std::size_t against = pm.m() - votes;
    const bool hateful = votes > against || (votes == against && tie_to_hateful);
    out.labels.push_back(hateful ? 1 : 0);
    out.proba.push_back(static_cast<double>(votes) / static_cast<double>(pm.m()));
  }
  return out;
}

std::vector<double> average_vote(const PredictionMatrix& pm) {
  if (pm.m() == 0) throw std::invalid_argument("average_vote needs at least one model");
  std::vector<double> out(pm.n());
  for (std::size_t i = 0; i < pm.n(); ++i) {
    // Running mean: exact when every model agrees.
    double mean = pm.at(i, 0);
    for (std::size_t j = 1; j < pm.m(); ++j) mean += (pm.at(i, j) - mean) / static_cast<double>(j + 1);
    out[i] = mean;
  }
  return out;
}

FeatureMatrix build_stack(const PredictionMatrix& pm, const TagTable& tags) {
  std::vector<std::size_t> model_order(pm.m());
  std::iota(model_order.begin(), model_order.end(), std::size_t{0});
  std::stable_sort(model_order.begin(), model_order.end(),
                   [&](std::size_t a, std::size_t b) { return pm.model_names[a] < pm.model_names[b]; });

  FeatureMatrix x;
  x.rows = pm.n();
  for (auto j : model_order) x.column_names.push_back("proba_" + pm.model_names[j]);
  for (auto name : kCategoryNames) x.column_names.emplace_back(name);
  x.column_names.emplace_back("hatexplain_present");
  x.column_names.emplace_back("hatexplain_value");
  x.cols = x.column_names.size();
  x.values.reserve(x.rows * x.cols);

  std::vector<std::uint64_t> missing;
  for (std::size_t i = 0; i < pm.n(); ++i) {
    const auto* t = tags.find(pm.ids[i]);
    if (!t) {
      missing.push_back(pm.ids[i]);
      continue;
    }
    for (auto j : model_order) x.values.push_back(pm.at(i, j));
    for (auto f : t->flags) x.values.push_back(f);
    x.values.push_back(t->hatexplain_proba ? 1.0 : 0.0);
    x.values.push_back(t->hatexplain_proba.value_or(0.5));
  }
  if (!missing.empty()) {
    std::string msg = "missing tag rows for " + std::to_string(missing.size()) + " id(s):";
    for (auto id : missing) msg += " " + std::to_string(id);
    throw std::invalid_argument(msg);
  }
  return x;
}

void SearchSpace::validate() const {
  auto check = [](std::pair<int, int> r, int floor, const char* name) {
    if (r.first < floor || r.second < r.first) {
      throw std::invalid_argument(std::string("invalid search range for ") + name);
    }
  };
  check(n_trees, 1, "n_trees");
  check(max_depth, 1, "max_depth");
  check(min_samples_leaf, 1, "min_samples_leaf");
}

std::vector<int> stratified_folds(std::span<const int> y, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("need at least 2 folds");
  Rng rng(seed);
  std::vector<int> fold(y.size(), 0);
  int next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == cls) members.push_back(i);
    }
    rng.shuffle(std::span(members));
    // Continue the round-robin where the previous class stopped so fold sizes stay balanced.
    for (auto i : members) {
      fold[i] = next;
      next = (next + 1) % n_folds;
    }
  }
  return fold;
}

SearchResult random_search_cv(const FeatureMatrix& x, std::span<const int> y, const SearchSpace& space,
                              int n_folds, int budget, std::uint64_t seed, const RFConfig& base) {
  space.validate();
  if (budget < 1) throw std::invalid_argument("search budget must be >= 1");
  if (y.size() != x.rows) throw std::invalid_argument("label count does not match rows");
  if (x.rows < static_cast<std::size_t>(n_folds)) throw std::invalid_argument("fewer rows than folds");

  SearchResult result;
  const auto n_pos = static_cast<int>(std::count(y.begin(), y.end(), 1));
  const int n_neg = static_cast<int>(y.size()) - n_pos;
  const int smallest = std::min(n_pos, n_neg);
  int folds = n_folds;
  if (smallest < folds) {
    folds = smallest;
    result.warnings.push_back("smallest class has " + std::to_string(smallest) + " members; using " +
                              std::to_string(folds) + " folds instead of " + std::to_string(n_folds));
  }
  if (folds < 2) throw std::invalid_argument("cannot build stratified folds: a class has fewer than 2 members");
  result.n_folds_used = folds;

  const auto fold_of = stratified_folds(y, folds, derive_seed(seed, 0xF01D));
  Rng sampler(derive_seed(seed, 0x5EA7C4));

  for (int c = 0; c < budget; ++c) {
    RFConfig cfg = base;
    cfg.n_trees = static_cast<int>(sampler.between(space.n_trees.first, space.n_trees.second));
    cfg.max_depth = static_cast<int>(sampler.between(space.max_depth.first, space.max_depth.second));
    cfg.min_samples_leaf =
        static_cast<int>(sampler.between(space.min_samples_leaf.first, space.min_samples_leaf.second));

    double auc_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < y.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
      std::vector<int> ytr, yte;
      for (auto i : tr) ytr.push_back(y[i]);
      for (auto i : te) yte.push_back(y[i]);
      const auto forest = rf_train(x.select_rows(tr), ytr, cfg);
      auc_sum += auroc(rf_predict(forest, x.select_rows(te)), yte);
    }
    result.table.push_back({c, cfg, auc_sum / folds});
  }

  const CvEntry* best = &result.table.front();
  for (const auto& e : result.table) {
    const bool better =
        e.mean_cv_auroc > best->mean_cv_auroc ||
        (e.mean_cv_auroc == best->mean_cv_auroc &&
         (e.config.n_trees < best->config.n_trees ||
          (e.config.n_trees == best->config.n_trees && e.config.max_depth < best->config.max_depth)));
    if (better) best = &e;
  }
  result.best = best->config;
  return result;
}

std::string cv_report_csv(const SearchResult& result) {
  std::string out = "config_id,n_trees,max_depth,min_samples_leaf,mean_cv_auroc\n";
  for (const auto& e : result.table) {
    out += std::to_string(e.config_id) + "," + std::to_string(e.config.n_trees) + "," +
           std::to_string(e.config.max_depth) + "," + std::to_string(e.config.min_samples_leaf) + "," +
           format_fixed(e.mean_cv_auroc, 6) + "\n";
  }
  return out;
}

}  // namespace memeguard
