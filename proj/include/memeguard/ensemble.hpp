#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "memeguard/predictions.hpp"
#include "memeguard/random_forest.hpp"
#include "memeguard/tags.hpp"

namespace memeguard {

/// Base-model probabilities aligned on one id list: n ids x m models.
struct PredictionMatrix {
  std::vector<std::uint64_t> ids;
  std::vector<std::string> model_names;
  std::vector<double> probas;  // row-major n x m

  std::size_t n() const { return ids.size(); }
  std::size_t m() const { return model_names.size(); }
  double at(std::size_t i, std::size_t j) const { return probas[i * m() + j]; }
};

/// Aligns every set on the first set's id order. Throws when the id sets
/// differ or a probability is outside [0, 1].
PredictionMatrix align_predictions(const std::vector<PredictionSet>& sets);

struct VoteResult {
  std::vector<int> labels;
  std::vector<double> proba;  // fraction of models voting hateful
};

/// Each model votes (proba >= threshold); the majority label wins and a
/// tie goes to non-hateful unless `tie_to_hateful` is set.
VoteResult majority_vote(const PredictionMatrix& pm, double threshold = 0.5, bool tie_to_hateful = false);

std::vector<double> average_vote(const PredictionMatrix& pm);

/// Stacking features: model probabilities (models sorted by name), the
/// seven tag flags, hatexplain_present, hatexplain_value (0.5 if absent).
/// Throws listing every id without a tag row.
FeatureMatrix build_stack(const PredictionMatrix& pm, const TagTable& tags);

struct SearchSpace {
  std::pair<int, int> n_trees{50, 400};
  std::pair<int, int> max_depth{2, 12};
  std::pair<int, int> min_samples_leaf{1, 8};

  void validate() const;
};

/// Fold index per example. Each class is shuffled and dealt round-robin,
/// so per-fold class counts differ from the global ratio by at most one.
std::vector<int> stratified_folds(std::span<const int> y, int n_folds, std::uint64_t seed);

struct CvEntry {
  int config_id = 0;
  RFConfig config;
  double mean_cv_auroc = 0.0;
};

struct SearchResult {
  RFConfig best;
  std::vector<CvEntry> table;
  int n_folds_used = 0;
  std::vector<std::string> warnings;
};

/// Samples `budget` configs uniformly from `space` (other fields copied
/// from `base`), scores each by mean out-of-fold AUROC over stratified
/// folds, and returns the best; ties prefer fewer trees, then shallower.
/// When a class has fewer than n_folds members the fold count drops to
/// that size with a warning.
SearchResult random_search_cv(const FeatureMatrix& x, std::span<const int> y, const SearchSpace& space,
                              int n_folds, int budget, std::uint64_t seed, const RFConfig& base = {});

/// `config_id,n_trees,max_depth,min_samples_leaf,mean_cv_auroc`.
std::string cv_report_csv(const SearchResult& result);

}  // namespace memeguard
