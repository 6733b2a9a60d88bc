#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memeguard/dataset.hpp"
#include "memeguard/predictions.hpp"
#include "memeguard/tags.hpp"

namespace memeguard {

/// Seeded stand-in for the challenge data.
///
/// Non-hateful memes get pure N(0, 1) region features. Hateful memes get a
/// mean shift of `signal` on the first `signal_dims` feature columns of
/// every box, except a `hidden_fraction` of them whose image carries no
/// signal; those always contain a planted sensitive term instead. A
/// `tag_noise` share of non-hateful memes also contain a planted term.
struct SyntheticConfig {
  std::size_t n = 1000;
  std::uint64_t first_id = 0;
  double hateful_rate = 0.35;
  int n_boxes = 4;
  int region_dim = static_cast<int>(kRegionDim);
  int signal_dims = 64;
  double signal = 0.5;
  double hidden_fraction = 0.0;
  double tag_noise = 0.03;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  SplitSet split;
  FeatureBank bank;
};

SyntheticDataset generate_memes(const SyntheticConfig& cfg);

/// Contiguous slice [begin, end) of `split` relabeled as `name`.
SplitSet carve(const SplitSet& split, std::size_t begin, std::size_t end, SplitName name);

/// Placeholder lexicon of invented words, one line per `category<TAB>term`.
std::string synthetic_lexicon_text();

/// HateXplain-style side probabilities for a split: higher for hateful
/// memes, noisy, covering every `every`-th record only.
std::string synthetic_hatexplain_csv(const SplitSet& split, std::uint64_t seed, std::size_t every = 1);

/// Stand-in base-model probabilities for ensemble experiments. A meme's
/// score is label signal + shared noise + per-model noise, except that
/// hateful memes with a planted tag (flag racism or religion) look
/// non-hateful to every model.
struct BaseModelSim {
  double separation = 2.0;
  double shared_noise = 0.6;
  double model_noise = 0.8;
  double tag_rate_pos = 0.25;  // share of hateful memes with a planted tag
  double tag_rate_neg = 0.02;
  double hateful_rate = 0.35;
};

struct SimulatedStack {
  std::vector<std::uint64_t> ids;
  std::vector<int> labels;
  TagTable tags;
  std::vector<PredictionSet> models;
};

SimulatedStack simulate_base_models(std::size_t n, int n_models, const BaseModelSim& sim, std::uint64_t seed,
                                    std::uint64_t first_id = 0);

}  // namespace memeguard
