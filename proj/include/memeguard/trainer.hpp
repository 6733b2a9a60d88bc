#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memeguard/dataset.hpp"
#include "memeguard/fusion_model.hpp"
#include "memeguard/losses.hpp"
#include "memeguard/predictions.hpp"

namespace memeguard {

struct TrainConfig {
  double learning_rate = 5e-5;
  int batch_size = 32;
  int max_updates = 3000;
  int eval_every = 50;
  double warmup_fraction = 0.1;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::string preset_name;

  void validate() const;
};

/// Cosine-shaped warmup to the peak over the first
/// warmup_fraction * max_updates steps, then cosine decay to zero at
/// max_updates.
double lr_at(int step, const TrainConfig& cfg);

/// Known presets: "visualbert" (5e-5, batch 32, 3000 updates, eval every
/// 50) and "uniter-appendix" (5 epochs, batch 8, 1e-5, dropout 0.1; the
/// epoch count becomes updates using `n_train`). Unknown names throw.
void apply_preset(std::string_view name, std::size_t n_train, ModelConfig& model, TrainConfig& train);

struct HistoryEntry {
  int step = 0;
  double train_loss = 0.0;  // mean batch loss since the previous evaluation
  double val_auroc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct TrainedModel {
  FusionModel best;
  double best_val_auroc = 0.0;
  int best_step = 0;
  std::vector<HistoryEntry> history;
};

/// AdamW fine-tuning with evaluation every eval_every updates (and at the
/// final update); parameters are snapshotted whenever validation AUROC
/// improves. Deterministic given the model and train seeds.
TrainedModel train(std::span<const Example> train_set, std::span<const Example> val_set,
                   const ModelConfig& model_cfg, const TrainConfig& train_cfg, const LossSpec& loss);

/// `step,train_loss,val_auroc,val_acc,lr`.
std::string history_to_csv(const std::vector<HistoryEntry>& history);

std::vector<double> predict_probas(const FusionModel& model, std::span<const Example> examples);
PredictionSet predict(const FusionModel& model, std::span<const Example> examples,
                      std::string model_name = "fusion");

}  // namespace memeguard
