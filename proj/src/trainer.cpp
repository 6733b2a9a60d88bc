#include "memeguard/trainer.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "memeguard/metrics.hpp"

namespace memeguard {

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("invalid train config: " + what);
  };
  need(learning_rate > 0.0, "learning_rate must be > 0");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(eval_every >= 1, "eval_every must be >= 1");
  need(max_updates >= eval_every, "max_updates must be >= eval_every");
  need(warmup_fraction >= 0.0 && warmup_fraction <= 1.0, "warmup_fraction must be in [0, 1]");
  need(weight_decay >= 0.0, "weight_decay must be >= 0");
}

double lr_at(int step, const TrainConfig& cfg) {
  const double total = cfg.max_updates;
  const double warm = cfg.warmup_fraction * total;
  const double s = step;
  if (s < warm) return cfg.learning_rate * 0.5 * (1.0 - std::cos(std::numbers::pi * s / warm));
  if (total <= warm) return cfg.learning_rate;
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * (s - warm) / (total - warm)));
}

void apply_preset(std::string_view name, std::size_t n_train, ModelConfig& model, TrainConfig& train) {
  if (name == "visualbert") {
    train.learning_rate = 5e-5;
    train.batch_size = 32;
    train.max_updates = 3000;
    train.eval_every = 50;
  } else if (name == "uniter-appendix") {
    constexpr int kEpochs = 5;
    train.learning_rate = 1e-5;
    train.batch_size = 8;
    model.dropout_rate = 0.1;
    const auto per_epoch = static_cast<int>((n_train + 7) / 8);
    train.max_updates = std::max(kEpochs * per_epoch, 1);
    train.eval_every = std::min(train.eval_every, train.max_updates);
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  train.preset_name = std::string(name);
}

namespace {

void require_labels(std::span<const Example> set, const char* which) {
  if (set.empty()) throw std::invalid_argument(std::string(which) + " split is empty");
  for (const auto& ex : set) {
    if (!ex.record.label) {
      throw std::invalid_argument(std::string(which) + " example " + std::to_string(ex.record.id) +
                                  " is unlabeled");
    }
  }
}

struct Evaluation {
  double auroc;
  double acc;
};

Evaluation evaluate(const FusionModel& model, std::span<const Example> val) {
  std::vector<double> scores = predict_probas(model, val);
  std::vector<int> labels;
  labels.reserve(val.size());
  for (const auto& ex : val) labels.push_back(*ex.record.label);
  return {auroc(scores, labels), accuracy(scores, labels)};
}

class AdamW {
 public:
  AdamW(const FusionModel& model, const TrainConfig& cfg)
      : cfg_(cfg), m_(model.zeros_like()), v_(model.zeros_like()) {
    for (std::size_t i = 0; i < m_.size(); ++i) decays_.push_back(FusionModel::decays(model.config(), i));
  }

  void step(ParamList& params, const ParamList& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& m = m_[i];
      auto& v = v_[i];
      m = cfg_.adam_beta1 * m + (1.0 - cfg_.adam_beta1) * grads[i];
      v = cfg_.adam_beta2 * v + (1.0 - cfg_.adam_beta2) * grads[i].cwiseProduct(grads[i]);
      if (decays_[i] && cfg_.weight_decay > 0.0) params[i] *= 1.0 - lr * cfg_.weight_decay;
      params[i].array() -=
          lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.adam_epsilon);
    }
  }

 private:
  const TrainConfig& cfg_;
  ParamList m_, v_;
  std::vector<bool> decays_;
  int t_ = 0;
};

}  // namespace

TrainedModel train(std::span<const Example> train_set, std::span<const Example> val_set,
                   const ModelConfig& model_cfg, const TrainConfig& train_cfg, const LossSpec& loss) {
  model_cfg.validate();
  train_cfg.validate();
  loss.validate();
  require_labels(train_set, "train");
  require_labels(val_set, "validation");

  std::vector<EncodedInput> encoded;
  encoded.reserve(train_set.size());
  for (const auto& ex : train_set) encoded.push_back(encode(ex, model_cfg));

  FusionModel model(model_cfg);
  AdamW opt(model, train_cfg);
  Rng shuffle_rng(derive_seed(train_cfg.seed, 1));
  Rng dropout_rng(derive_seed(train_cfg.seed, 2));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle_rng.shuffle(std::span(order));
  std::size_t cursor = 0;

  const auto batch = std::min<std::size_t>(static_cast<std::size_t>(train_cfg.batch_size), train_set.size());
  ParamList grads = model.zeros_like();

  TrainedModel result{model, -1.0, 0, {}};
  double loss_sum = 0.0;
  int loss_batches = 0;

  for (int step = 1; step <= train_cfg.max_updates; ++step) {
    for (auto& g : grads) g.setZero();
    double batch_loss_sum = 0.0;
    const double weight = 1.0 / static_cast<double>(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        shuffle_rng.shuffle(std::span(order));
        cursor = 0;
      }
      const auto idx = order[cursor++];
      batch_loss_sum += model.accumulate_gradients(encoded[idx], *train_set[idx].record.label, loss,
                                                   weight, grads, &dropout_rng);
    }
    const double lr = lr_at(step, train_cfg);
    opt.step(model.params(), grads, lr);
    loss_sum += batch_loss_sum / static_cast<double>(batch);
    ++loss_batches;

    if (step % train_cfg.eval_every == 0 || step == train_cfg.max_updates) {
      const auto ev = evaluate(model, val_set);
      result.history.push_back({step, loss_sum / loss_batches, ev.auroc, ev.acc, lr});
      loss_sum = 0.0;
      loss_batches = 0;
      if (ev.auroc > result.best_val_auroc) {
        result.best_val_auroc = ev.auroc;
        result.best_step = step;
        result.best = model;
      }
    }
  }
  return result;
}

std::string history_to_csv(const std::vector<HistoryEntry>& history) {
  std::string out = "step,train_loss,val_auroc,val_acc,lr\n";
  for (const auto& h : history) {
    out += std::to_string(h.step) + "," + format_fixed(h.train_loss, 8) + "," + format_fixed(h.val_auroc, 8) +
           "," + format_fixed(h.val_acc, 8) + "," + format_sci(h.lr, 6) + "\n";
  }
  return out;
}

std::vector<double> predict_probas(const FusionModel& model, std::span<const Example> examples) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(model.predict_proba(encode(ex, model.config())));
  return out;
}

PredictionSet predict(const FusionModel& model, std::span<const Example> examples, std::string model_name) {
  std::vector<std::uint64_t> ids;
  ids.reserve(examples.size());
  for (const auto& ex : examples) ids.push_back(ex.record.id);
  return make_predictions(std::move(model_name), ids, predict_probas(model, examples));
}

}  // namespace memeguard
