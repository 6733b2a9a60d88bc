#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "memeguard/ensemble.hpp"
#include "memeguard/fusion_model.hpp"
#include "memeguard/losses.hpp"
#include "memeguard/random_forest.hpp"
#include "memeguard/text_tagger.hpp"
#include "memeguard/trainer.hpp"

namespace memeguard {

inline constexpr std::string_view kVersion = "0.3.0";

/// Config problem, reported with the offending key path (e.g. "train.batch_size").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DemoConfig {
  std::size_t n_train = 800;
  std::size_t n_dev_seen = 100;
  std::size_t n_dev_unseen = 108;
  std::size_t dev_overlap = 80;
  std::size_t n_test = 400;
  int n_boxes = 4;
  int region_dim = static_cast<int>(kRegionDim);
  double signal = 0.4;
  double hidden_fraction = 0.35;
  int max_updates = 400;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::string preset;

  struct Data {
    std::vector<std::filesystem::path> splits;    // tag
    std::filesystem::path train, val;             // train
    std::vector<std::filesystem::path> predict;   // predict
    std::vector<std::filesystem::path> features;  // MFB1 banks, merged
    std::filesystem::path lexicon;
    std::filesystem::path hatexplain;
    std::filesystem::path tags;
    std::filesystem::path model;
    std::vector<std::filesystem::path> labels;  // analyze
  } data;

  ModelConfig model;
  TrainConfig train;
  LossSpec loss;
  TaggerOptions tagger;

  struct Ensemble {
    std::string method = "rf";  // majority | average | rf
    std::vector<std::filesystem::path> train_predictions;
    std::vector<std::filesystem::path> train_labels;
    std::vector<std::filesystem::path> predictions;
    double threshold = 0.5;
    bool tie_to_hateful = false;
    bool search = true;
    int folds = 5;
    int budget = 20;
    RFConfig rf;
    SearchSpace space;
  } ensemble;

  struct Evaluate {
    std::filesystem::path predictions;
    std::vector<std::filesystem::path> labels;
    double threshold = 0.5;
  } evaluate;

  DemoConfig demo;

  /// Derives every component seed from the global seed.
  void propagate_seed();
  nlohmann::json to_json() const;
};

/// Parses a config document; relative paths resolve against `base_dir`.
/// Unknown keys and type errors throw ConfigError naming the key path.
PipelineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::string> preset;
};

/// Applies flag overrides (they win over file values) and re-propagates the seed.
void apply_overrides(PipelineConfig& cfg, const Overrides& ov);

inline constexpr std::string_view kSubcommands[] = {"tag",      "train",    "predict", "ensemble",
                                                    "evaluate", "analyze", "demo"};

/// Runs one stage, writing artifacts atomically under cfg.output_dir with a
/// `<subcommand>.manifest.json` beside them. Progress goes to `log`.
/// Errors propagate as exceptions.
void run(std::string_view subcommand, const PipelineConfig& cfg, std::ostream& log);

}  // namespace memeguard
