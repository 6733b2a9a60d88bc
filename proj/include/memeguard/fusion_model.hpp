#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "memeguard/dataset.hpp"
#include "memeguard/losses.hpp"
#include "memeguard/rng.hpp"

namespace memeguard {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelConfig {
  int vocab_size = 4096;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 128;
  int max_text_len = 32;
  int max_boxes = static_cast<int>(kMaxBoxes);
  int region_dim = static_cast<int>(kRegionDim);
  double dropout_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Token id 0 is the leading classification slot; id 1 stands in for text
/// that normalizes to nothing. Every other token hashes into [2, vocab).
inline constexpr int kClsToken = 0;
inline constexpr int kUnknownToken = 1;

std::vector<int> encode_text(std::string_view text, const ModelConfig& cfg);

/// Model-ready view of one meme.
struct EncodedInput {
  std::vector<int> tokens;  // without the classification slot
  Mat regions;              // n_boxes x region_dim
};

/// Throws std::invalid_argument on region_dim mismatch or too many boxes.
EncodedInput encode(const Example& example, const ModelConfig& cfg);

/// Gradient buffers with the same layout as FusionModel::params().
using ParamList = std::vector<Mat>;

/// Single-stream fusion classifier.
///
/// Sequence layout: [CLS] + text tokens + projected regions. Text rows get
/// token, segment-0 and positional embeddings; region rows get the affine
/// projection of their region vector plus segment-1 and no positional
/// term, so the output is invariant to box order. After an embedding
/// LayerNorm the sequence passes through post-LN encoder blocks
/// (multi-head self-attention, GELU feed-forward) and the final [CLS]
/// row feeds a linear head producing two logits.
///
/// Parameter order (also the checkpoint order):
///   token_emb, segment_emb, position_emb, emb_ln_gain, emb_ln_bias,
///   region_proj_w, region_proj_b,
///   per layer: wq bq wk bk wv bv wo bo ln1_gain ln1_bias w1 b1 w2 b2 ln2_gain ln2_bias,
///   head_w, head_b.
class FusionModel {
 public:
  explicit FusionModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParamList& params() { return params_; }
  const ParamList& params() const { return params_; }
  std::size_t parameter_count() const;
  static std::vector<std::string> parameter_names(const ModelConfig& cfg);
  /// True for tensors subject to weight decay (everything but biases and norms).
  static bool decays(const ModelConfig& cfg, std::size_t index);

  void zero_head();

  std::array<double, 2> logits(const EncodedInput& input) const;
  /// Both class probabilities; they sum to 1.
  std::array<double, 2> class_probabilities(const EncodedInput& input) const;
  /// Probability of the hateful class.
  double predict_proba(const EncodedInput& input) const;

  /// Adds weight * dLoss/dparams for one example into `grads` and returns the
  /// example's loss. Dropout is active only when `dropout_rng` is non-null.
  double accumulate_gradients(const EncodedInput& input, int label, const LossSpec& spec,
                              double weight, ParamList& grads, Rng* dropout_rng) const;

  ParamList zeros_like() const;

 private:
  ModelConfig cfg_;
  ParamList params_;
};

// FMC1 checkpoint (little-endian):
//   "FMC1" | u32 version=1 | u32 vocab_size d_model n_layers n_heads d_ff
//   max_text_len max_boxes region_dim | f64 dropout_rate | u64 seed |
//   u64 parameter_count | parameter_count f32 in FusionModel parameter order,
//   each tensor row-major.
std::vector<std::byte> encode_checkpoint(const FusionModel& model);
FusionModel decode_checkpoint(std::span<const std::byte> bytes);
void save_checkpoint(const FusionModel& model, const std::filesystem::path& path);
FusionModel load_checkpoint(const std::filesystem::path& path);

}  // namespace memeguard
