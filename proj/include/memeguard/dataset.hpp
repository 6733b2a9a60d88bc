#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memeguard/tags.hpp"

namespace memeguard {

/// Raised for invalid dataset input (bad JSONL, duplicate ids, missing features).
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MemeRecord {
  std::uint64_t id = 0;
  std::string img;
  std::string text;
  std::optional<int> label;  // 1 = hateful

  friend bool operator==(const MemeRecord&, const MemeRecord&) = default;
};

enum class SplitName { train, dev_seen, dev_unseen, test_seen, test_unseen, custom };

std::string_view to_string(SplitName name);
/// Maps a file stem such as "dev_seen" to its split; anything else is custom.
SplitName split_name_from_stem(std::string_view stem);

struct SplitSet {
  SplitName name = SplitName::custom;
  std::vector<MemeRecord> records;

  std::size_t size() const { return records.size(); }
  std::vector<std::uint64_t> ids() const;

  friend bool operator==(const SplitSet&, const SplitSet&) = default;
};

struct LabelBalance {
  std::size_t hateful = 0;
  std::size_t not_hateful = 0;
  std::size_t unlabeled = 0;
};

LabelBalance class_balance(const SplitSet& split);

SplitSet parse_jsonl(std::string_view text, SplitName name, const std::string& source_name);
SplitSet load_jsonl(const std::filesystem::path& path);

/// Union by id: a's records in order, then b's unseen ids in b's order.
/// Shared ids must carry identical text and label.
SplitSet merge_dedup(const SplitSet& a, const SplitSet& b);

inline constexpr std::uint32_t kMaxBoxes = 120;
inline constexpr std::uint32_t kRegionDim = 2048;

/// Row-major n_boxes x dim region features of one meme.
struct RegionMatrix {
  std::uint32_t n_boxes = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;

  float at(std::uint32_t box, std::uint32_t col) const { return values[std::size_t(box) * dim + col]; }

  friend bool operator==(const RegionMatrix&, const RegionMatrix&) = default;
};

/// Per-meme region features, kept in file order so a save after a load
/// reproduces the original bytes.
class FeatureBank {
 public:
  struct Entry {
    std::uint64_t id;
    std::shared_ptr<const RegionMatrix> features;
  };

  FeatureBank() = default;
  explicit FeatureBank(std::uint32_t dim) : dim_(dim) {}

  /// Validates shape and finiteness; throws DatasetError on duplicate id.
  void add(std::uint64_t id, RegionMatrix features);

  std::shared_ptr<const RegionMatrix> find(std::uint64_t id) const;
  bool contains(std::uint64_t id) const { return index_.contains(id); }

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Entries of `other` appended; dims must agree.
  void merge(const FeatureBank& other);

 private:
  std::uint32_t dim_ = kRegionDim;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

// MFB1 layout (little-endian, no padding):
//   "MFB1" | u32 entry_count | u32 dim | entry_count x (u64 id | u32 n_boxes | n_boxes*dim f32)
FeatureBank decode_features(std::span<const std::byte> bytes);
std::vector<std::byte> encode_features(const FeatureBank& bank);
FeatureBank load_features(const std::filesystem::path& path);
void save_features(const FeatureBank& bank, const std::filesystem::path& path);

struct Example {
  MemeRecord record;
  std::shared_ptr<const RegionMatrix> features;
  std::optional<TagVector> tags;
};

/// Pairs each record with its features (and tags, when a table is given).
/// Throws DatasetError listing every id without a feature entry.
std::vector<Example> join(const SplitSet& split, const FeatureBank& bank,
                          const TagTable* tags = nullptr);

}  // namespace memeguard
