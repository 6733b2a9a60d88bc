#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace memeguard {

/// Sensitive-content flags, in the fixed column order used everywhere.
enum class Category : std::uint8_t {
  racism = 0,
  nationality,
  sex,
  religion,
  pregnancy,
  disability,
  profanity,
};

inline constexpr std::size_t kNumCategories = 7;
inline constexpr std::size_t kNumProtectedCategories = 6;

inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "racism", "nationality", "sex", "religion", "pregnancy", "disability", "profanity"};

std::optional<Category> category_from_name(std::string_view name);

struct TagVector {
  std::array<std::uint8_t, kNumCategories> flags{};
  std::optional<double> hatexplain_proba;

  bool flag(Category c) const { return flags[static_cast<std::size_t>(c)] != 0; }
  void set(Category c, bool on = true) { flags[static_cast<std::size_t>(c)] = on ? 1 : 0; }

  /// Number of distinct categories present (all seven flags).
  int category_count() const;

  friend bool operator==(const TagVector&, const TagVector&) = default;
};

/// Tag rows keyed by meme id, iterated in insertion order.
class TagTable {
 public:
  struct Row {
    std::uint64_t id;
    TagVector tags;
  };

  /// Throws on duplicate id.
  void insert(std::uint64_t id, TagVector tags);

  const TagVector* find(std::uint64_t id) const;
  TagVector* find(std::uint64_t id);

  const std::vector<Row>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  friend bool operator==(const TagTable& a, const TagTable& b) { return a.rows_ == b.rows_; }

 private:
  std::vector<Row> rows_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

inline bool operator==(const TagTable::Row& a, const TagTable::Row& b) {
  return a.id == b.id && a.tags == b.tags;
}

}  // namespace memeguard
