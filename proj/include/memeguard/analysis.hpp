#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memeguard/tags.hpp"

namespace memeguard {

/// Phi coefficient of two 0/1 vectors; nullopt when any marginal is zero.
/// Throws std::invalid_argument on length mismatch or length < 2.
std::optional<double> phi(std::span<const int> a, std::span<const int> b);

/// Label x number of distinct sensitive categories (0, 1, 2, 3, 4+).
struct IncidenceTable {
  static constexpr std::size_t kBuckets = 5;
  std::array<std::array<std::uint64_t, kBuckets>, 2> counts{};  // [label][bucket]

  std::uint64_t total() const;
  std::uint64_t row_total(int label) const;
  std::uint64_t column_total(std::size_t bucket) const;
  /// Hateful share of a bucket; nullopt for an empty column.
  std::optional<double> hateful_share(std::size_t bucket) const;
};

/// `labels[i]` pairs with `tags[i]`.
IncidenceTable incidence(std::span<const int> labels, std::span<const TagVector> tags);

/// Symmetric 8x8 phi matrix over (label, racism, ..., profanity);
/// undefined cells are nullopt.
struct CorrelationMatrix {
  static constexpr std::size_t kSize = 1 + kNumCategories;
  std::array<std::array<std::optional<double>, kSize>, kSize> cells{};

  static std::array<std::string, kSize> names();
};

CorrelationMatrix correlation(std::span<const int> labels, std::span<const TagVector> tags);

struct AnalysisReport {
  std::string incidence_csv;
  std::string correlation_csv;
  std::string text;
};

/// Deterministic rendering; correlations to 3 decimals, undefined as "NA".
AnalysisReport report(const IncidenceTable& inc, const CorrelationMatrix& corr);

}  // namespace memeguard
