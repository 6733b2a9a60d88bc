#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "memeguard/csv.hpp"
#include "memeguard/dataset.hpp"
#include "memeguard/lev_automaton.hpp"
#include "memeguard/tags.hpp"

namespace memeguard {

/// Category term lists. Terms are stored as normalized token sequences, so
/// "Some Term" and "some   term" are the same entry.
class Lexicon {
 public:
  using Term = std::vector<std::string>;

  /// Normalizes `term`; throws std::invalid_argument if nothing remains.
  void add(Category category, std::string_view term);

  const std::set<Term>& terms(Category category) const {
    return terms_[static_cast<std::size_t>(category)];
  }
  bool empty() const;
  std::size_t size() const;

  /// `category<TAB>term` per line; '#' lines and blank lines are skipped.
  static Lexicon parse(std::string_view text, const std::string& source_name);
  static Lexicon load(const std::filesystem::path& path);

 private:
  std::array<std::set<Term>, kNumCategories> terms_;
};

struct TaggerOptions {
  int k_profanity = 1;
  /// Fuzzy (non-exact) profanity hits need at least this many code points.
  std::size_t min_fuzzy_length = 4;
};

/// Compiled tagger. Immutable after construction; tag() is safe to call
/// concurrently.
class Tagger {
 public:
  Tagger(const Lexicon& lexicon, TaggerOptions options = {});

  TagVector tag(std::string_view text) const;
  TagTable tag_split(const SplitSet& split) const;

  const TaggerOptions& options() const { return options_; }

 private:
  bool profane_token(std::u32string_view token) const;

  TaggerOptions options_;
  std::array<std::vector<Lexicon::Term>, kNumCategories> sequences_;
  std::set<std::u32string> exact_profanity_;
  std::vector<LevAutomaton> profanity_automata_;
};

TagVector tag(std::string_view text, const Lexicon& lexicon, int k_profanity);

struct AttachResult {
  TagTable table;
  std::vector<std::uint64_t> unknown_ids;  // ids in the side-file with no tag row
};

/// Attaches `id,proba` rows to matching tag rows. Probabilities outside
/// [0, 1] are an error; unknown ids are collected, not fatal.
AttachResult attach_hatexplain(TagTable table, const CsvTable& probs);

std::string tags_to_csv(const TagTable& table);
TagTable tags_from_csv(const CsvTable& csv);

}  // namespace memeguard
