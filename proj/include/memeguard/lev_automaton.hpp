#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace memeguard {

/// Unit-cost edit distance (insert, delete, substitute) over code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
/// UTF-8 convenience overload.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Deterministic automaton accepting exactly the strings within edit
/// distance `max_edits` of a fixed term.
///
/// Built from the (consumed, errors) NFA: reading a character either
/// matches term[consumed], substitutes it, or is an insertion; epsilon
/// moves delete a term character. The NFA is determinized by subset
/// construction over the term's distinct characters plus one class for
/// every other character, so matching is a single table walk.
class LevAutomaton {
 public:
  static constexpr int kMaxEdits = 2;

  /// Throws std::invalid_argument on an empty term or max_edits outside [0, 2].
  LevAutomaton(std::u32string term, int max_edits);
  LevAutomaton(std::string_view utf8_term, int max_edits);

  bool accepts(std::u32string_view word) const;
  bool accepts_utf8(std::string_view word) const;

  const std::u32string& term() const { return term_; }
  int max_edits() const { return max_edits_; }
  std::size_t state_count() const { return accepting_.size(); }

 private:
  std::size_t symbol_class(char32_t c) const;

  std::u32string term_;
  int max_edits_;
  std::u32string alphabet_;          // sorted distinct term characters
  std::vector<std::int32_t> delta_;  // state * (alphabet_.size() + 1) + class -> state, -1 = dead
  std::vector<bool> accepting_;
};

}  // namespace memeguard
