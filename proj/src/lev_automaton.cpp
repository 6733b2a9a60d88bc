#include "memeguard/lev_automaton.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "memeguard/text_normalize.hpp"

namespace memeguard {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(decode_utf8(a), decode_utf8(b));
}

namespace {

// NFA state (consumed, errors) packed as consumed * (k + 1) + errors.
struct Nfa {
  std::u32string_view term;
  int k;

  int pack(std::size_t consumed, int errors) const {
    return static_cast<int>(consumed) * (k + 1) + errors;
  }
  std::size_t consumed(int s) const { return static_cast<std::size_t>(s / (k + 1)); }
  int errors(int s) const { return s % (k + 1); }

  std::vector<int> closure(std::vector<int> states) const {
    std::vector<int> stack = states;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      const auto i = consumed(s);
      const int e = errors(s);
      if (i < term.size() && e < k) {
        int t = pack(i + 1, e + 1);
        if (std::find(states.begin(), states.end(), t) == states.end()) {
          states.push_back(t);
          stack.push_back(t);
        }
      }
    }
    std::sort(states.begin(), states.end());
    return states;
  }

  // `matches_term` tells, for each position, whether the read character
  // equals term[i]; a symbol class is fully described by that predicate.
  template <typename Eq>
  std::vector<int> step(const std::vector<int>& states, Eq matches_term) const {
    std::vector<int> next;
    for (int s : states) {
      const auto i = consumed(s);
      const int e = errors(s);
      if (i < term.size() && matches_term(i)) next.push_back(pack(i + 1, e));
      if (e < k) {
        if (i < term.size()) next.push_back(pack(i + 1, e + 1));
        next.push_back(pack(i, e + 1));
      }
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    return closure(std::move(next));
  }

  bool accepting(const std::vector<int>& states) const {
    return std::any_of(states.begin(), states.end(),
                       [&](int s) { return consumed(s) == term.size(); });
  }
};

}  // namespace

LevAutomaton::LevAutomaton(std::u32string term, int max_edits)
    : term_(std::move(term)), max_edits_(max_edits) {
  if (term_.empty()) throw std::invalid_argument("LevAutomaton: empty term");
  if (max_edits_ < 0 || max_edits_ > kMaxEdits) {
    throw std::invalid_argument("LevAutomaton: max_edits must be in [0, 2], got " +
                                std::to_string(max_edits_));
  }
  alphabet_ = term_;
  std::sort(alphabet_.begin(), alphabet_.end());
  alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
  const std::size_t n_classes = alphabet_.size() + 1;

  const Nfa nfa{term_, max_edits_};
  std::map<std::vector<int>, std::int32_t> ids;
  std::vector<std::vector<int>> sets;
  auto intern = [&](std::vector<int> set) -> std::int32_t {
    if (set.empty()) return -1;
    auto [it, inserted] = ids.emplace(set, static_cast<std::int32_t>(sets.size()));
    if (inserted) {
      sets.push_back(std::move(set));
      delta_.resize(sets.size() * n_classes, -1);
    }
    return it->second;
  };

  intern(nfa.closure({nfa.pack(0, 0)}));
  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      // Class c < alphabet size is that character; the last class matches nothing in the term.
      auto next = nfa.step(sets[s], [&](std::size_t i) {
        return c < alphabet_.size() && term_[i] == alphabet_[c];
      });
      const auto target = intern(std::move(next));
      delta_[s * n_classes + c] = target;
    }
  }
  accepting_.reserve(sets.size());
  for (const auto& set : sets) accepting_.push_back(nfa.accepting(set));
}

LevAutomaton::LevAutomaton(std::string_view utf8_term, int max_edits)
    : LevAutomaton(decode_utf8(utf8_term), max_edits) {}

std::size_t LevAutomaton::symbol_class(char32_t c) const {
  auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), c);
  if (it != alphabet_.end() && *it == c) return static_cast<std::size_t>(it - alphabet_.begin());
  return alphabet_.size();
}

bool LevAutomaton::accepts(std::u32string_view word) const {
  const std::size_t n_classes = alphabet_.size() + 1;
  std::int32_t state = 0;
  for (char32_t c : word) {
    state = delta_[static_cast<std::size_t>(state) * n_classes + symbol_class(c)];
    if (state < 0) return false;
  }
  return accepting_[static_cast<std::size_t>(state)];
}

bool LevAutomaton::accepts_utf8(std::string_view word) const { return accepts(decode_utf8(word)); }

}  // namespace memeguard
