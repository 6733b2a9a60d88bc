#include "memeguard/text_tagger.hpp"

#include <cmath>
#include <stdexcept>

#include "memeguard/binary_io.hpp"
#include "memeguard/text_normalize.hpp"

namespace memeguard {

void Lexicon::add(Category category, std::string_view term) {
  auto tokens = normalize(term);
  if (tokens.empty()) throw std::invalid_argument("lexicon term '" + std::string(term) + "' is empty");
  terms_[static_cast<std::size_t>(category)].insert(std::move(tokens));
}

bool Lexicon::empty() const { return size() == 0; }

std::size_t Lexicon::size() const {
  std::size_t n = 0;
  for (const auto& s : terms_) n += s.size();
  return n;
}

Lexicon Lexicon::parse(std::string_view text, const std::string& source_name) {
  Lexicon lex;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw std::runtime_error(where + ": expected category<TAB>term");
    auto cat = category_from_name(line.substr(0, tab));
    if (!cat) {
      throw std::runtime_error(where + ": unknown category '" + std::string(line.substr(0, tab)) + "'");
    }
    try {
      lex.add(*cat, line.substr(tab + 1));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  return parse(read_file_text(path), path.string());
}

Tagger::Tagger(const Lexicon& lexicon, TaggerOptions options) : options_(options) {
  if (options_.k_profanity < 0 || options_.k_profanity > LevAutomaton::kMaxEdits) {
    throw std::invalid_argument("k_profanity must be in [0, 2]");
  }
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    const auto& set = lexicon.terms(static_cast<Category>(c));
    sequences_[c].assign(set.begin(), set.end());
  }
  // Single-token profanity terms get fuzzy matching; phrases stay exact.
  const auto prof = static_cast<std::size_t>(Category::profanity);
  for (const auto& term : sequences_[prof]) {
    if (term.size() != 1) continue;
    auto u = decode_utf8(term.front());
    exact_profanity_.insert(u);
    if (options_.k_profanity > 0) profanity_automata_.emplace_back(std::move(u), options_.k_profanity);
  }
}

bool Tagger::profane_token(std::u32string_view token) const {
  if (exact_profanity_.contains(std::u32string(token))) return true;
  if (token.size() < options_.min_fuzzy_length) return false;
  const auto k = static_cast<std::size_t>(options_.k_profanity);
  for (const auto& a : profanity_automata_) {
    const auto n = a.term().size();
    if (token.size() + k < n || n + k < token.size()) continue;
    if (a.accepts(token)) return true;
  }
  return false;
}

namespace {

bool contains_sequence(const std::vector<std::string>& tokens, const std::vector<std::string>& seq) {
  if (seq.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + seq.size() <= tokens.size(); ++i) {
    bool hit = true;
    for (std::size_t j = 0; j < seq.size(); ++j) {
      if (tokens[i + j] != seq[j]) {
        hit = false;
        break;
      }
    }
    if (hit) return true;
  }
  return false;
}

}  // namespace

TagVector Tagger::tag(std::string_view text) const {
  const auto tokens32 = normalize_u32(text);
  std::vector<std::string> tokens;
  tokens.reserve(tokens32.size());
  for (const auto& t : tokens32) tokens.push_back(encode_utf8(t));

  TagVector out;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    for (const auto& seq : sequences_[c]) {
      if (contains_sequence(tokens, seq)) {
        out.flags[c] = 1;
        break;
      }
    }
  }
  if (!out.flag(Category::profanity)) {
    for (const auto& t : tokens32) {
      if (profane_token(t)) {
        out.set(Category::profanity);
        break;
      }
    }
  }
  return out;
}

TagTable Tagger::tag_split(const SplitSet& split) const {
  TagTable table;
  for (const auto& r : split.records) table.insert(r.id, tag(r.text));
  return table;
}

TagVector tag(std::string_view text, const Lexicon& lexicon, int k_profanity) {
  TaggerOptions opts;
  opts.k_profanity = k_profanity;
  return Tagger(lexicon, opts).tag(text);
}

AttachResult attach_hatexplain(TagTable table, const CsvTable& probs) {
  AttachResult result;
  const auto id_col = probs.column("id");
  const auto p_col = probs.column("proba");
  for (std::size_t r = 0; r < probs.rows.size(); ++r) {
    const std::string where = "hatexplain row at line " + std::to_string(probs.line_numbers[r]);
    const auto id = parse_id(probs.rows[r][id_col], where);
    const auto p = parse_real(probs.rows[r][p_col], where);
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::runtime_error(where + ": probability " + probs.rows[r][p_col] + " outside [0, 1]");
    }
    if (auto* t = table.find(id)) {
      t->hatexplain_proba = p;
    } else {
      result.unknown_ids.push_back(id);
    }
  }
  result.table = std::move(table);
  return result;
}

std::string tags_to_csv(const TagTable& table) {
  std::string out = "id";
  for (auto name : kCategoryNames) {
    out += ',';
    out += name;
  }
  out += ",hatexplain_proba\n";
  for (const auto& row : table.rows()) {
    out += std::to_string(row.id);
    for (auto f : row.tags.flags) {
      out += ',';
      out += f ? '1' : '0';
    }
    out += ',';
    if (row.tags.hatexplain_proba) out += format_fixed(*row.tags.hatexplain_proba, 8);
    out += '\n';
  }
  return out;
}

TagTable tags_from_csv(const CsvTable& csv) {
  TagTable table;
  const auto id_col = csv.column("id");
  std::array<std::size_t, kNumCategories> cols{};
  for (std::size_t c = 0; c < kNumCategories; ++c) cols[c] = csv.column(kCategoryNames[c]);
  const auto p_col = csv.column("hatexplain_proba");
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::string where = "tag row at line " + std::to_string(csv.line_numbers[r]);
    TagVector t;
    for (std::size_t c = 0; c < kNumCategories; ++c) {
      const auto& cell = row[cols[c]];
      if (cell != "0" && cell != "1") throw std::runtime_error(where + ": flag must be 0 or 1");
      t.flags[c] = cell == "1";
    }
    if (!row[p_col].empty()) {
      const double p = parse_real(row[p_col], where);
      if (!(p >= 0.0 && p <= 1.0)) throw std::runtime_error(where + ": hatexplain_proba outside [0, 1]");
      t.hatexplain_proba = p;
    }
    table.insert(parse_id(row[id_col], where), t);
  }
  return table;
}

}  // namespace memeguard
