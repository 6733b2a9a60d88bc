#include "memeguard/text_normalize.hpp"

#include <cwctype>
#include <locale>

namespace memeguard {

namespace {

// Unicode-aware classification through the C.UTF-8 ctype facet; falls back
// to ASCII rules where that locale is unavailable.
class CharClass {
 public:
  CharClass() {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        loc_ = std::locale(name);
        facet_ = &std::use_facet<std::ctype<wchar_t>>(loc_);
        return;
      } catch (const std::runtime_error&) {
      }
    }
  }

  char32_t lower(char32_t c) const {
    if (c < 0x80) return (c >= U'A' && c <= U'Z') ? c + 32 : c;
    if (!facet_) return c;
    return static_cast<char32_t>(facet_->tolower(static_cast<wchar_t>(c)));
  }

  bool word(char32_t c) const {
    if (c < 0x80) {
      return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
    }
    if (!facet_) return false;
    return facet_->is(std::ctype_base::alnum, static_cast<wchar_t>(c));
  }

 private:
  std::locale loc_ = std::locale::classic();
  const std::ctype<wchar_t>* facet_ = nullptr;
};

const CharClass& char_class() {
  static const CharClass cc;
  return cc;
}

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::vector<std::u32string> normalize_u32(std::string_view text) {
  const auto& cc = char_class();
  std::vector<std::u32string> tokens;
  std::u32string cur;
  auto flush = [&] {
    std::size_t b = 0;
    std::size_t e = cur.size();
    while (b < e && cur[b] == U'\'') ++b;
    while (e > b && cur[e - 1] == U'\'') --e;
    if (e > b) tokens.emplace_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char32_t c : decode_utf8(text)) {
    if (c == U'\u2019') c = U'\'';
    if (c == U'\'' || cc.word(c)) {
      cur.push_back(c == U'\'' ? c : cc.lower(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<std::string> normalize(std::string_view text) {
  auto u = normalize_u32(text);
  std::vector<std::string> out;
  out.reserve(u.size());
  for (const auto& t : u) out.push_back(encode_utf8(t));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace memeguard
