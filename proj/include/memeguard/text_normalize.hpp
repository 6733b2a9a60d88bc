#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memeguard {

/// Decodes UTF-8; invalid sequences become U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);

/// Lowercases and splits into maximal runs of letters, digits and
/// apostrophes. Apostrophes at either end of a run are dropped, so
/// "'quoted'" yields "quoted" while "don't" stays whole. Typographic
/// apostrophes (U+2019) are folded to '.
std::vector<std::string> normalize(std::string_view text);

/// Same tokens as normalize, as code-point strings.
std::vector<std::u32string> normalize_u32(std::string_view text);

/// Space-joined token sequence.
std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace memeguard
