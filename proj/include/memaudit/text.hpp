#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memaudit::text {

// Decodes the code point starting at byte offset i and advances i past it.
// Bytes that do not form a valid UTF-8 sequence are consumed one at a time
// and returned as their own value, so walking never stalls or splits a
// well-formed multi-byte sequence.
char32_t decode_utf8(std::string_view s, std::size_t& i);

bool is_unicode_space(char32_t cp);

std::size_t count_codepoints(std::string_view s);

struct SplitText {
  std::string prefix;
  std::string suffix;
};

// Character-count split: prefix gets the first min(cut, length) code points,
// suffix the remainder. Concatenation always reproduces the input.
SplitText split_prefix(std::string_view text, std::size_t cut);

// Same split, but a cut landing inside a word is moved forward to the end of
// that word so the prefix never keeps a word fragment.
SplitText split_prefix_snap(std::string_view text, std::size_t cut);

// Maximal runs of non-whitespace code points, in order.
std::vector<std::string> tokenize_words(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace memaudit::text
