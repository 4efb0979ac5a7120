#include "memaudit/text.hpp"

namespace memaudit::text {

char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) {
    return i + k < s.size() &&
           (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto at = [&](std::size_t k) {
    return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F);
  };

  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if (b0 >= 0xC2 && b0 <= 0xDF && cont(1)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | at(1);
    i += 2;
    return cp;
  }
  if (b0 >= 0xE0 && b0 <= 0xEF && cont(1) && cont(2)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) | (at(1) << 6) | at(2);
    i += 3;
    return cp;
  }
  if (b0 >= 0xF0 && b0 <= 0xF4 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) | (at(1) << 12) |
                  (at(2) << 6) | at(3);
    i += 4;
    return cp;
  }
  // Stray or truncated byte: treat as a single one-byte character.
  ++i;
  return b0;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U'\t':
    case U'\n':
    case 0x0B:
    case 0x0C:
    case U'\r':
    case U' ':
    case 0x85:    // NEL
    case 0xA0:    // no-break space
    case 0x1680:  // ogham space mark
    case 0x2028:  // line separator
    case 0x2029:  // paragraph separator
    case 0x202F:  // narrow no-break space
    case 0x205F:  // medium mathematical space
    case 0x3000:  // ideographic space
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;  // en quad .. hair space
  }
}

std::size_t count_codepoints(std::string_view s) {
  std::size_t i = 0, n = 0;
  while (i < s.size()) {
    decode_utf8(s, i);
    ++n;
  }
  return n;
}

namespace {

// Byte offset just past the first `cut` code points.
std::size_t byte_offset_for_cut(std::string_view text, std::size_t cut) {
  std::size_t i = 0, seen = 0;
  while (i < text.size() && seen < cut) {
    decode_utf8(text, i);
    ++seen;
  }
  return i;
}

}  // namespace

SplitText split_prefix(std::string_view text, std::size_t cut) {
  const std::size_t off = byte_offset_for_cut(text, cut);
  return {std::string(text.substr(0, off)), std::string(text.substr(off))};
}

SplitText split_prefix_snap(std::string_view text, std::size_t cut) {
  std::size_t off = byte_offset_for_cut(text, cut);
  if (off == 0 || off >= text.size()) {
    return {std::string(text.substr(0, off)), std::string(text.substr(off))};
  }
  // Mid-word iff the characters on both sides of the cut are non-space.
  std::size_t prev = 0, last = 0;
  while (prev < off) {
    last = prev;
    decode_utf8(text, prev);
  }
  std::size_t before_i = last;
  const char32_t before = decode_utf8(text, before_i);
  std::size_t after_i = off;
  const char32_t after = decode_utf8(text, after_i);
  if (!is_unicode_space(before) && !is_unicode_space(after)) {
    while (off < text.size()) {
      std::size_t k = off;
      if (is_unicode_space(decode_utf8(text, k))) break;
      off = k;
    }
  }
  return {std::string(text.substr(0, off)), std::string(text.substr(off))};
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0, start = 0;
  bool in_token = false;
  while (i < text.size()) {
    const std::size_t at = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp)) {
      if (in_token) {
        tokens.emplace_back(text.substr(start, at - start));
        in_token = false;
      }
    } else if (!in_token) {
      start = at;
      in_token = true;
    }
  }
  if (in_token) tokens.emplace_back(text.substr(start));
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace memaudit::text
