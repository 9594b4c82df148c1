#include "nli/text.hpp"

namespace nli::text {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
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
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) append_utf8(out, cp);
  return out;
}

bool is_space(char32_t cp) noexcept {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v';
}

namespace {

bool is_non_ascii_symbol(char32_t cp) noexcept {
  if (cp >= 0x80 && cp <= 0xBF) return true;             // Latin-1 punctuation and signs
  if (cp == 0xD7 || cp == 0xF7) return true;             // multiplication / division
  if (cp >= 0x2000 && cp <= 0x2BFF) return true;         // general punctuation .. misc symbols
  if (cp >= 0x3000 && cp <= 0x303F) return true;         // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return true;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;       // emoji and pictographs
  if (cp == 0xFFFD || cp == 0xFEFF) return true;
  return false;
}

}  // namespace

bool is_letter(char32_t cp) noexcept {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp >= 0x0300 && cp <= 0x036F) return true;
  return !is_non_ascii_symbol(cp) && !(cp >= 0x0660 && cp <= 0x0669);
}

bool is_alnum(char32_t cp) noexcept {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || is_letter(cp);
  return !is_non_ascii_symbol(cp);
}

bool is_word_char(char32_t cp) noexcept { return cp == '_' || is_alnum(cp); }

char32_t to_lower(char32_t cp) noexcept {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    // Latin Extended-A mostly alternates upper/lower; the exceptions around
    // U+0130..U+0149 and U+0178..U+017E are shifted by one.
    if (cp == 0x130) return 'i';
    if (cp == 0x178) return 0xFF;
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                 // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

std::u32string to_lower(std::u32string_view s) {
  std::u32string out(s);
  for (auto& cp : out) cp = to_lower(cp);
  return out;
}

std::string to_lower_utf8(std::string_view s) { return encode_utf8(to_lower(decode_utf8(s))); }

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  const std::u32string cps = decode_utf8(s);
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!is_word_char(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && is_word_char(cps[j])) ++j;
    if (j - i >= 2) {
      std::string tok;
      for (std::size_t k = i; k < j; ++k) append_utf8(tok, to_lower(cps[k]));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

std::vector<std::string> function_word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::u32string cps = decode_utf8(s);
  for (auto& cp : cps) {
    if (cp == 0x2019) cp = '\'';
  }
  const auto part = [](char32_t cp) { return cp == '\'' || is_word_char(cp); };
  std::size_t i = 0;
  while (i < cps.size()) {
    if (!part(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && part(cps[j])) ++j;
    std::size_t a = i;
    std::size_t b = j;
    while (a < b && cps[a] == '\'') ++a;
    while (b > a && cps[b - 1] == '\'') --b;
    if (b > a) {
      std::string tok;
      for (std::size_t k = a; k < b; ++k) append_utf8(tok, to_lower(cps[k]));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

std::vector<std::string> tagger_tokens(std::string_view sentence) {
  std::vector<std::string> out;
  const std::u32string cps = decode_utf8(sentence);
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (!is_word_char(c)) {
      std::string tok;
      append_utf8(tok, c);
      out.push_back(std::move(tok));
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size()) {
      if (is_word_char(cps[j])) {
        ++j;
      } else if ((cps[j] == '\'' || cps[j] == '-' || cps[j] == '.' || cps[j] == 0x2019) &&
                 j + 1 < cps.size() && is_word_char(cps[j + 1])) {
        ++j;
      } else {
        break;
      }
    }
    out.push_back(encode_utf8(std::u32string_view(cps).substr(i, j - i)));
    i = j;
  }
  return out;
}

}  // namespace nli::text
