#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nli::text {

// Lenient UTF-8 decoding: an invalid byte decodes to U+FFFD and advances by one.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp) noexcept;
// Letters, digits and underscore. Non-ASCII code points count as word
// characters unless they fall in a known punctuation/symbol block.
bool is_word_char(char32_t cp) noexcept;
bool is_alnum(char32_t cp) noexcept;
bool is_letter(char32_t cp) noexcept;
char32_t to_lower(char32_t cp) noexcept;

std::u32string to_lower(std::u32string_view s);
std::string to_lower_utf8(std::string_view s);

// Whitespace-delimited tokens (ASCII whitespace).
std::vector<std::string_view> split_ws(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercased maximal runs of >= 2 word characters.
std::vector<std::string> word_tokens(std::string_view s);

// Lowercased maximal runs of word characters and apostrophes (length >= 1),
// with leading/trailing apostrophes trimmed. U+2019 is folded to '\''.
std::vector<std::string> function_word_tokens(std::string_view s);

// Splits a sentence into word tokens (word characters with internal
// apostrophes, hyphens or periods) and single punctuation characters.
std::vector<std::string> tagger_tokens(std::string_view sentence);

}  // namespace nli::text
