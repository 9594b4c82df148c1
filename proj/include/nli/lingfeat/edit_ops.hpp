#pragma once

// Character-level edit operations between a misspelling and its correction.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nli::lingfeat {

struct SubstOp {
  enum class Kind { insert, remove, replace };

  Kind kind = Kind::replace;
  std::optional<char32_t> from_char;
  std::optional<char32_t> to_char;

  static SubstOp insert(char32_t to) { return {Kind::insert, std::nullopt, to}; }
  static SubstOp remove(char32_t from) { return {Kind::remove, from, std::nullopt}; }
  static SubstOp replace(char32_t from, char32_t to) { return {Kind::replace, from, to}; }

  // Stable vocabulary key: "I:x", "D:x" or "R:x>y".
  std::string key() const;
  bool valid() const noexcept;

  friend bool operator==(const SubstOp&, const SubstOp&) = default;
};

struct EditStep {
  SubstOp op;
  // Code-point index in the source word the step applies at; inserts go
  // before this index.
  std::size_t position = 0;

  friend bool operator==(const EditStep&, const EditStep&) = default;
};

struct EditScript {
  std::size_t distance = 0;
  std::vector<EditStep> steps;  // source order

  std::vector<SubstOp> ops() const;
};

// Plain Levenshtein (no transpositions). The backtrace prefers
// match > replace > delete > insert when several moves reach the same cost,
// so the script is unique and |steps| == distance.
EditScript edit_ops(std::u32string_view word, std::u32string_view correction);
EditScript edit_ops(std::string_view word, std::string_view correction);

std::u32string apply_edit_steps(std::u32string_view word, const std::vector<EditStep>& steps);

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);

// Optimal-string-alignment Damerau distance (adjacent transpositions cost 1,
// no substring edited twice). Returns max_distance + 1 as soon as the bound
// is exceeded.
std::size_t osa_distance(std::u32string_view a, std::u32string_view b, std::size_t max_distance);

}  // namespace nli::lingfeat
