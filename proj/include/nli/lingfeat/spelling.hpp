#pragma once

// Dictionary-based spelling correction with a symmetric-delete index.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nli::lingfeat {

inline constexpr std::size_t kMaxLookupDistance = 2;

// word -> corpus frequency.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(std::vector<std::pair<std::string, std::uint64_t>> entries);

  // word<TAB>frequency lines; duplicate words have their counts summed.
  static Dictionary load(const std::filesystem::path& path);

  bool contains(std::string_view word) const;
  std::uint64_t frequency(std::string_view word) const;
  std::size_t size() const noexcept { return entries_.size(); }
  // Sorted by word.
  const std::vector<std::pair<std::string, std::uint64_t>>& entries() const noexcept { return entries_; }
  // Stable digest of the dictionary contents.
  std::string fingerprint() const;

 private:
  std::vector<std::pair<std::string, std::uint64_t>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Suggestion {
  std::string term;
  std::size_t distance = 0;  // Damerau (optimal string alignment) distance
  std::uint64_t frequency = 0;

  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

// Every dictionary word is indexed under all strings reachable by deleting up
// to max_distance code points. Two strings within OSA distance k share such a
// delete key, so collecting candidates through the index and verifying them
// is equivalent to scanning the whole dictionary.
class SpellIndex {
 public:
  explicit SpellIndex(Dictionary dictionary, std::size_t max_distance = kMaxLookupDistance);

  // nullopt when the word is in the dictionary or nothing lies within
  // max_distance. Ties: smaller distance, then higher frequency, then
  // lexicographically smaller term.
  std::optional<Suggestion> lookup(std::string_view word) const;

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  std::size_t max_distance() const noexcept { return max_distance_; }

 private:
  Dictionary dictionary_;
  std::size_t max_distance_;
  std::vector<std::u32string> terms_;
  std::vector<std::pair<std::uint64_t, std::uint32_t>> deletes_;  // sorted by hash
};

std::optional<Suggestion> spell_correct(std::string_view word, const SpellIndex& index);

}  // namespace nli::lingfeat
