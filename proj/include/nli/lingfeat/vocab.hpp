#pragma once

// Count-ranked vocabularies shared by every n-gram style feature family.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nli/corpus.hpp"

namespace nli::lingfeat {

// Mergeable partial counts; merge is associative and commutative, so the
// fitted vocabulary does not depend on the order chunks are visited in.
class CountMap {
 public:
  void add(const std::string& key, std::uint64_t n = 1) { counts_[key] += n; }
  void merge(const CountMap& other);
  const std::unordered_map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
};

// Entries sorted by count descending, ties by key ascending, truncated to top_k.
class RankedVocabulary {
 public:
  using Entry = std::pair<std::string, std::uint64_t>;

  RankedVocabulary() = default;
  static RankedVocabulary from_counts(const CountMap& counts, std::size_t top_k);
  static RankedVocabulary from_entries(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  // Position of key or -1.
  std::ptrdiff_t index_of(const std::string& key) const;

 private:
  void reindex();

  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class NgramKind { word_unigram, char_trigram };

const char* to_string(NgramKind kind) noexcept;

struct NgramVocabulary {
  NgramKind kind = NgramKind::word_unigram;
  RankedVocabulary vocab;
};

inline constexpr std::size_t kNgramTopK = 1000;

// Word unigrams: lowercased runs of >= 2 word characters.
// Char trigrams: every 3-code-point window of the lowercased text with
// whitespace runs folded to one space.
std::vector<std::string> extract_ngrams(std::string_view text, NgramKind kind);

NgramVocabulary fit_ngram_vocab(std::span<const corpus::Chunk> train_chunks, NgramKind kind,
                                std::size_t top_k = kNgramTopK);

std::vector<double> ngram_counts(std::string_view text, const NgramVocabulary& vocab);
std::vector<double> ngram_counts(const corpus::Chunk& chunk, const NgramVocabulary& vocab);

}  // namespace nli::lingfeat
