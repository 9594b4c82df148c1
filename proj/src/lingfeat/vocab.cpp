#include "nli/lingfeat/vocab.hpp"

#include <algorithm>

#include "nli/errors.hpp"
#include "nli/text.hpp"

namespace nli::lingfeat {

void CountMap::merge(const CountMap& other) {
  for (const auto& [k, v] : other.counts_) counts_[k] += v;
}

RankedVocabulary RankedVocabulary::from_counts(const CountMap& counts, std::size_t top_k) {
  std::vector<Entry> entries(counts.counts().begin(), counts.counts().end());
  const auto better = [](const Entry& a, const Entry& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  if (entries.size() > top_k) {
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(top_k), entries.end(), better);
    entries.resize(top_k);
  }
  std::sort(entries.begin(), entries.end(), better);
  RankedVocabulary v;
  v.entries_ = std::move(entries);
  v.reindex();
  return v;
}

RankedVocabulary RankedVocabulary::from_entries(std::vector<Entry> entries) {
  RankedVocabulary v;
  v.entries_ = std::move(entries);
  v.reindex();
  return v;
}

void RankedVocabulary::reindex() {
  index_.clear();
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].first, i);
}

std::ptrdiff_t RankedVocabulary::index_of(const std::string& key) const {
  auto it = index_.find(key);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

const char* to_string(NgramKind kind) noexcept {
  return kind == NgramKind::word_unigram ? "word_unigram" : "char_trigram";
}

std::vector<std::string> extract_ngrams(std::string_view text, NgramKind kind) {
  if (kind == NgramKind::word_unigram) return text::word_tokens(text);

  std::u32string folded;
  folded.reserve(text.size());
  bool in_space = false;
  for (char32_t cp : text::decode_utf8(text)) {
    if (text::is_space(cp)) {
      if (!in_space) folded.push_back(U' ');
      in_space = true;
    } else {
      folded.push_back(text::to_lower(cp));
      in_space = false;
    }
  }
  std::vector<std::string> grams;
  if (folded.size() < 3) return grams;
  grams.reserve(folded.size() - 2);
  for (std::size_t i = 0; i + 3 <= folded.size(); ++i) {
    grams.push_back(text::encode_utf8(std::u32string_view(folded).substr(i, 3)));
  }
  return grams;
}

NgramVocabulary fit_ngram_vocab(std::span<const corpus::Chunk> train_chunks, NgramKind kind, std::size_t top_k) {
  if (train_chunks.empty()) throw ConfigError("cannot fit an n-gram vocabulary on zero chunks");
  CountMap counts;
  for (const auto& chunk : train_chunks) {
    CountMap partial;
    for (const auto& g : extract_ngrams(chunk.text(), kind)) partial.add(g);
    counts.merge(partial);
  }
  return NgramVocabulary{kind, RankedVocabulary::from_counts(counts, top_k)};
}

std::vector<double> ngram_counts(std::string_view text, const NgramVocabulary& vocab) {
  std::vector<double> out(vocab.vocab.size(), 0.0);
  for (const auto& g : extract_ngrams(text, vocab.kind)) {
    const auto idx = vocab.vocab.index_of(g);
    if (idx >= 0) out[static_cast<std::size_t>(idx)] += 1.0;
  }
  return out;
}

std::vector<double> ngram_counts(const corpus::Chunk& chunk, const NgramVocabulary& vocab) {
  return ngram_counts(chunk.text(), vocab);
}

}  // namespace nli::lingfeat
