#pragma once

// The seven linguistic feature families and their assembly into one
// fixed-layout sparse vector per chunk.

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nli/corpus.hpp"
#include "nli/grammar.hpp"
#include "nli/lingfeat/edit_ops.hpp"
#include "nli/lingfeat/spelling.hpp"
#include "nli/lingfeat/vocab.hpp"
#include "nli/matrix.hpp"
#include "nli/postag.hpp"

namespace nli::lingfeat {

inline constexpr std::size_t kSubstitutionTopK = 400;
inline constexpr std::size_t kPosTrigramTopK = 300;
inline constexpr std::size_t kFunctionWordCount = 467;

// ---- function words -------------------------------------------------------

class FunctionWordList {
 public:
  // Exactly `expected` distinct, non-empty, lowercase entries.
  static FunctionWordList from_words(std::vector<std::string> words, std::size_t expected = kFunctionWordCount);
  static FunctionWordList load(const std::filesystem::path& path, std::size_t expected = kFunctionWordCount);

  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t size() const noexcept { return words_.size(); }
  std::ptrdiff_t index_of(const std::string& w) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::vector<double> function_word_counts(const corpus::Chunk& chunk, const FunctionWordList& list);

// ---- sentence length ------------------------------------------------------

// Whitespace tokens minus single non-alphanumeric characters, divided by the
// number of sentences.
double avg_sentence_length(std::span<const std::string> sentences);
double avg_sentence_length(const corpus::Chunk& chunk);

// ---- spelling substitutions ----------------------------------------------

struct SubstitutionFeatures {
  std::vector<double> counts;  // over the substitution vocabulary
  double avg_edit_distance = 0.0;
};

// Every misspelled word token with a correction inside the lookup distance.
struct Misspelling {
  std::string word;
  Suggestion correction;
  EditScript script;  // plain Levenshtein word -> correction
};

std::vector<Misspelling> find_misspellings(const corpus::Chunk& chunk, const SpellIndex& index);

RankedVocabulary fit_substitution_vocab(std::span<const corpus::Chunk> train_chunks, const SpellIndex& index,
                                        std::size_t top_k = kSubstitutionTopK);

SubstitutionFeatures substitution_features(const corpus::Chunk& chunk, const SpellIndex& index,
                                           const RankedVocabulary& subst_vocab);

// ---- POS trigrams -----------------------------------------------------------

// Tag sequence per sentence.
std::vector<std::vector<std::string>> tag_chunk(const corpus::Chunk& chunk, const postag::TaggerModel& tagger);
// Space-joined windows of three tags; no window spans two sentences.
std::vector<std::string> pos_trigrams(const std::vector<std::string>& tags);

RankedVocabulary fit_pos_vocab(std::span<const corpus::Chunk> train_chunks, const postag::TaggerModel& tagger,
                               std::size_t top_k = kPosTrigramTopK);
std::vector<double> pos_trigram_counts(const std::vector<std::vector<std::string>>& sentence_tags,
                                       const RankedVocabulary& pos_vocab);
std::vector<double> pos_trigram_counts(const corpus::Chunk& chunk, const postag::TaggerModel& tagger,
                                       const RankedVocabulary& pos_vocab);

// ---- schema and assembly ---------------------------------------------------

enum class Block : std::size_t {
  word_unigram = 0,
  char_trigram,
  substitution,
  avg_edit_distance,
  grammar,
  pos_trigram,
  function_word,
  avg_sentence_length,
};

inline constexpr std::size_t kBlockCount = 8;
const char* to_string(Block b) noexcept;

class FeatureSchema {
 public:
  // 1000 + 1000 + 400 + 1 + G + 300 + 467 + 1 = 3169 + G.
  static FeatureSchema standard(std::size_t grammar_size);
  static FeatureSchema custom(const std::array<std::size_t, kBlockCount>& sizes);

  std::size_t size(Block b) const noexcept { return sizes_[static_cast<std::size_t>(b)]; }
  std::size_t offset(Block b) const noexcept;
  std::size_t total_dim() const noexcept;
  const std::array<std::size_t, kBlockCount>& sizes() const noexcept { return sizes_; }

 private:
  std::array<std::size_t, kBlockCount> sizes_{};
};

struct FittedArtifacts {
  std::optional<NgramVocabulary> word_vocab;
  std::optional<NgramVocabulary> char_vocab;
  std::optional<RankedVocabulary> subst_vocab;
  std::optional<RankedVocabulary> pos_vocab;
  std::optional<grammar::GrammarVocabulary> grammar_vocab;
  std::shared_ptr<const SpellIndex> spell_index;
  std::shared_ptr<const postag::TaggerModel> tagger;
  std::shared_ptr<const FunctionWordList> function_words;

  // Throws StateError naming the first missing component.
  void require_fitted() const;
  // Digest over every fitted vocabulary and resource.
  std::string fingerprint() const;
  FeatureSchema schema() const;

  std::string vocab_json() const;
};

struct LinguisticResources {
  std::shared_ptr<const SpellIndex> spell_index;
  std::shared_ptr<const postag::TaggerModel> tagger;
  std::shared_ptr<const FunctionWordList> function_words;
};

// Fits every vocabulary on the training chunks. rules_per_chunk holds the
// grammar rule ids reported for each training chunk.
FittedArtifacts fit_artifacts(std::span<const corpus::Chunk> train_chunks, const LinguisticResources& resources,
                              std::span<const std::set<std::string>> rules_per_chunk);

FeatureVector assemble_features(const corpus::Chunk& chunk, const FeatureSchema& schema,
                                const FittedArtifacts& artifacts, const std::set<std::string>& chunk_rule_ids);

// Extracts every chunk (in parallel) into a labeled matrix.
LabeledMatrix extract_matrix(std::span<const corpus::Chunk> chunks, const FittedArtifacts& artifacts,
                             std::span<const std::set<std::string>> rules_per_chunk);

}  // namespace nli::lingfeat
