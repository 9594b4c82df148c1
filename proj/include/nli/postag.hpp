#pragma once

// Greedy left-to-right averaged-perceptron part-of-speech tagger.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nli::postag {

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// CoNLL-style input: token<TAB>tag per line, blank line between sentences.
std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path);
std::vector<TaggedSentence> parse_tagged_corpus(std::string_view contents, const std::string& source = "<memory>");
std::string format_tagged_corpus(const std::vector<TaggedSentence>& sentences);

inline constexpr std::size_t kSingleTagMinCount = 20;

struct TaggerModel {
  std::vector<std::string> tag_set;  // sorted
  // feature -> averaged weight per tag (indexed like tag_set)
  std::unordered_map<std::string, std::vector<double>> weights;
  std::map<std::string, std::string> single_tag_words;

  // Sorted JSON with stable key order.
  std::string to_json() const;
  static TaggerModel from_json(std::string_view json_text);
  void save(const std::filesystem::path& path) const;
  static TaggerModel load(const std::filesystem::path& path);
};

// Feature strings for token i given the two previously predicted tags.
std::vector<std::string> extract_features(const std::vector<std::string>& tokens, std::size_t i,
                                          std::string_view prev_tag, std::string_view prev2_tag);

TaggerModel train_tagger(const std::vector<TaggedSentence>& corpus, int epochs, std::uint64_t seed);

std::vector<std::string> tag_sentence(const TaggerModel& model, const std::vector<std::string>& tokens);

// Fraction of tokens tagged correctly.
double accuracy(const TaggerModel& model, const std::vector<TaggedSentence>& gold);

}  // namespace nli::postag
