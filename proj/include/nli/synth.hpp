#pragma once

// Synthetic fixtures: a seeded multi-language learner corpus with lexical,
// spelling and grammar tics, a Penn-tagged training corpus from the same
// grammar, a rule-based stand-in for the grammar service, and
// class-correlated embedding files.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nli/corpus.hpp"
#include "nli/embedstore.hpp"
#include "nli/grammar.hpp"
#include "nli/postag.hpp"

namespace nli::synth {

struct CorpusOptions {
  std::uint64_t seed = 20240611;
  std::size_t authors_per_language = 8;         // non_europe
  std::size_t europe_authors_per_language = 2;
  std::size_t sentences_per_author = 1250;
  std::size_t europe_sentences_per_author = 350;
  double url_rate = 0.01;           // per sentence
  double double_space_rate = 0.05;  // per sentence
};

// The five pseudo-language labels, ascending.
const std::vector<std::string>& language_names();

std::vector<corpus::AuthorRecord> generate_corpus(const CorpusOptions& options = {});

// Error-free sentences with gold Penn tags.
std::vector<postag::TaggedSentence> generate_tagged(std::size_t n_sentences, std::uint64_t seed);

// Deterministic rule-based checker speaking the /v2/check response format.
class StubChecker {
 public:
  // Words outside `dictionary` are reported as misspellings; an empty set
  // disables that rule.
  explicit StubChecker(std::unordered_set<std::string> dictionary = {});

  std::vector<grammar::GrammarMatch> check(std::string_view text) const;
  std::string check_json(std::string_view text) const;

  static const std::vector<std::string>& rule_ids();

 private:
  std::unordered_set<std::string> dictionary_;
};

std::unordered_set<std::string> load_word_set(const std::filesystem::path& frequency_dictionary);

// In-process transport backed by a StubChecker.
class StubTransport final : public grammar::Transport {
 public:
  explicit StubTransport(std::shared_ptr<const StubChecker> checker) : checker_(std::move(checker)) {}
  grammar::HttpResponse post_check(std::string_view text, std::string_view language) override;
  std::uint64_t calls() const noexcept { return calls_.load(); }

 private:
  std::shared_ptr<const StubChecker> checker_;
  std::atomic<std::uint64_t> calls_{0};
};

struct EmbeddingOptions {
  std::string model_tag = "synthetic";
  int input_size = 2048;
  std::uint64_t seed = 7;
  double separation = 1.0;  // norm of each class mean
  double noise = 1.0;       // per-coordinate standard deviation times 1/sqrt(dim)
  // Also emit records for chunk_id@p slices, with noise growing as p shrinks.
  std::vector<int> slice_percents;
};

// One record per chunk: class mean plus isotropic Gaussian noise.
std::vector<embedstore::EmbeddingRecord> class_embeddings(std::span<const corpus::Chunk> chunks,
                                                          const EmbeddingOptions& options = {});

}  // namespace nli::synth
