#pragma once

// Run configuration and the pipeline stages behind the command line. Stages
// talk to each other only through files under the output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nli/classifier/logreg.hpp"
#include "nli/corpus.hpp"

namespace nli::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

enum class FeatureSet { linguistic, embeddings, both };
const char* to_string(FeatureSet f) noexcept;
FeatureSet parse_feature_set(std::string_view s);

struct Paths {
  std::filesystem::path corpus;
  std::filesystem::path dictionary;
  std::filesystem::path function_words;
  std::filesystem::path tagged_corpus;
  std::filesystem::path tagger_model;  // optional; trained from tagged_corpus when empty
  std::vector<std::filesystem::path> embeddings;
  std::filesystem::path cache_dir;
  std::filesystem::path out_dir;
};

struct Sampling {
  std::size_t authors_per_language = 273;
  std::size_t chunk_cap = 17;
  std::size_t europe_authors_per_language = 104;
  std::size_t europe_chunk_cap = 3;
};

struct GrammarSettings {
  std::string endpoint;
  bool offline = false;
  std::size_t max_in_flight = 4;
  double requests_per_second = 0.0;
};

struct Evaluation {
  int folds = 10;
  std::vector<int> percents{10, 20, 40, 80};
  std::size_t n_holdout = 1000;
  bool strict_refit = false;  // refit vocabularies inside every CV fold
  bool record_timing = true;
};

struct RunConfig {
  Paths paths;
  Sampling sampling;
  std::uint64_t seed = 0;
  int tagger_epochs = 5;
  classifier::TrainConfig classifier;
  GrammarSettings grammar;
  FeatureSet feature_set = FeatureSet::linguistic;
  Evaluation evaluation;
  std::size_t threads = 0;

  // Relative paths in a config file resolve against the file's directory.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::ordered_json to_json() const;
  // to_json() without the settings that cannot affect outputs.
  nlohmann::ordered_json canonical_json() const;
  // sha256 of canonical_json().
  std::string hash() const;
};

// Named seed streams derived from the master seed.
nlohmann::ordered_json stage_seeds(std::uint64_t seed);

// Writes <dir>/run-manifest.json listing every other file in dir with its
// sha256.
void write_manifest(const std::filesystem::path& dir, const RunConfig& config, const std::string& stage);

struct StageLog {
  std::vector<std::string> lines;
};

void run_prepare(const RunConfig& config, StageLog& log);
void run_grammar_cache(const RunConfig& config, StageLog& log);
void run_features(const RunConfig& config, StageLog& log);
void run_embed_import(const RunConfig& config, StageLog& log);
void run_cv(const RunConfig& config, StageLog& log);
void run_oos(const RunConfig& config, StageLog& log);
void run_length_sense(const RunConfig& config, StageLog& log);
void run_cluster(const RunConfig& config, StageLog& log);
void run_pca(const RunConfig& config, StageLog& log);
void run_report(const RunConfig& config, StageLog& log);

// Stage directories under out_dir.
std::filesystem::path prepare_dir(const RunConfig& c);
std::filesystem::path features_dir(const RunConfig& c);
std::filesystem::path embeddings_dir(const RunConfig& c);

}  // namespace nli::pipeline
