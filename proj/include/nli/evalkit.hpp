#pragma once

// Cross-validation, out-of-sample evaluation, text-length sensitivity and
// result tables.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nli/classifier/logreg.hpp"
#include "nli/corpus.hpp"
#include "nli/matrix.hpp"

namespace nli::evalkit {

inline constexpr int kDefaultFolds = 10;
inline constexpr std::array<int, 4> kDefaultPercents = {10, 20, 40, 80};
inline constexpr std::size_t kDefaultHoldout = 1000;

struct FoldAssignment {
  int k = kDefaultFolds;
  std::vector<std::string> ids;
  std::vector<int> fold_of;            // aligned with ids
  std::vector<std::string> warnings;   // classes smaller than k

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

// Per class (labels ascending), members are shuffled by the seed and dealt
// round-robin; the deal position carries over from one class to the next.
FoldAssignment stratified_folds(std::span<const std::string> ids, std::span<const std::string> labels, int k,
                                std::uint64_t seed);

struct EvalReport {
  std::string model_name;
  double duration_hours = 0.0;
  double acva = 0.0;
  std::optional<double> oosa;
  std::vector<double> per_fold;
  std::map<int, double> length_accuracy;  // percent -> accuracy

  void validate() const;
};

struct CvOptions {
  std::string model_name = "model";
  // Seconds spent producing the feature matrix, added to training time.
  double featurize_seconds = 0.0;
  // When false the duration is reported as 0 so reruns are byte-identical.
  bool record_timing = true;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

EvalReport cross_validate(const LabeledMatrix& data, const FoldAssignment& folds,
                          const classifier::TrainConfig& train_config, const CvOptions& options = {});

// Builds train/test matrices for one fold from scratch, e.g. with
// vocabularies refit on the training rows only.
struct FoldMatrices {
  LabeledMatrix train;
  LabeledMatrix test;
};
using FoldFeaturizer = std::function<FoldMatrices(std::span<const std::size_t> train_rows,
                                                  std::span<const std::size_t> test_rows)>;

EvalReport cross_validate_refit(const FoldAssignment& folds, const FoldFeaturizer& featurize,
                                const classifier::TrainConfig& train_config, const CvOptions& options = {});

// Fingerprints of both matrices must agree: D_oos has to be featurized with
// artifacts fitted on D_exp.
double evaluate_oos(const LabeledMatrix& train, const LabeledMatrix& oos,
                    const classifier::TrainConfig& train_config);

// First max(1, round_half_up(p * L / 100)) of the L lines.
std::size_t slice_length(std::size_t lines, int percent);
corpus::Chunk slice_chunk(const corpus::Chunk& chunk, int percent);
std::string slice_id(const std::string& chunk_id, int percent);

using ChunkFeaturizer = std::function<LabeledMatrix(std::span<const corpus::Chunk>)>;

struct LengthOptions {
  std::vector<int> percents{kDefaultPercents.begin(), kDefaultPercents.end()};
  std::size_t n_holdout = kDefaultHoldout;
  std::uint64_t seed = 0;
};

struct LengthResult {
  std::map<int, double> accuracy;
  std::vector<std::string> holdout_ids;
  std::vector<std::string> train_ids;
};

// Trains once on every chunk outside a seeded holdout sample, then scores the
// holdout chunks cut to each percentage of their lines. Sliced chunks carry
// ids from slice_id().
LengthResult length_sensitivity(std::span<const corpus::Chunk> chunks, const ChunkFeaturizer& featurize,
                                const classifier::TrainConfig& train_config, const LengthOptions& options);

// ".475" style: three decimals without the leading zero below 1.
std::string format_accuracy(double v);
std::string format_hours(double v);

std::string render_table(std::span<const EvalReport> reports);
std::string render_figure_tsv(std::span<const EvalReport> reports);
std::string report_json(std::span<const EvalReport> reports, const std::string& config_hash);

// Writes report.json, report.txt and figure1.tsv into out_dir.
void emit_report(std::span<const EvalReport> reports, const std::filesystem::path& out_dir,
                 const std::string& config_hash);
std::vector<EvalReport> read_reports(const std::filesystem::path& report_json_path);
EvalReport report_from_json(const std::string& json_text);
std::string report_to_json(const EvalReport& report, const std::string& config_hash);

}  // namespace nli::evalkit
