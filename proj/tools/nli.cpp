// nli: command-line entry point for the native language identification
// pipeline.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/pipeline.hpp"

namespace fs = std::filesystem;
using nli::pipeline::RunConfig;

namespace {

struct Overrides {
  std::string config = "nli.json";
  std::optional<std::string> out_dir;
  std::optional<std::string> corpus;
  std::optional<std::string> cache_dir;
  std::optional<std::string> tagger_model;
  std::vector<std::string> embeddings;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> feature_set;
  std::optional<std::string> grammar_endpoint;
  bool offline = false;
  std::optional<std::size_t> threads;
  std::optional<bool> record_timing;
  bool strict_refit = false;
  std::optional<double> C;
  std::optional<int> max_iter;
  std::optional<int> folds;
  std::optional<std::size_t> n_holdout;
};

fs::path from_cwd(const std::string& s) { return fs::absolute(s).lexically_normal(); }

RunConfig build_config(const Overrides& o) {
  if (!fs::exists(o.config)) throw nli::ConfigError("config file not found: " + o.config);
  RunConfig c = RunConfig::load(o.config);
  if (o.out_dir) c.paths.out_dir = from_cwd(*o.out_dir);
  if (o.corpus) c.paths.corpus = from_cwd(*o.corpus);
  if (o.cache_dir) c.paths.cache_dir = from_cwd(*o.cache_dir);
  if (o.tagger_model) c.paths.tagger_model = from_cwd(*o.tagger_model);
  if (!o.embeddings.empty()) {
    c.paths.embeddings.clear();
    for (const auto& e : o.embeddings) c.paths.embeddings.push_back(from_cwd(e));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.feature_set) c.feature_set = nli::pipeline::parse_feature_set(*o.feature_set);
  c.grammar.endpoint = nli::grammar::resolve_endpoint(o.grammar_endpoint, c.grammar.endpoint);
  if (o.offline) c.grammar.offline = true;
  if (o.threads) c.threads = *o.threads;
  if (o.record_timing) c.evaluation.record_timing = *o.record_timing;
  if (o.strict_refit) c.evaluation.strict_refit = true;
  if (o.C) c.classifier.C = *o.C;
  if (o.max_iter) c.classifier.max_iter = *o.max_iter;
  if (o.folds) c.evaluation.folds = *o.folds;
  if (o.n_holdout) c.evaluation.n_holdout = *o.n_holdout;
  c.classifier.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Native language identification pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("-c,--config", o.config, "JSON run configuration")->capture_default_str();
  app.add_option("--out-dir", o.out_dir, "Output directory");
  app.add_option("--corpus", o.corpus, "Corpus JSONL");
  app.add_option("--cache-dir", o.cache_dir, "Grammar response cache directory");
  app.add_option("--tagger-model", o.tagger_model, "Pretrained tagger JSON");
  app.add_option("--embeddings", o.embeddings, "Embedding JSONL files (replaces the configured list)");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--feature-set", o.feature_set, "linguistic | embeddings | both");
  app.add_option("--grammar-endpoint", o.grammar_endpoint,
                 "Grammar service base URL (overrides NLI_GRAMMAR_ENDPOINT and the config)");
  app.add_flag("--offline", o.offline, "Serve grammar results from the cache only");
  app.add_option("--threads", o.threads, "Parallel folds (0 = all cores)");
  app.add_option("--record-timing", o.record_timing, "Record wall-clock durations (true/false)");
  app.add_flag("--strict-refit", o.strict_refit, "Refit linguistic vocabularies inside every CV fold");
  app.add_option("--C", o.C, "Inverse regularization strength");
  app.add_option("--max-iter", o.max_iter, "L-BFGS iteration cap");
  app.add_option("--folds", o.folds, "Cross-validation folds");
  app.add_option("--n-holdout", o.n_holdout, "Holdout size for length-sense");

  using Stage = void (*)(const RunConfig&, nli::pipeline::StageLog&);
  const std::vector<std::tuple<const char*, const char*, Stage>> stages = {
      {"prepare", "Ingest, balance and split the corpus into a chunk store", nli::pipeline::run_prepare},
      {"grammar-cache", "Prefetch grammar service responses for exp and oos chunks", nli::pipeline::run_grammar_cache},
      {"features", "Fit vocabularies on exp and extract linguistic feature matrices", nli::pipeline::run_features},
      {"embed-import", "Validate embedding files and join them to the chunk store", nli::pipeline::run_embed_import},
      {"cv", "Stratified cross-validation on exp", nli::pipeline::run_cv},
      {"oos", "Train on exp and score the out-of-sample split", nli::pipeline::run_oos},
      {"length-sense", "Accuracy on holdout chunks cut to fractions of their length", nli::pipeline::run_length_sense},
      {"cluster", "Ward clustering of per-language embedding centroids", nli::pipeline::run_cluster},
      {"pca", "2-D PCA of per-language embedding centroids", nli::pipeline::run_pca},
      {"report", "Collect results into the results table and length series", nli::pipeline::run_report},
  };
  Stage chosen = nullptr;
  for (const auto& [name, help, fn] : stages) {
    app.add_subcommand(name, help)->callback([&chosen, f = fn] { chosen = f; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc != 0) std::cerr << app.help();
    return rc == 0 ? 0 : nli::exit_code(nli::ErrorKind::config);
  }

  try {
    const RunConfig config = build_config(o);
    nli::pipeline::StageLog log;
    chosen(config, log);
    for (const auto& line : log.lines) std::cout << line << "\n";
    return 0;
  } catch (const nli::Error& e) {
    std::cerr << "nli: " << nli::to_string(e.kind()) << " error: " << e.what() << "\n";
    return nli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "nli: io error: " << e.what() << "\n";
    return nli::exit_code(nli::ErrorKind::io);
  }
}
