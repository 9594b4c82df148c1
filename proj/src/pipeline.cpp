#include "nli/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "nli/embedstore.hpp"
#include "nli/errors.hpp"
#include "nli/evalkit.hpp"
#include "nli/grammar.hpp"
#include "nli/io.hpp"
#include "nli/lingfeat/features.hpp"
#include "nli/matrix.hpp"
#include "nli/rng.hpp"
#include "nli/spacelab.hpp"

#ifndef NLI_RESOURCE_DIR
#define NLI_RESOURCE_DIR "resources"
#endif

namespace nli::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(FeatureSet f) noexcept {
  switch (f) {
    case FeatureSet::linguistic: return "linguistic";
    case FeatureSet::embeddings: return "embeddings";
    case FeatureSet::both: return "both";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view s) {
  if (s == "linguistic") return FeatureSet::linguistic;
  if (s == "embeddings") return FeatureSet::embeddings;
  if (s == "both") return FeatureSet::both;
  throw ConfigError("feature_set must be linguistic, embeddings or both, got \"" + std::string(s) + "\"");
}

// ---- configuration -----------------------------------------------------------

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

std::string portable(const fs::path& p) {
  if (p.empty()) return "";
  // Relative to the working directory keeps hashes independent of where the
  // checkout lives.
  const fs::path rel = p.lexically_relative(fs::current_path());
  return (rel.empty() ? p : rel).generic_string();
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj.at(key).is_null()) out = obj.at(key).get<T>();
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
      throw ConfigError("unknown key \"" + k + "\" in " + where);
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  c.paths.dictionary = fs::path(NLI_RESOURCE_DIR) / "frequency_dictionary_en.txt";
  c.paths.function_words = fs::path(NLI_RESOURCE_DIR) / "function_words.txt";
  try {
    check_keys(j, {"paths", "sampling", "seed", "tagger_epochs", "classifier", "grammar", "feature_set", "evaluation",
                   "threads"},
               "config");
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      check_keys(p, {"corpus", "dictionary", "function_words", "tagged_corpus", "tagger_model", "embeddings",
                     "cache_dir", "out_dir"},
                 "paths");
      const auto path_of = [&](const char* key, fs::path& out) {
        if (p.contains(key)) out = resolve(base_dir, p.at(key).get<std::string>());
      };
      path_of("corpus", c.paths.corpus);
      path_of("dictionary", c.paths.dictionary);
      path_of("function_words", c.paths.function_words);
      path_of("tagged_corpus", c.paths.tagged_corpus);
      path_of("tagger_model", c.paths.tagger_model);
      path_of("cache_dir", c.paths.cache_dir);
      path_of("out_dir", c.paths.out_dir);
      if (p.contains("embeddings")) {
        for (const auto& e : p.at("embeddings")) c.paths.embeddings.push_back(resolve(base_dir, e.get<std::string>()));
      }
    }
    if (j.contains("sampling")) {
      const json& s = j.at("sampling");
      check_keys(s, {"authors_per_language", "chunk_cap", "europe_authors_per_language", "europe_chunk_cap"},
                 "sampling");
      read_opt(s, "authors_per_language", c.sampling.authors_per_language);
      read_opt(s, "chunk_cap", c.sampling.chunk_cap);
      read_opt(s, "europe_authors_per_language", c.sampling.europe_authors_per_language);
      read_opt(s, "europe_chunk_cap", c.sampling.europe_chunk_cap);
    }
    read_opt(j, "seed", c.seed);
    read_opt(j, "tagger_epochs", c.tagger_epochs);
    read_opt(j, "threads", c.threads);
    if (j.contains("classifier")) {
      const json& k = j.at("classifier");
      check_keys(k, {"C", "max_iter", "tol", "lbfgs_memory", "standardize"}, "classifier");
      read_opt(k, "C", c.classifier.C);
      read_opt(k, "max_iter", c.classifier.max_iter);
      read_opt(k, "tol", c.classifier.tol);
      read_opt(k, "lbfgs_memory", c.classifier.lbfgs_memory);
      read_opt(k, "standardize", c.classifier.standardize);
    }
    if (j.contains("grammar")) {
      const json& g = j.at("grammar");
      check_keys(g, {"endpoint", "offline", "max_in_flight", "requests_per_second"}, "grammar");
      read_opt(g, "endpoint", c.grammar.endpoint);
      read_opt(g, "offline", c.grammar.offline);
      read_opt(g, "max_in_flight", c.grammar.max_in_flight);
      read_opt(g, "requests_per_second", c.grammar.requests_per_second);
    }
    if (j.contains("feature_set")) c.feature_set = parse_feature_set(j.at("feature_set").get<std::string>());
    if (j.contains("evaluation")) {
      const json& e = j.at("evaluation");
      check_keys(e, {"folds", "percents", "n_holdout", "strict_refit", "record_timing"}, "evaluation");
      read_opt(e, "folds", c.evaluation.folds);
      read_opt(e, "percents", c.evaluation.percents);
      read_opt(e, "n_holdout", c.evaluation.n_holdout);
      read_opt(e, "strict_refit", c.evaluation.strict_refit);
      read_opt(e, "record_timing", c.evaluation.record_timing);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  if (c.paths.out_dir.empty()) c.paths.out_dir = (base_dir / "out").lexically_normal();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  const std::string text = io::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, fs::absolute(path).parent_path());
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  std::vector<std::string> emb;
  for (const auto& e : paths.embeddings) emb.push_back(portable(e));
  j["paths"] = {{"corpus", portable(paths.corpus)},
                {"dictionary", portable(paths.dictionary)},
                {"function_words", portable(paths.function_words)},
                {"tagged_corpus", portable(paths.tagged_corpus)},
                {"tagger_model", portable(paths.tagger_model)},
                {"embeddings", emb},
                {"cache_dir", portable(paths.cache_dir)},
                {"out_dir", portable(paths.out_dir)}};
  j["sampling"] = {{"authors_per_language", sampling.authors_per_language},
                   {"chunk_cap", sampling.chunk_cap},
                   {"europe_authors_per_language", sampling.europe_authors_per_language},
                   {"europe_chunk_cap", sampling.europe_chunk_cap}};
  j["seed"] = seed;
  j["tagger_epochs"] = tagger_epochs;
  j["classifier"] = {{"C", classifier.C},
                     {"max_iter", classifier.max_iter},
                     {"tol", classifier.tol},
                     {"lbfgs_memory", classifier.lbfgs_memory},
                     {"standardize", classifier.standardize}};
  j["grammar"] = {{"endpoint", grammar.endpoint},
                  {"offline", grammar.offline},
                  {"max_in_flight", grammar.max_in_flight},
                  {"requests_per_second", grammar.requests_per_second}};
  j["feature_set"] = pipeline::to_string(feature_set);
  j["evaluation"] = {{"folds", evaluation.folds},
                     {"percents", evaluation.percents},
                     {"n_holdout", evaluation.n_holdout},
                     {"strict_refit", evaluation.strict_refit},
                     {"record_timing", evaluation.record_timing}};
  j["threads"] = threads;
  return j;
}

ordered_json RunConfig::canonical_json() const {
  // Settings that cannot change any output are left out: where outputs go,
  // thread counts and how the grammar service is reached.
  ordered_json j = to_json();
  j.erase("threads");
  j["paths"].erase("out_dir");
  j["grammar"].erase("endpoint");
  j["grammar"].erase("max_in_flight");
  j["grammar"].erase("requests_per_second");
  return j;
}

std::string RunConfig::hash() const { return io::sha256_hex(canonical_json().dump()); }

namespace {

constexpr const char* kSeedStages[] = {"balance-non_europe", "balance-europe", "cap-non_europe", "cap-europe",
                                       "split", "tagger", "cv", "length"};

std::uint64_t seed_for(const RunConfig& c, std::string_view stage) { return derive_seed(c.seed, stage); }

}  // namespace

ordered_json stage_seeds(std::uint64_t seed) {
  ordered_json j;
  j["master"] = seed;
  for (const char* s : kSeedStages) j[s] = derive_seed(seed, s);
  return j;
}

void write_manifest(const fs::path& dir, const RunConfig& config, const std::string& stage) {
  std::vector<std::string> files;
  if (fs::exists(dir)) {
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string rel = e.path().lexically_relative(dir).generic_string();
      if (rel == "run-manifest.json" || rel.find(".tmp") != std::string::npos) continue;
      files.push_back(rel);
    }
  }
  std::sort(files.begin(), files.end());
  ordered_json outputs = ordered_json::array();
  for (const auto& f : files) outputs.push_back({{"file", f}, {"sha256", io::sha256_hex(io::read_file(dir / f))}});
  ordered_json j;
  j["stage"] = stage;
  j["version"] = kVersion;
  j["config_hash"] = config.hash();
  j["seeds"] = stage_seeds(config.seed);
  j["config"] = config.canonical_json();
  j["outputs"] = outputs;
  io::write_file(dir / "run-manifest.json", j.dump(2) + "\n");
}

fs::path prepare_dir(const RunConfig& c) { return c.paths.out_dir / "prepare"; }
fs::path features_dir(const RunConfig& c) { return c.paths.out_dir / "features"; }
fs::path embeddings_dir(const RunConfig& c) { return c.paths.out_dir / "embeddings"; }

namespace {

fs::path stage_dir(const RunConfig& c, const char* name) { return c.paths.out_dir / name; }

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw ConfigError(std::string("config does not set paths.") + what);
  if (!fs::exists(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

void note(StageLog& log, std::string line) { log.lines.push_back(std::move(line)); }

std::vector<corpus::Chunk> load_chunks(const RunConfig& c) {
  const fs::path p = prepare_dir(c) / "chunks.jsonl";
  if (!fs::exists(p)) throw IoError("chunk store not found: " + p.string() + " (run prepare first)");
  return corpus::read_chunks(p);
}

// ---- prepare -------------------------------------------------------------------

std::vector<std::vector<corpus::Chunk>> chunk_groups(std::span<const corpus::AuthorRecord> authors) {
  std::vector<std::vector<corpus::Chunk>> out;
  out.reserve(authors.size());
  for (const auto& a : authors) out.push_back(corpus::chunk_author(a));
  return out;
}

}  // namespace

void run_prepare(const RunConfig& c, StageLog& log) {
  require_path(c.paths.corpus, "corpus");
  std::vector<corpus::AuthorRecord> non_europe;
  std::vector<corpus::AuthorRecord> europe;
  for (auto& r : corpus::load_corpus(c.paths.corpus)) {
    auto clean = corpus::preprocess_record(std::move(r));
    (clean.partition == corpus::Partition::europe ? europe : non_europe).push_back(std::move(clean));
  }
  if (non_europe.empty()) throw ConfigError("corpus has no non_europe authors");

  const auto ne = corpus::balance_authors(non_europe, c.sampling.authors_per_language,
                                          seed_for(c, "balance-non_europe"));
  const auto ne_chunks =
      corpus::cap_chunks(chunk_groups(ne), c.sampling.chunk_cap, seed_for(c, "cap-non_europe"));
  const corpus::SplitResult split = corpus::make_splits(ne_chunks, seed_for(c, "split"));

  std::vector<corpus::Chunk> oos;
  if (!europe.empty()) {
    const auto eu = corpus::balance_authors(europe, c.sampling.europe_authors_per_language,
                                            seed_for(c, "balance-europe"));
    oos = corpus::cap_chunks(chunk_groups(eu), c.sampling.europe_chunk_cap, seed_for(c, "cap-europe"));
  }

  std::vector<corpus::Chunk> all;
  all.insert(all.end(), split.tune.begin(), split.tune.end());
  all.insert(all.end(), split.exp.begin(), split.exp.end());
  all.insert(all.end(), oos.begin(), oos.end());

  const fs::path dir = prepare_dir(c);
  corpus::write_chunks(all, dir / "chunks.jsonl");
  corpus::write_split_manifest(all, dir / "splits.jsonl");

  ordered_json summary;
  summary["config_hash"] = c.hash();
  summary["labels"] = corpus::LabelSet::from_chunks(all).labels();
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& ch : all) ++counts[corpus::to_string(ch.split)][ch.label];
  ordered_json cj;
  for (const auto& [s, per_label] : counts) cj[s] = per_label;
  summary["chunks"] = cj;
  io::write_file(dir / "summary.json", summary.dump(2) + "\n");
  write_manifest(dir, c, "prepare");
  note(log, "prepare: " + std::to_string(split.tune.size()) + " tune, " + std::to_string(split.exp.size()) +
                " exp, " + std::to_string(oos.size()) + " oos chunks -> " + dir.string());
}

// ---- grammar -------------------------------------------------------------------

namespace {

std::unique_ptr<grammar::GrammarClient> make_client(const RunConfig& c) {
  if (c.paths.cache_dir.empty()) throw ConfigError("config does not set paths.cache_dir");
  grammar::ClientOptions opt;
  opt.offline = c.grammar.offline || c.grammar.endpoint.empty();
  opt.max_in_flight = c.grammar.max_in_flight;
  opt.requests_per_second = c.grammar.requests_per_second;
  std::shared_ptr<grammar::Transport> transport;
  if (!opt.offline) transport = std::make_shared<grammar::HttpTransport>(c.grammar.endpoint);
  return std::make_unique<grammar::GrammarClient>(std::move(transport), grammar::ResponseCache(c.paths.cache_dir), opt);
}

std::vector<corpus::Chunk> concat(std::span<const corpus::Chunk> a, std::span<const corpus::Chunk> b) {
  std::vector<corpus::Chunk> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

void run_grammar_cache(const RunConfig& c, StageLog& log) {
  const auto chunks = load_chunks(c);
  const auto targets = concat(corpus::select_split(chunks, corpus::Split::exp),
                              corpus::select_split(chunks, corpus::Split::oos));
  auto client = make_client(c);
  const auto rules = client->check_chunks(targets);
  std::size_t total = 0;
  for (const auto& r : rules) total += r.size();
  const fs::path dir = stage_dir(c, "grammar-cache");
  ordered_json j;
  j["config_hash"] = c.hash();
  j["chunks"] = targets.size();
  j["distinct_rule_presences"] = total;
  io::write_file(dir / "summary.json", j.dump(2) + "\n");
  write_manifest(dir, c, "grammar-cache");
  note(log, "grammar-cache: " + std::to_string(targets.size()) + " chunks, " +
                std::to_string(client->network_calls()) + " service calls, " + std::to_string(client->cache_hits()) +
                " cache hits");
}

// ---- linguistic features ----------------------------------------------------------

namespace {

lingfeat::LinguisticResources load_resources(const RunConfig& c, StageLog& log) {
  require_path(c.paths.dictionary, "dictionary");
  require_path(c.paths.function_words, "function_words");
  lingfeat::LinguisticResources r;
  r.spell_index = std::make_shared<lingfeat::SpellIndex>(lingfeat::Dictionary::load(c.paths.dictionary));
  r.function_words =
      std::make_shared<lingfeat::FunctionWordList>(lingfeat::FunctionWordList::load(c.paths.function_words));
  if (!c.paths.tagger_model.empty()) {
    require_path(c.paths.tagger_model, "tagger_model");
    r.tagger = std::make_shared<postag::TaggerModel>(postag::TaggerModel::load(c.paths.tagger_model));
  } else {
    require_path(c.paths.tagged_corpus, "tagged_corpus");
    const auto tagged = postag::read_tagged_corpus(c.paths.tagged_corpus);
    r.tagger = std::make_shared<postag::TaggerModel>(
        postag::train_tagger(tagged, c.tagger_epochs, seed_for(c, "tagger")));
    note(log, "features: trained tagger on " + std::to_string(tagged.size()) + " sentences");
  }
  return r;
}

struct LinguisticData {
  lingfeat::FittedArtifacts artifacts;
  std::vector<corpus::Chunk> exp;
  std::vector<std::set<std::string>> exp_rules;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void run_features(const RunConfig& c, StageLog& log) {
  const auto chunks = load_chunks(c);
  const auto exp = corpus::select_split(chunks, corpus::Split::exp);
  const auto oos = corpus::select_split(chunks, corpus::Split::oos);
  if (exp.empty()) throw ConfigError("no exp chunks in the chunk store");

  const auto resources = load_resources(c, log);
  auto client = make_client(c);

  const auto t0 = std::chrono::steady_clock::now();
  const auto exp_rules = client->check_chunks(exp);
  const auto artifacts = lingfeat::fit_artifacts(exp, resources, exp_rules);
  LabeledMatrix m_exp = lingfeat::extract_matrix(exp, artifacts, exp_rules);
  const double seconds = seconds_since(t0);

  const std::string hash = c.hash();
  const fs::path dir = features_dir(c);
  m_exp.config_hash = hash;
  write_feature_matrix(m_exp, dir / "exp.features");
  if (!oos.empty()) {
    const auto oos_rules = client->check_chunks(oos);
    LabeledMatrix m_oos = lingfeat::extract_matrix(oos, artifacts, oos_rules);
    m_oos.config_hash = hash;
    write_feature_matrix(m_oos, dir / "oos.features");
  }

  ordered_json a;
  a["config_hash"] = hash;
  a["fingerprint"] = artifacts.fingerprint();
  const auto schema = artifacts.schema();
  ordered_json blocks = ordered_json::array();
  for (std::size_t b = 0; b < lingfeat::kBlockCount; ++b) {
    const auto block = static_cast<lingfeat::Block>(b);
    blocks.push_back({{"block", lingfeat::to_string(block)}, {"offset", schema.offset(block)}, {"size", schema.size(block)}});
  }
  a["schema"] = blocks;
  a["total_dim"] = schema.total_dim();
  a["vocabularies"] = ordered_json::parse(artifacts.vocab_json());
  io::write_file(dir / "artifacts.json", a.dump(2) + "\n");

  io::write_file(dir / "tagger.json", resources.tagger->to_json());

  ordered_json timing;
  timing["config_hash"] = hash;
  timing["featurize_seconds"] = c.evaluation.record_timing ? seconds : 0.0;
  io::write_file(dir / "timing.json", timing.dump(2) + "\n");
  write_manifest(dir, c, "features");
  note(log, "features: " + std::to_string(m_exp.rows()) + " exp rows, dim " + std::to_string(m_exp.cols()) +
                " (grammar vocabulary " + std::to_string(schema.size(lingfeat::Block::grammar)) + ")");
}

// ---- embeddings -------------------------------------------------------------------

namespace {

std::string embedding_model_name(const std::string& tag, int input_size) {
  return tag + "-" + std::to_string(input_size);
}

bool any_present(std::span<const embedstore::EmbeddingRecord> records, std::span<const corpus::Chunk> chunks) {
  std::set<std::string_view> ids;
  for (const auto& r : records) ids.insert(r.chunk_id);
  return std::any_of(chunks.begin(), chunks.end(), [&](const auto& ch) { return ids.contains(ch.chunk_id); });
}

}  // namespace

void run_embed_import(const RunConfig& c, StageLog& log) {
  if (c.paths.embeddings.empty()) throw ConfigError("no embedding files configured (paths.embeddings)");
  const auto chunks = load_chunks(c);
  const auto exp = corpus::select_split(chunks, corpus::Split::exp);
  const auto oos = corpus::select_split(chunks, corpus::Split::oos);
  const std::string hash = c.hash();
  const fs::path dir = embeddings_dir(c);

  ordered_json index = ordered_json::array();
  std::set<std::string> names;
  for (const auto& file : c.paths.embeddings) {
    require_path(file, "embeddings");
    const auto records = embedstore::read_embeddings(file);
    auto joined = embedstore::join(records, exp);
    const std::string name = embedding_model_name(joined.model_tag, joined.input_size);
    if (!names.insert(name).second) throw ConfigError("two embedding files share the model name " + name);
    joined.matrix.config_hash = hash;
    write_feature_matrix(joined.matrix, dir / (name + ".exp.features"));
    bool has_oos = false;
    if (!oos.empty() && any_present(records, oos)) {
      auto joined_oos = embedstore::join(records, oos);
      if (joined_oos.model_tag != joined.model_tag || joined_oos.input_size != joined.input_size) {
        throw ProtocolError(file.string() + ": oos records come from a different model");
      }
      joined_oos.matrix.config_hash = hash;
      write_feature_matrix(joined_oos.matrix, dir / (name + ".oos.features"));
      has_oos = true;
    }
    index.push_back({{"name", name},
                     {"model_tag", joined.model_tag},
                     {"input_size", joined.input_size},
                     {"source_sha256", io::sha256_hex(io::read_file(file))},
                     {"exp_rows", joined.matrix.rows()},
                     {"has_oos", has_oos}});
    note(log, "embed-import: " + name + " joined " + std::to_string(joined.matrix.rows()) + " exp rows" +
                  (has_oos ? " plus oos" : ""));
  }
  ordered_json j;
  j["config_hash"] = hash;
  j["models"] = index;
  io::write_file(dir / "index.json", j.dump(2) + "\n");
  write_manifest(dir, c, "embed-import");
}

// ---- model matrices ------------------------------------------------------------------

namespace {

struct ModelSpec {
  std::string name;
  bool linguistic = false;
  std::string embedding;  // empty when absent
};

std::vector<std::string> embedding_models(const RunConfig& c) {
  const fs::path p = embeddings_dir(c) / "index.json";
  if (!fs::exists(p)) throw IoError("embedding index not found: " + p.string() + " (run embed-import first)");
  std::vector<std::string> out;
  const json index = json::parse(io::read_file(p));
  for (const auto& m : index.at("models")) out.push_back(m.at("name").get<std::string>());
  return out;
}

std::vector<ModelSpec> model_specs(const RunConfig& c) {
  std::vector<ModelSpec> out;
  if (c.feature_set == FeatureSet::linguistic) {
    out.push_back({"linguistic", true, ""});
    return out;
  }
  for (const auto& e : embedding_models(c)) {
    if (c.feature_set == FeatureSet::embeddings) {
      out.push_back({e, false, e});
    } else {
      out.push_back({"linguistic+" + e, true, e});
    }
  }
  return out;
}

std::optional<LabeledMatrix> load_matrix(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  return read_feature_matrix(p);
}

// part is "exp" or "oos".
std::optional<LabeledMatrix> model_matrix(const RunConfig& c, const ModelSpec& spec, const std::string& part) {
  std::optional<LabeledMatrix> ling;
  std::optional<LabeledMatrix> emb;
  if (spec.linguistic) {
    ling = load_matrix(features_dir(c) / (part + ".features"));
    if (!ling) {
      if (part == "oos") return std::nullopt;
      throw IoError("linguistic feature matrix missing (run features first)");
    }
  }
  if (!spec.embedding.empty()) {
    emb = load_matrix(embeddings_dir(c) / (spec.embedding + "." + part + ".features"));
    if (!emb) {
      if (part == "oos") return std::nullopt;
      throw IoError("embedding matrix for " + spec.embedding + " missing (run embed-import first)");
    }
  }
  if (ling && emb) return hstack(*ling, *emb);
  return ling ? ling : emb;
}

double featurize_seconds(const RunConfig& c, const ModelSpec& spec) {
  if (!spec.linguistic) return 0.0;
  const fs::path p = features_dir(c) / "timing.json";
  if (!fs::exists(p)) return 0.0;
  return json::parse(io::read_file(p)).value("featurize_seconds", 0.0);
}

std::string file_stem(const std::string& model_name) {
  std::string s = model_name;
  for (char& ch : s) {
    if (ch == '/' || ch == '\\' || ch == ' ') ch = '_';
  }
  return s;
}

}  // namespace

void run_cv(const RunConfig& c, StageLog& log) {
  const fs::path dir = stage_dir(c, "cv");
  const std::string hash = c.hash();
  for (const auto& spec : model_specs(c)) {
    const LabeledMatrix data = *model_matrix(c, spec, "exp");
    const auto folds = evalkit::stratified_folds(data.ids, data.labels, c.evaluation.folds, seed_for(c, "cv"));
    for (const auto& w : folds.warnings) note(log, "cv: warning: " + w);

    evalkit::CvOptions opt;
    opt.model_name = spec.name;
    opt.record_timing = c.evaluation.record_timing;
    opt.featurize_seconds = featurize_seconds(c, spec);
    opt.threads = c.threads;

    evalkit::EvalReport report;
    if (c.evaluation.strict_refit && spec.linguistic) {
      const auto chunks = corpus::select_split(load_chunks(c), corpus::Split::exp);
      StageLog quiet;
      const auto resources = load_resources(c, quiet);
      auto client = make_client(c);
      const auto rules = client->check_chunks(chunks);
      std::optional<LabeledMatrix> emb;
      if (!spec.embedding.empty()) emb = load_matrix(embeddings_dir(c) / (spec.embedding + ".exp.features"));
      const auto featurize = [&](std::span<const std::size_t> train_rows, std::span<const std::size_t> test_rows) {
        const auto pick = [&](std::span<const std::size_t> rows) {
          std::pair<std::vector<corpus::Chunk>, std::vector<std::set<std::string>>> out;
          for (std::size_t r : rows) {
            out.first.push_back(chunks[r]);
            out.second.push_back(rules[r]);
          }
          return out;
        };
        const auto [train_chunks, train_rules] = pick(train_rows);
        const auto [test_chunks, test_rules] = pick(test_rows);
        const auto artifacts = lingfeat::fit_artifacts(train_chunks, resources, train_rules);
        evalkit::FoldMatrices m{lingfeat::extract_matrix(train_chunks, artifacts, train_rules),
                                lingfeat::extract_matrix(test_chunks, artifacts, test_rules)};
        if (emb) {
          m.train = hstack(m.train, select_rows(*emb, train_rows));
          m.test = hstack(m.test, select_rows(*emb, test_rows));
        }
        return m;
      };
      report = evalkit::cross_validate_refit(folds, featurize, c.classifier, opt);
    } else {
      report = evalkit::cross_validate(data, folds, c.classifier, opt);
    }
    io::write_file(dir / (file_stem(spec.name) + ".json"), evalkit::report_to_json(report, hash));
    note(log, "cv: " + spec.name + " acva " + evalkit::format_accuracy(report.acva) + " over " +
                  std::to_string(report.per_fold.size()) + " folds");
  }
  write_manifest(dir, c, "cv");
}

void run_oos(const RunConfig& c, StageLog& log) {
  const fs::path dir = stage_dir(c, "oos");
  const std::string hash = c.hash();
  std::size_t done = 0;
  for (const auto& spec : model_specs(c)) {
    const auto oos = model_matrix(c, spec, "oos");
    if (!oos) {
      note(log, "oos: " + spec.name + " has no out-of-sample matrix, skipped");
      continue;
    }
    const LabeledMatrix train = *model_matrix(c, spec, "exp");
    const double acc = evalkit::evaluate_oos(train, *oos, c.classifier);
    ordered_json j;
    j["model_name"] = spec.name;
    j["oosa"] = acc;
    j["rows"] = oos->rows();
    j["config_hash"] = hash;
    io::write_file(dir / (file_stem(spec.name) + ".json"), j.dump(2) + "\n");
    note(log, "oos: " + spec.name + " oosa " + evalkit::format_accuracy(acc));
    ++done;
  }
  if (done == 0) throw ConfigError("no model has out-of-sample features");
  write_manifest(dir, c, "oos");
}

void run_length_sense(const RunConfig& c, StageLog& log) {
  const fs::path dir = stage_dir(c, "length");
  const std::string hash = c.hash();
  const auto exp = corpus::select_split(load_chunks(c), corpus::Split::exp);

  std::optional<lingfeat::LinguisticResources> resources;
  std::unique_ptr<grammar::GrammarClient> client;
  std::optional<lingfeat::FittedArtifacts> artifacts;
  std::map<std::string, std::vector<embedstore::EmbeddingRecord>> records;

  for (const auto& spec : model_specs(c)) {
    if (spec.linguistic && !artifacts) {
      resources = load_resources(c, log);
      client = make_client(c);
      const auto rules = client->check_chunks(exp);
      artifacts = lingfeat::fit_artifacts(exp, *resources, rules);
    }
    if (!spec.embedding.empty() && !records.contains(spec.embedding)) {
      auto& dst = records[spec.embedding];
      for (const auto& file : c.paths.embeddings) {
        auto recs = embedstore::read_embeddings(file);
        if (!recs.empty() && embedding_model_name(recs.front().model_tag, recs.front().input_size) == spec.embedding) {
          dst = std::move(recs);
          break;
        }
      }
      if (dst.empty()) throw ConfigError("no embedding file provides " + spec.embedding);
    }
    const auto featurize = [&](std::span<const corpus::Chunk> chunks) {
      std::optional<LabeledMatrix> ling;
      std::optional<LabeledMatrix> emb;
      if (spec.linguistic) ling = lingfeat::extract_matrix(chunks, *artifacts, client->check_chunks(chunks));
      if (!spec.embedding.empty()) emb = embedstore::join(records.at(spec.embedding), chunks).matrix;
      if (ling && emb) return hstack(*ling, *emb);
      return ling ? *ling : *emb;
    };
    evalkit::LengthOptions opt;
    opt.percents = c.evaluation.percents;
    opt.n_holdout = c.evaluation.n_holdout;
    opt.seed = seed_for(c, "length");
    const auto result = evalkit::length_sensitivity(exp, featurize, c.classifier, opt);
    ordered_json j;
    j["model_name"] = spec.name;
    ordered_json acc;
    for (const auto& [p, a] : result.accuracy) acc[std::to_string(p)] = a;
    j["length_accuracy"] = acc;
    j["holdout"] = result.holdout_ids.size();
    j["train"] = result.train_ids.size();
    j["holdout_ids"] = result.holdout_ids;
    j["config_hash"] = hash;
    io::write_file(dir / (file_stem(spec.name) + ".json"), j.dump(2) + "\n");
    std::string line = "length-sense: " + spec.name;
    for (const auto& [p, a] : result.accuracy) line += " " + std::to_string(p) + "%=" + evalkit::format_accuracy(a);
    note(log, line);
  }
  write_manifest(dir, c, "length-sense");
}

// ---- embedding space -----------------------------------------------------------------

namespace {

std::vector<std::pair<std::string, spacelab::Centroids>> embedding_centroids(const RunConfig& c) {
  std::vector<std::pair<std::string, spacelab::Centroids>> out;
  for (const auto& name : embedding_models(c)) {
    const LabeledMatrix m = read_feature_matrix(embeddings_dir(c) / (name + ".exp.features"));
    out.emplace_back(name, spacelab::centroids(m.labels, Eigen::MatrixXd(m.X)));
  }
  return out;
}

}  // namespace

void run_cluster(const RunConfig& c, StageLog& log) {
  const fs::path dir = stage_dir(c, "cluster");
  for (const auto& [name, cents] : embedding_centroids(c)) {
    const auto linkage = spacelab::ward_linkage(cents.points);
    spacelab::emit_clustering(linkage, cents.labels, dir / file_stem(name), c.hash());
    note(log, "cluster: " + name + " " + std::to_string(cents.labels.size()) + " centroids, " +
                  std::to_string(linkage.size()) + " merges");
  }
  write_manifest(dir, c, "cluster");
}

void run_pca(const RunConfig& c, StageLog& log) {
  const fs::path dir = stage_dir(c, "pca");
  for (const auto& [name, cents] : embedding_centroids(c)) {
    const auto proj = spacelab::pca_project(cents.points, 2);
    spacelab::emit_projection(proj, cents.labels, dir / file_stem(name), c.hash());
    note(log, "pca: " + name + " explained variance " + evalkit::format_accuracy(proj.explained_variance_ratio(0)) +
                  " / " + evalkit::format_accuracy(proj.explained_variance_ratio(1)));
  }
  write_manifest(dir, c, "pca");
}

// ---- report -------------------------------------------------------------------------------

void run_report(const RunConfig& c, StageLog& log) {
  const fs::path cv_dir = stage_dir(c, "cv");
  if (!fs::exists(cv_dir)) throw IoError("no cross-validation results in " + cv_dir.string() + " (run cv first)");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cv_dir)) {
    if (e.path().extension() == ".json" && e.path().filename() != "run-manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<evalkit::EvalReport> reports;
  for (const auto& f : files) {
    evalkit::EvalReport r = evalkit::report_from_json(io::read_file(f));
    const fs::path oos = stage_dir(c, "oos") / f.filename();
    if (fs::exists(oos)) r.oosa = json::parse(io::read_file(oos)).at("oosa").get<double>();
    const fs::path len = stage_dir(c, "length") / f.filename();
    if (fs::exists(len)) {
      const json lj = json::parse(io::read_file(len));
      for (const auto& [k, v] : lj.at("length_accuracy").items()) {
        r.length_accuracy[std::stoi(k)] = v.get<double>();
      }
    }
    reports.push_back(std::move(r));
  }
  // The linguistic baseline leads the table.
  std::stable_partition(reports.begin(), reports.end(),
                        [](const auto& r) { return r.model_name.rfind("linguistic", 0) == 0; });
  const fs::path dir = stage_dir(c, "report");
  evalkit::emit_report(reports, dir, c.hash());
  write_manifest(dir, c, "report");
  note(log, "report: " + std::to_string(reports.size()) + " models -> " + (dir / "report.txt").string());
}

}  // namespace nli::pipeline
