#include "nli/lingfeat/features.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/parallel.hpp"
#include "nli/text.hpp"

namespace nli::lingfeat {

using nlohmann::json;

// ---- function words -------------------------------------------------------

FunctionWordList FunctionWordList::from_words(std::vector<std::string> words, std::size_t expected) {
  FunctionWordList list;
  for (auto& w : words) {
    if (w.empty()) throw ConfigError("function word list contains an empty entry");
    if (text::to_lower_utf8(w) != w) throw ConfigError("function word \"" + w + "\" is not lowercase");
    if (!list.index_.emplace(w, list.words_.size()).second) {
      throw ConfigError("function word \"" + w + "\" is listed twice");
    }
    list.words_.push_back(std::move(w));
  }
  if (list.words_.size() != expected) {
    throw ConfigError("function word list has " + std::to_string(list.words_.size()) + " entries, expected " +
                      std::to_string(expected));
  }
  return list;
}

FunctionWordList FunctionWordList::load(const std::filesystem::path& path, std::size_t expected) {
  std::vector<std::string> words;
  for (auto& line : io::read_lines(path)) {
    if (!line.empty()) words.push_back(std::move(line));
  }
  try {
    return from_words(std::move(words), expected);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::ptrdiff_t FunctionWordList::index_of(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::vector<double> function_word_counts(const corpus::Chunk& chunk, const FunctionWordList& list) {
  std::vector<double> out(list.size(), 0.0);
  for (const auto& s : chunk.sentences) {
    for (const auto& tok : text::function_word_tokens(s)) {
      const auto idx = list.index_of(tok);
      if (idx >= 0) out[static_cast<std::size_t>(idx)] += 1.0;
    }
  }
  return out;
}

// ---- sentence length ------------------------------------------------------

double avg_sentence_length(std::span<const std::string> sentences) {
  if (sentences.empty()) return 0.0;
  std::size_t kept = 0;
  for (const auto& s : sentences) {
    for (std::string_view tok : text::split_ws(s)) {
      const std::u32string cps = text::decode_utf8(tok);
      if (cps.size() == 1 && !text::is_alnum(cps[0])) continue;
      ++kept;
    }
  }
  return static_cast<double>(kept) / static_cast<double>(sentences.size());
}

double avg_sentence_length(const corpus::Chunk& chunk) { return avg_sentence_length(chunk.sentences); }

// ---- spelling substitutions ----------------------------------------------

namespace {

bool spell_checkable(const std::string& token) {
  for (char32_t cp : text::decode_utf8(token)) {
    if (!text::is_letter(cp)) return false;
  }
  return true;
}

}  // namespace

std::vector<Misspelling> find_misspellings(const corpus::Chunk& chunk, const SpellIndex& index) {
  std::vector<Misspelling> out;
  for (const auto& tok : text::word_tokens(chunk.text())) {
    if (!spell_checkable(tok)) continue;
    auto suggestion = index.lookup(tok);
    if (!suggestion) continue;
    EditScript script = edit_ops(tok, suggestion->term);
    out.push_back(Misspelling{tok, std::move(*suggestion), std::move(script)});
  }
  return out;
}

RankedVocabulary fit_substitution_vocab(std::span<const corpus::Chunk> train_chunks, const SpellIndex& index,
                                        std::size_t top_k) {
  CountMap counts;
  for (const auto& chunk : train_chunks) {
    for (const auto& m : find_misspellings(chunk, index)) {
      for (const auto& step : m.script.steps) counts.add(step.op.key());
    }
  }
  return RankedVocabulary::from_counts(counts, top_k);
}

SubstitutionFeatures substitution_features(const corpus::Chunk& chunk, const SpellIndex& index,
                                           const RankedVocabulary& subst_vocab) {
  SubstitutionFeatures out;
  out.counts.assign(subst_vocab.size(), 0.0);
  const std::size_t n_words = text::word_tokens(chunk.text()).size();
  std::size_t total_distance = 0;
  for (const auto& m : find_misspellings(chunk, index)) {
    total_distance += m.script.distance;
    for (const auto& step : m.script.steps) {
      const auto idx = subst_vocab.index_of(step.op.key());
      if (idx >= 0) out.counts[static_cast<std::size_t>(idx)] += 1.0;
    }
  }
  out.avg_edit_distance = n_words == 0 ? 0.0 : static_cast<double>(total_distance) / static_cast<double>(n_words);
  return out;
}

// ---- POS trigrams -----------------------------------------------------------

std::vector<std::vector<std::string>> tag_chunk(const corpus::Chunk& chunk, const postag::TaggerModel& tagger) {
  std::vector<std::vector<std::string>> out;
  out.reserve(chunk.sentences.size());
  for (const auto& s : chunk.sentences) out.push_back(postag::tag_sentence(tagger, text::tagger_tokens(s)));
  return out;
}

std::vector<std::string> pos_trigrams(const std::vector<std::string>& tags) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + 3 <= tags.size(); ++i) out.push_back(tags[i] + " " + tags[i + 1] + " " + tags[i + 2]);
  return out;
}

RankedVocabulary fit_pos_vocab(std::span<const corpus::Chunk> train_chunks, const postag::TaggerModel& tagger,
                               std::size_t top_k) {
  CountMap counts;
  for (const auto& chunk : train_chunks) {
    for (const auto& tags : tag_chunk(chunk, tagger)) {
      for (const auto& g : pos_trigrams(tags)) counts.add(g);
    }
  }
  return RankedVocabulary::from_counts(counts, top_k);
}

std::vector<double> pos_trigram_counts(const std::vector<std::vector<std::string>>& sentence_tags,
                                       const RankedVocabulary& pos_vocab) {
  std::vector<double> out(pos_vocab.size(), 0.0);
  for (const auto& tags : sentence_tags) {
    for (const auto& g : pos_trigrams(tags)) {
      const auto idx = pos_vocab.index_of(g);
      if (idx >= 0) out[static_cast<std::size_t>(idx)] += 1.0;
    }
  }
  return out;
}

std::vector<double> pos_trigram_counts(const corpus::Chunk& chunk, const postag::TaggerModel& tagger,
                                       const RankedVocabulary& pos_vocab) {
  return pos_trigram_counts(tag_chunk(chunk, tagger), pos_vocab);
}

// ---- schema and assembly ---------------------------------------------------

const char* to_string(Block b) noexcept {
  switch (b) {
    case Block::word_unigram: return "word_unigram";
    case Block::char_trigram: return "char_trigram";
    case Block::substitution: return "substitution";
    case Block::avg_edit_distance: return "avg_edit_distance";
    case Block::grammar: return "grammar";
    case Block::pos_trigram: return "pos_trigram";
    case Block::function_word: return "function_word";
    case Block::avg_sentence_length: return "avg_sentence_length";
  }
  return "?";
}

FeatureSchema FeatureSchema::standard(std::size_t grammar_size) {
  return custom({kNgramTopK, kNgramTopK, kSubstitutionTopK, 1, grammar_size, kPosTrigramTopK, kFunctionWordCount, 1});
}

FeatureSchema FeatureSchema::custom(const std::array<std::size_t, kBlockCount>& sizes) {
  FeatureSchema s;
  s.sizes_ = sizes;
  return s;
}

std::size_t FeatureSchema::offset(Block b) const noexcept {
  std::size_t off = 0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(b); ++i) off += sizes_[i];
  return off;
}

std::size_t FeatureSchema::total_dim() const noexcept {
  return std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
}

void FittedArtifacts::require_fitted() const {
  if (!word_vocab) throw StateError("word unigram vocabulary is not fitted");
  if (!char_vocab) throw StateError("character trigram vocabulary is not fitted");
  if (!subst_vocab) throw StateError("substitution vocabulary is not fitted");
  if (!pos_vocab) throw StateError("POS trigram vocabulary is not fitted");
  if (!grammar_vocab) throw StateError("grammar vocabulary is not fitted");
  if (!spell_index) throw StateError("spelling index is not loaded");
  if (!tagger) throw StateError("POS tagger is not trained");
  if (!function_words) throw StateError("function word list is not loaded");
}

FeatureSchema FittedArtifacts::schema() const {
  require_fitted();
  return FeatureSchema::custom({kNgramTopK, kNgramTopK, kSubstitutionTopK, 1, grammar_vocab->size(), kPosTrigramTopK,
                                function_words->size(), 1});
}

namespace {

json ranked_json(const RankedVocabulary& v) {
  json arr = json::array();
  for (const auto& [k, n] : v.entries()) arr.push_back(json::array({k, n}));
  return arr;
}

}  // namespace

std::string FittedArtifacts::vocab_json() const {
  require_fitted();
  json j = {{"word_unigram", ranked_json(word_vocab->vocab)},
            {"char_trigram", ranked_json(char_vocab->vocab)},
            {"substitution", ranked_json(*subst_vocab)},
            {"pos_trigram", ranked_json(*pos_vocab)},
            {"grammar", grammar_vocab->rule_ids},
            {"function_words", function_words->words()},
            {"dictionary_sha256", spell_index->dictionary().fingerprint()},
            {"tagger_sha256", io::sha256_hex(tagger->to_json())}};
  return j.dump();
}

std::string FittedArtifacts::fingerprint() const { return io::sha256_hex(vocab_json()); }

FittedArtifacts fit_artifacts(std::span<const corpus::Chunk> train_chunks, const LinguisticResources& resources,
                              std::span<const std::set<std::string>> rules_per_chunk) {
  if (!resources.spell_index || !resources.tagger || !resources.function_words) {
    throw StateError("linguistic resources are incomplete");
  }
  if (rules_per_chunk.size() != train_chunks.size()) {
    throw ShapeError("grammar results must align with the training chunks");
  }
  FittedArtifacts a;
  a.spell_index = resources.spell_index;
  a.tagger = resources.tagger;
  a.function_words = resources.function_words;
  a.word_vocab = fit_ngram_vocab(train_chunks, NgramKind::word_unigram);
  a.char_vocab = fit_ngram_vocab(train_chunks, NgramKind::char_trigram);
  a.subst_vocab = fit_substitution_vocab(train_chunks, *a.spell_index);
  a.pos_vocab = fit_pos_vocab(train_chunks, *a.tagger);
  a.grammar_vocab = grammar::fit_grammar_vocab(rules_per_chunk);
  return a;
}

FeatureVector assemble_features(const corpus::Chunk& chunk, const FeatureSchema& schema,
                                const FittedArtifacts& artifacts, const std::set<std::string>& chunk_rule_ids) {
  artifacts.require_fitted();
  FeatureVector fv;
  fv.dim = schema.total_dim();

  const auto put_block = [&](Block b, const std::vector<double>& values) {
    if (values.size() > schema.size(b)) {
      throw ShapeError(std::string("block ") + to_string(b) + " has " + std::to_string(values.size()) +
                       " values but the schema reserves " + std::to_string(schema.size(b)));
    }
    const std::size_t off = schema.offset(b);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      if (!std::isfinite(v) || v < 0.0) throw NumericError("invalid feature value in chunk " + chunk.chunk_id);
      if (v != 0.0) fv.entries.emplace_back(static_cast<std::uint32_t>(off + i), v);
    }
  };

  const SubstitutionFeatures subst = substitution_features(chunk, *artifacts.spell_index, *artifacts.subst_vocab);
  put_block(Block::word_unigram, ngram_counts(chunk, *artifacts.word_vocab));
  put_block(Block::char_trigram, ngram_counts(chunk, *artifacts.char_vocab));
  put_block(Block::substitution, subst.counts);
  put_block(Block::avg_edit_distance, {subst.avg_edit_distance});
  put_block(Block::grammar, grammar::grammar_features(chunk_rule_ids, *artifacts.grammar_vocab));
  put_block(Block::pos_trigram, pos_trigram_counts(chunk, *artifacts.tagger, *artifacts.pos_vocab));
  put_block(Block::function_word, function_word_counts(chunk, *artifacts.function_words));
  put_block(Block::avg_sentence_length, {avg_sentence_length(chunk)});
  return fv;
}

LabeledMatrix extract_matrix(std::span<const corpus::Chunk> chunks, const FittedArtifacts& artifacts,
                             std::span<const std::set<std::string>> rules_per_chunk) {
  if (rules_per_chunk.size() != chunks.size()) throw ShapeError("grammar results must align with the chunks");
  const FeatureSchema schema = artifacts.schema();
  std::vector<FeatureVector> rows(chunks.size());
  parallel_for(chunks.size(), [&](std::size_t i) {
    rows[i] = assemble_features(chunks[i], schema, artifacts, rules_per_chunk[i]);
  });
  LabeledMatrix m;
  for (const auto& c : chunks) {
    m.ids.push_back(c.chunk_id);
    m.labels.push_back(c.label);
  }
  m.X = to_sparse(rows, schema.total_dim());
  m.fingerprint = artifacts.fingerprint();
  return m;
}

}  // namespace nli::lingfeat
