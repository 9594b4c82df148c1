#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <cstdio>

#include "nli/errors.hpp"
#include "nli/lingfeat/edit_ops.hpp"
#include "nli/lingfeat/features.hpp"
#include "nli/lingfeat/spelling.hpp"
#include "nli/lingfeat/vocab.hpp"
#include "nli/rng.hpp"
#include "nli/synth.hpp"
#include "nli/text.hpp"
#include "oracles.hpp"

using namespace nli;
using namespace nli::lingfeat;

namespace {

corpus::Chunk chunk_of(std::vector<std::string> sentences, std::string id = "c#0", std::string label = "L") {
  corpus::Chunk c;
  c.chunk_id = std::move(id);
  c.author_id = "c";
  c.label = std::move(label);
  c.sentences = std::move(sentences);
  return c;
}

Dictionary first_entries(std::size_t n) {
  std::ifstream in(std::string(NLI_RESOURCE_DIR) + "/frequency_dictionary_en.txt");
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::string line;
  while (entries.size() < n && std::getline(in, line)) {
    const auto tab = line.find('\t');
    entries.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
  }
  return Dictionary(std::move(entries));
}

std::string mutate(Rng& rng, std::string w, int edits) {
  const std::string_view alphabet = "abcdefghijklmnopqrstuvwxyz";
  for (int e = 0; e < edits; ++e) {
    const auto kind = rng.below(4);
    const std::size_t pos = w.empty() ? 0 : rng.below(w.size());
    const char ch = alphabet[rng.below(alphabet.size())];
    if (kind == 0 || w.empty()) {
      w.insert(w.begin() + static_cast<std::ptrdiff_t>(pos), ch);
    } else if (kind == 1) {
      w.erase(pos, 1);
    } else if (kind == 2) {
      w[pos] = ch;
    } else if (pos + 1 < w.size()) {
      std::swap(w[pos], w[pos + 1]);
    }
  }
  return w;
}

FittedArtifacts fixture_artifacts(std::size_t grammar_rules) {
  FittedArtifacts a;
  const std::vector<corpus::Chunk> train{chunk_of({"the cat sat on the mat .", "a dog barked ."})};
  a.word_vocab = fit_ngram_vocab(train, NgramKind::word_unigram);
  a.char_vocab = fit_ngram_vocab(train, NgramKind::char_trigram);
  a.spell_index = std::make_shared<SpellIndex>(Dictionary({{"the", 100}, {"cat", 50}, {"sat", 40}}));
  a.subst_vocab = RankedVocabulary::from_entries({{"R:e>h", 3}, {"R:h>e", 3}});
  a.tagger = std::make_shared<postag::TaggerModel>(postag::train_tagger(synth::generate_tagged(200, 3), 2, 1));
  a.pos_vocab = fit_pos_vocab(train, *a.tagger);
  a.function_words = std::make_shared<FunctionWordList>(
      FunctionWordList::load(std::string(NLI_RESOURCE_DIR) + "/function_words.txt"));
  grammar::GrammarVocabulary g;
  for (std::size_t i = 0; i < grammar_rules; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "RULE_%04zu", i);
    g.rule_ids.emplace_back(buf);
  }
  a.grammar_vocab = g;
  return a;
}

}  // namespace

TEST_CASE("edit_ops known pairs") {
  CHECK(edit_ops("kitten", "sitting").distance == 3);
  const auto same = edit_ops("abc", "abc");
  CHECK(same.distance == 0);
  CHECK(same.steps.empty());
  const auto teh = edit_ops("teh", "the");
  CHECK(teh.distance == 2);
  CHECK(teh.ops() == std::vector<SubstOp>{SubstOp::replace(U'e', U'h'), SubstOp::replace(U'h', U'e')});
  CHECK(edit_ops("", "ab").ops() == std::vector<SubstOp>{SubstOp::insert(U'a'), SubstOp::insert(U'b')});
  CHECK(edit_ops("ab", "").ops() == std::vector<SubstOp>{SubstOp::remove(U'a'), SubstOp::remove(U'b')});
}

TEST_CASE("substitution op keys and invariants") {
  CHECK(SubstOp::insert(U'x').key() == "I:x");
  CHECK(SubstOp::remove(U'x').key() == "D:x");
  CHECK(SubstOp::replace(U'a', U'é').key() == "R:a>\xc3\xa9");
  CHECK(SubstOp::insert(U'x').valid());
  CHECK_FALSE(SubstOp::replace(U'a', U'a').valid());
  CHECK_FALSE((SubstOp{SubstOp::Kind::insert, U'a', U'b'}).valid());
}

TEST_CASE("edit_ops matches the DP oracle and replays on random pairs") {
  Rng rng(101);
  for (int i = 0; i < 3000; ++i) {
    const auto a = text::decode_utf8(oracle::random_word(rng, 0, 12, "abcde"));
    const auto b = text::decode_utf8(oracle::random_word(rng, 0, 12, "abcde"));
    const auto script = edit_ops(a, b);
    REQUIRE(script.distance == oracle::levenshtein(a, b));
    CHECK(script.steps.size() == script.distance);
    CHECK(apply_edit_steps(a, script.steps) == b);
    for (const auto& s : script.steps) CHECK(s.op.valid());
    CHECK(levenshtein_distance(a, b) == script.distance);
  }
}

TEST_CASE("osa_distance matches the OSA oracle and honours the bound") {
  Rng rng(7);
  for (int i = 0; i < 3000; ++i) {
    const auto a = text::decode_utf8(oracle::random_word(rng, 0, 9, "abc"));
    const auto b = text::decode_utf8(oracle::random_word(rng, 0, 9, "abc"));
    const std::size_t full = oracle::osa(a, b);
    CHECK(osa_distance(a, b, 20) == full);
    CHECK(osa_distance(a, b, 2) == std::min<std::size_t>(full, 3));
  }
  CHECK(osa_distance(U"teh", U"the", 2) == 1);
}

TEST_CASE("spell_correct small dictionary") {
  SpellIndex index(Dictionary({{"the", 100}, {"then", 50}}));
  const auto s = spell_correct("teh", index);
  REQUIRE(s);
  CHECK(s->term == "the");
  CHECK(s->distance == 1);
  CHECK_FALSE(spell_correct("the", index));
  CHECK_FALSE(spell_correct("zzzzzz", index));
}

TEST_CASE("spell_correct tie rule prefers frequency then lexicographic order") {
  SpellIndex index(Dictionary({{"bat", 10}, {"cat", 10}, {"hat", 30}}));
  CHECK(spell_correct("xat", index)->term == "hat");
  SpellIndex even(Dictionary({{"cat", 10}, {"bat", 10}}));
  CHECK(spell_correct("xat", even)->term == "bat");
}

TEST_CASE("spell index equals an exhaustive scan over a 10k dictionary") {
  const Dictionary dict = first_entries(10000);
  REQUIRE(dict.size() == 10000);
  const SpellIndex index(dict);
  Rng rng(2024);
  int disagreements = 0;
  for (int q = 0; q < 500; ++q) {
    const auto& base = dict.entries()[rng.below(dict.size())].first;
    const std::string word = q % 5 == 4 ? oracle::random_word(rng, 1, 10, "abcdefghijklmnopqrstuvwxyz")
                                        : mutate(rng, base, 1 + static_cast<int>(rng.below(3)));
    if (index.lookup(word) != oracle::exhaustive_correct(word, dict)) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("dictionary loading sums duplicates") {
  const auto path = std::filesystem::temp_directory_path() / "nli_test_dict.txt";
  {
    std::ofstream out(path);
    out << "the\t5\nbig\t2\nthe\t3\n";
  }
  const auto d = Dictionary::load(path);
  CHECK(d.size() == 2);
  CHECK(d.frequency("the") == 8);
  std::filesystem::remove(path);
}

TEST_CASE("ngram extraction") {
  CHECK(extract_ngrams("aaa aaa bb", NgramKind::word_unigram) == std::vector<std::string>{"aaa", "aaa", "bb"});
  CHECK(extract_ngrams("abcd", NgramKind::char_trigram) == std::vector<std::string>{"abc", "bcd"});
  CHECK(extract_ngrams("A  b", NgramKind::char_trigram) == std::vector<std::string>{"a b"});
}

TEST_CASE("ngram vocabulary ranking and counting") {
  const std::vector<corpus::Chunk> train{chunk_of({"aaa aaa bb"})};
  const auto v = fit_ngram_vocab(train, NgramKind::word_unigram, 2);
  REQUIRE(v.vocab.size() == 2);
  CHECK(v.vocab.entries()[0].first == "aaa");
  CHECK(v.vocab.entries()[1].first == "bb");
  CHECK(ngram_counts(chunk_of({"aaa aaa bb"}), v) == std::vector<double>{2, 1});
  CHECK(ngram_counts(chunk_of({}), v) == std::vector<double>{0, 0});
  CHECK(ngram_counts(chunk_of({"zz yy"}), v) == std::vector<double>{0, 0});

  CountMap tie;
  tie.add("ab", 2);
  tie.add("aa", 2);
  CHECK(RankedVocabulary::from_counts(tie, 10).entries()[0].first == "aa");
}

TEST_CASE("vocabulary fitting does not depend on chunk order") {
  std::vector<corpus::Chunk> chunks;
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    std::vector<std::string> sents;
    for (int s = 0; s < 5; ++s) sents.push_back(oracle::random_word(rng, 3, 20, "abc de"));
    chunks.push_back(chunk_of(sents, "c#" + std::to_string(i)));
  }
  const auto a = fit_ngram_vocab(chunks, NgramKind::char_trigram, 20);
  std::reverse(chunks.begin(), chunks.end());
  rng.shuffle(chunks);
  const auto b = fit_ngram_vocab(chunks, NgramKind::char_trigram, 20);
  CHECK(a.vocab.entries() == b.vocab.entries());
}

TEST_CASE("substitution features and average edit distance") {
  SpellIndex index(Dictionary({{"the", 100}, {"cat", 10}, {"sat", 10}, {"on", 10}, {"mat", 10}, {"and", 10},
                               {"dog", 10}, {"ran", 10}, {"far", 10}, {"away", 10}}));
  const auto vocab = RankedVocabulary::from_entries({{"R:e>h", 1}, {"R:h>e", 1}, {"I:x", 1}});
  // Ten word tokens, one of them ("teh") two edits away from its correction.
  const auto chunk = chunk_of({"teh cat sat on mat and dog ran far away"});
  const auto f = substitution_features(chunk, index, vocab);
  CHECK(f.counts == std::vector<double>{1, 1, 0});
  CHECK(f.avg_edit_distance == doctest::Approx(0.2));
  const auto clean = substitution_features(chunk_of({"the cat sat"}), index, vocab);
  CHECK(clean.counts == std::vector<double>{0, 0, 0});
  CHECK(clean.avg_edit_distance == 0.0);
  // No dictionary word within two edits: ignored.
  const auto far = substitution_features(chunk_of({"qqqqqq cat"}), index, vocab);
  CHECK(far.avg_edit_distance == 0.0);
}

TEST_CASE("function word counts") {
  std::vector<std::string> words{"the"};
  for (int i = 1; i < 467; ++i) words.push_back("w" + std::to_string(i));
  const auto list = FunctionWordList::from_words(words);
  const auto counts = function_word_counts(chunk_of({"The cat the"}), list);
  CHECK(counts[0] == 2);
  CHECK(std::accumulate(counts.begin(), counts.end(), 0.0) == 2);
  const auto none = function_word_counts(chunk_of({"cat dog"}), list);
  CHECK(std::all_of(none.begin(), none.end(), [](double v) { return v == 0; }));
  words.pop_back();
  CHECK_THROWS_AS(FunctionWordList::from_words(words), ConfigError);
  CHECK(FunctionWordList::load(std::string(NLI_RESOURCE_DIR) + "/function_words.txt").size() == 467);
}

TEST_CASE("average sentence length") {
  const std::vector<std::string> s{"I am here .", "Go !"};
  CHECK(avg_sentence_length(s) == 2.0);
  std::vector<std::string> hundred(100, std::string());
  for (auto& x : hundred) {
    for (int t = 0; t < 15; ++t) x += "w ";
  }
  CHECK(avg_sentence_length(hundred) == 15.0);
  const std::vector<std::string> punct{". , !", "?"};
  CHECK(avg_sentence_length(punct) == 0.0);
}

TEST_CASE("pos trigram windows") {
  const auto g = pos_trigrams({"DT", "NN", "VB", "DT"});
  CHECK(g == std::vector<std::string>{"DT NN VB", "NN VB DT"});
  CHECK(pos_trigrams({"DT", "NN"}).empty());
}

TEST_CASE("pos trigram vocabulary matches a hand recount") {
  const auto tagged = synth::generate_tagged(600, 9);
  const auto tagger = postag::train_tagger(tagged, 3, 2);
  std::vector<corpus::Chunk> chunks;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::string> sents;
    for (int s = 0; s < 20; ++s) {
      const auto& t = tagged[static_cast<std::size_t>(c * 20 + s)].tokens;
      sents.push_back(text::join(t, " "));
    }
    chunks.push_back(chunk_of(sents, "c#" + std::to_string(c)));
  }
  std::map<std::string, std::uint64_t> recount;
  for (const auto& c : chunks) {
    for (const auto& s : c.sentences) {
      const auto tags = postag::tag_sentence(tagger, text::tagger_tokens(s));
      for (std::size_t i = 2; i < tags.size(); ++i) recount[tags[i - 2] + " " + tags[i - 1] + " " + tags[i]]++;
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> expected(recount.begin(), recount.end());
  std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (expected.size() > 300) expected.resize(300);
  CHECK(fit_pos_vocab(chunks, tagger).entries() == expected);
}

TEST_CASE("schema arithmetic") {
  CHECK(FeatureSchema::standard(2017).total_dim() == 5186);
  CHECK(FeatureSchema::standard(0).total_dim() == 3169);
  const auto s = FeatureSchema::standard(7);
  CHECK(s.offset(Block::grammar) == 2401);
  CHECK(s.offset(Block::avg_sentence_length) == s.total_dim() - 1);
}

TEST_CASE("assembled vectors follow the schema") {
  const auto a = fixture_artifacts(2017);
  const auto chunk = chunk_of({"Teh cat sat on the mat .", "The dog barked at a cat !"});
  const auto fv = assemble_features(chunk, a.schema(), a, {"RULE_0003", "NOT_IN_VOCAB"});
  CHECK(fv.dim == 5186);
  CHECK(fv == assemble_features(chunk, a.schema(), a, {"RULE_0003", "NOT_IN_VOCAB"}));
  std::uint32_t prev = 0;
  for (std::size_t i = 0; i < fv.entries.size(); ++i) {
    const auto [idx, v] = fv.entries[i];
    CHECK(idx < fv.dim);
    CHECK(std::isfinite(v));
    CHECK(v > 0);
    if (i > 0) CHECK(idx > prev);
    prev = idx;
  }
  const auto g = a.schema().offset(Block::grammar);
  CHECK(fv.at(g + 3) == 1.0);
  CHECK(fv.at(a.schema().offset(Block::avg_sentence_length)) == 6.0);
  CHECK(fv.at(a.schema().offset(Block::avg_edit_distance)) == doctest::Approx(4.0 / 11.0));
}

TEST_CASE("unfitted artifacts are rejected") {
  FittedArtifacts a = fixture_artifacts(3);
  a.pos_vocab.reset();
  CHECK_THROWS_AS(a.schema(), StateError);
  CHECK_THROWS_AS(assemble_features(chunk_of({"x"}), FeatureSchema::standard(3), a, {}), StateError);
}
