// nli-synth: writes the synthetic fixtures (corpus, tagged corpus, grammar
// cache, embedding files).

#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "nli/corpus.hpp"
#include "nli/embedstore.hpp"
#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/io.hpp"
#include "nli/synth.hpp"

#include <json.hpp>

namespace {

std::vector<nli::corpus::Chunk> chunks_of(const std::string& path, const std::vector<std::string>& splits) {
  std::vector<nli::corpus::Chunk> out;
  const auto all = nli::corpus::read_chunks(path);
  for (const auto& s : splits) {
    const auto part = nli::corpus::select_split(all, nli::corpus::parse_split(s));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fixture generator"};
  app.require_subcommand(1);

  nli::synth::CorpusOptions corpus_opt;
  std::string corpus_out;
  auto* corpus_cmd = app.add_subcommand("corpus", "Learner corpus JSONL");
  corpus_cmd->add_option("--out", corpus_out)->required();
  corpus_cmd->add_option("--seed", corpus_opt.seed)->capture_default_str();
  corpus_cmd->add_option("--authors", corpus_opt.authors_per_language)->capture_default_str();
  corpus_cmd->add_option("--europe-authors", corpus_opt.europe_authors_per_language)->capture_default_str();
  corpus_cmd->add_option("--sentences", corpus_opt.sentences_per_author)->capture_default_str();
  corpus_cmd->add_option("--europe-sentences", corpus_opt.europe_sentences_per_author)->capture_default_str();

  std::string tagged_out;
  std::size_t tagged_n = 4000;
  std::uint64_t tagged_seed = 11;
  auto* tagged_cmd = app.add_subcommand("tagged", "Penn-tagged corpus");
  tagged_cmd->add_option("--out", tagged_out)->required();
  tagged_cmd->add_option("--sentences", tagged_n)->capture_default_str();
  tagged_cmd->add_option("--seed", tagged_seed)->capture_default_str();

  std::string gc_chunks, gc_dir, gc_dict;
  std::vector<std::string> gc_splits{"exp", "oos"};
  auto* gc_cmd = app.add_subcommand("grammar-cache", "Fill a response cache from the stub checker");
  gc_cmd->add_option("--chunks", gc_chunks)->required();
  gc_cmd->add_option("--cache-dir", gc_dir)->required();
  gc_cmd->add_option("--dictionary", gc_dict)->required();
  gc_cmd->add_option("--splits", gc_splits)->delimiter(',')->capture_default_str();

  std::string emb_chunks, emb_out;
  std::vector<std::string> emb_splits{"exp", "oos"};
  nli::synth::EmbeddingOptions emb_opt;
  auto* emb_cmd = app.add_subcommand("embeddings", "Class-correlated embedding JSONL");
  emb_cmd->add_option("--chunks", emb_chunks)->required();
  emb_cmd->add_option("--out", emb_out)->required();
  emb_cmd->add_option("--splits", emb_splits)->delimiter(',')->capture_default_str();
  emb_cmd->add_option("--model-tag", emb_opt.model_tag)->capture_default_str();
  emb_cmd->add_option("--input-size", emb_opt.input_size)->capture_default_str();
  emb_cmd->add_option("--seed", emb_opt.seed)->capture_default_str();
  emb_cmd->add_option("--separation", emb_opt.separation)->capture_default_str();
  emb_cmd->add_option("--noise", emb_opt.noise)->capture_default_str();
  emb_cmd->add_option("--slices", emb_opt.slice_percents)->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*corpus_cmd) {
      std::string out;
      for (const auto& r : nli::synth::generate_corpus(corpus_opt)) {
        nlohmann::ordered_json j;
        j["author_id"] = r.author_id;
        j["native_language"] = r.native_language;
        j["partition"] = nli::corpus::to_string(r.partition);
        j["sentences"] = r.sentences;
        out += j.dump() + "\n";
      }
      nli::io::write_file(corpus_out, out);
    } else if (*tagged_cmd) {
      nli::io::write_file(tagged_out,
                          nli::postag::format_tagged_corpus(nli::synth::generate_tagged(tagged_n, tagged_seed)));
    } else if (*gc_cmd) {
      auto checker = std::make_shared<nli::synth::StubChecker>(nli::synth::load_word_set(gc_dict));
      auto transport = std::make_shared<nli::synth::StubTransport>(checker);
      nli::grammar::ClientOptions opt;
      opt.max_in_flight = 8;
      nli::grammar::GrammarClient client(transport, nli::grammar::ResponseCache(gc_dir), opt);
      const auto chunks = chunks_of(gc_chunks, gc_splits);
      client.check_chunks(chunks);
      std::cout << chunks.size() << " chunks, " << client.network_calls() << " new responses\n";
    } else if (*emb_cmd) {
      const auto chunks = chunks_of(emb_chunks, emb_splits);
      nli::embedstore::write_embeddings(nli::synth::class_embeddings(chunks, emb_opt), emb_out);
    }
  } catch (const nli::Error& e) {
    std::cerr << "nli-synth: " << nli::to_string(e.kind()) << " error: " << e.what() << "\n";
    return nli::exit_code(e.kind());
  }
  return 0;
}
