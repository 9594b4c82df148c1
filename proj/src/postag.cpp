#include "nli/postag.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/rng.hpp"
#include "nli/text.hpp"

namespace nli::postag {

using nlohmann::json;

std::vector<TaggedSentence> parse_tagged_corpus(std::string_view contents, const std::string& source) {
  std::vector<TaggedSentence> out;
  TaggedSentence cur;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const auto flush = [&] {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = TaggedSentence{};
  };
  while (pos <= contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      flush();
      if (end == contents.size()) break;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      throw ParseError(source, line_no, "expected token<TAB>tag");
    }
    cur.tokens.emplace_back(line.substr(0, tab));
    cur.tags.emplace_back(line.substr(tab + 1));
    if (end == contents.size()) break;
  }
  flush();
  return out;
}

std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path) {
  return parse_tagged_corpus(io::read_file(path), path.string());
}

std::string format_tagged_corpus(const std::vector<TaggedSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      out += s.tokens[i];
      out.push_back('\t');
      out += s.tags[i];
      out.push_back('\n');
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> extract_features(const std::vector<std::string>& tokens, std::size_t i,
                                          std::string_view prev_tag, std::string_view prev2_tag) {
  const std::string& word = tokens[i];
  const std::u32string cps = text::decode_utf8(word);
  const std::u32string lower = text::to_lower(cps);
  const std::string lower_s = text::encode_utf8(lower);

  std::vector<std::string> f;
  f.reserve(16);
  f.emplace_back("bias");
  f.push_back("w=" + word);
  f.push_back("lw=" + lower_s);
  for (std::size_t k = 1; k <= 3 && k <= lower.size(); ++k) {
    f.push_back("s" + std::to_string(k) + "=" + text::encode_utf8(std::u32string_view(lower).substr(lower.size() - k)));
  }
  if (!lower.empty()) f.push_back("p1=" + text::encode_utf8(lower.substr(0, 1)));
  f.push_back("t1=" + std::string(prev_tag));
  f.push_back("t2=" + std::string(prev2_tag) + "+" + std::string(prev_tag));
  f.push_back("w-1=" + (i > 0 ? text::to_lower_utf8(tokens[i - 1]) : std::string("-START-")));
  f.push_back("w+1=" + (i + 1 < tokens.size() ? text::to_lower_utf8(tokens[i + 1]) : std::string("-END-")));
  bool digit = false;
  bool hyphen = false;
  for (char32_t c : cps) {
    if (c >= '0' && c <= '9') digit = true;
    if (c == '-') hyphen = true;
  }
  if (digit) f.emplace_back("has_digit");
  if (hyphen) f.emplace_back("has_hyphen");
  if (!cps.empty() && text::to_lower(cps[0]) != cps[0]) f.emplace_back("is_capitalized");
  return f;
}

namespace {

constexpr std::string_view kStart = "-START-";
constexpr std::string_view kStart2 = "-START2-";

struct TrainWeights {
  std::vector<double> w;
  std::vector<double> total;
  std::vector<std::uint64_t> stamp;
};

std::size_t argmax_scores(const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < scores.size(); ++t) {
    if (scores[t] > scores[best]) best = t;
  }
  return best;
}

std::map<std::string, std::string> make_single_tag_words(const std::vector<TaggedSentence>& corpus) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) counts[s.tokens[i]][s.tags[i]] += 1;
  }
  std::map<std::string, std::string> out;
  for (const auto& [word, tags] : counts) {
    if (tags.size() != 1) continue;
    const auto& [tag, n] = *tags.begin();
    if (n >= kSingleTagMinCount) out.emplace(word, tag);
  }
  return out;
}

}  // namespace

TaggerModel train_tagger(const std::vector<TaggedSentence>& corpus, int epochs, std::uint64_t seed) {
  if (corpus.empty()) throw ConfigError("cannot train a tagger on an empty corpus");
  if (epochs < 1) throw ConfigError("tagger epochs must be >= 1");

  std::set<std::string> tags;
  for (const auto& s : corpus) {
    if (s.tokens.size() != s.tags.size()) throw ConfigError("tagged sentence has mismatched token/tag counts");
    tags.insert(s.tags.begin(), s.tags.end());
  }
  TaggerModel model;
  model.tag_set.assign(tags.begin(), tags.end());
  model.single_tag_words = make_single_tag_words(corpus);
  const std::size_t n_tags = model.tag_set.size();
  std::unordered_map<std::string, std::size_t> tag_index;
  for (std::size_t t = 0; t < n_tags; ++t) tag_index.emplace(model.tag_set[t], t);

  std::unordered_map<std::string, TrainWeights> weights;
  std::uint64_t instances = 0;

  const auto bump = [&](TrainWeights& fw, std::size_t tag, double delta) {
    fw.total[tag] += static_cast<double>(instances - fw.stamp[tag]) * fw.w[tag];
    fw.stamp[tag] = instances;
    fw.w[tag] += delta;
  };

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::vector<double> scores(n_tags);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t si : order) {
      const auto& sent = corpus[si];
      std::string prev(kStart);
      std::string prev2(kStart2);
      for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
        std::string guess;
        if (auto it = model.single_tag_words.find(sent.tokens[i]); it != model.single_tag_words.end()) {
          guess = it->second;
        } else {
          const auto feats = extract_features(sent.tokens, i, prev, prev2);
          std::fill(scores.begin(), scores.end(), 0.0);
          for (const auto& f : feats) {
            auto it2 = weights.find(f);
            if (it2 == weights.end()) continue;
            for (std::size_t t = 0; t < n_tags; ++t) scores[t] += it2->second.w[t];
          }
          const std::size_t guess_idx = argmax_scores(scores);
          guess = model.tag_set[guess_idx];
          const std::size_t truth_idx = tag_index.at(sent.tags[i]);
          ++instances;
          if (guess_idx != truth_idx) {
            for (const auto& f : feats) {
              auto& fw = weights[f];
              if (fw.w.empty()) {
                fw.w.assign(n_tags, 0.0);
                fw.total.assign(n_tags, 0.0);
                fw.stamp.assign(n_tags, 0);
              }
              bump(fw, truth_idx, 1.0);
              bump(fw, guess_idx, -1.0);
            }
          }
        }
        prev2 = std::move(prev);
        prev = std::move(guess);
      }
    }
  }

  // Average over the weight snapshot taken after every scored token.
  for (auto& [feat, fw] : weights) {
    std::vector<double> avg(n_tags, 0.0);
    bool nonzero = false;
    for (std::size_t t = 0; t < n_tags; ++t) {
      const double total = fw.total[t] + static_cast<double>(instances - fw.stamp[t] + 1) * fw.w[t];
      const double v = instances > 0 ? total / static_cast<double>(instances) : 0.0;
      avg[t] = v;
      if (v != 0.0) nonzero = true;
    }
    // Features whose averaged weights are all zero are dropped.
    if (nonzero) model.weights.emplace(feat, std::move(avg));
  }
  return model;
}

std::vector<std::string> tag_sentence(const TaggerModel& model, const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  if (model.tag_set.empty()) throw StateError("tagger model has an empty tag set");
  std::string prev(kStart);
  std::string prev2(kStart2);
  std::vector<double> scores(model.tag_set.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string tag;
    if (auto it = model.single_tag_words.find(tokens[i]); it != model.single_tag_words.end()) {
      tag = it->second;
    } else {
      std::fill(scores.begin(), scores.end(), 0.0);
      for (const auto& f : extract_features(tokens, i, prev, prev2)) {
        auto it2 = model.weights.find(f);
        if (it2 == model.weights.end()) continue;
        for (std::size_t t = 0; t < scores.size(); ++t) scores[t] += it2->second[t];
      }
      tag = model.tag_set[argmax_scores(scores)];
    }
    out.push_back(tag);
    prev2 = std::move(prev);
    prev = tag;
  }
  return out;
}

double accuracy(const TaggerModel& model, const std::vector<TaggedSentence>& gold) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& s : gold) {
    const auto pred = tag_sentence(model, s.tokens);
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == s.tags[i] ? 1 : 0;
    total += pred.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

std::string TaggerModel::to_json() const {
  json weights_json = json::object();
  for (const auto& [feat, w] : weights) {
    json per_tag = json::object();
    for (std::size_t t = 0; t < w.size(); ++t) {
      if (w[t] != 0.0) per_tag[tag_set[t]] = w[t];
    }
    weights_json[feat] = std::move(per_tag);
  }
  json j = {{"tag_set", tag_set}, {"single_tag_words", single_tag_words}, {"weights", std::move(weights_json)}};
  return j.dump();
}

TaggerModel TaggerModel::from_json(std::string_view json_text) {
  TaggerModel m;
  try {
    const json j = json::parse(json_text);
    m.tag_set = j.at("tag_set").get<std::vector<std::string>>();
    m.single_tag_words = j.at("single_tag_words").get<std::map<std::string, std::string>>();
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t t = 0; t < m.tag_set.size(); ++t) idx.emplace(m.tag_set[t], t);
    for (const auto& [feat, per_tag] : j.at("weights").items()) {
      std::vector<double> w(m.tag_set.size(), 0.0);
      for (const auto& [tag, v] : per_tag.items()) {
        auto it = idx.find(tag);
        if (it == idx.end()) throw ProtocolError("tagger model references unknown tag " + tag);
        w[it->second] = v.get<double>();
        if (!std::isfinite(w[it->second])) throw NumericError("tagger model has a non-finite weight");
      }
      m.weights.emplace(feat, std::move(w));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("invalid tagger model: ") + e.what());
  }
  if (m.tag_set.empty()) throw ProtocolError("tagger model has an empty tag set");
  return m;
}

void TaggerModel::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

TaggerModel TaggerModel::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace nli::postag
