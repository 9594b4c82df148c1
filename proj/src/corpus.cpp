#include "nli/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/rng.hpp"
#include "nli/text.hpp"

namespace nli::corpus {

using nlohmann::json;

const char* to_string(Partition p) noexcept {
  return p == Partition::europe ? "europe" : "non_europe";
}

const char* to_string(Split s) noexcept {
  switch (s) {
    case Split::tune: return "tune";
    case Split::exp: return "exp";
    case Split::oos: return "oos";
    case Split::unassigned: break;
  }
  return "unassigned";
}

Partition parse_partition(std::string_view s) {
  if (s == "europe") return Partition::europe;
  if (s == "non_europe") return Partition::non_europe;
  throw ConfigError("unknown partition '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "tune") return Split::tune;
  if (s == "exp") return Split::exp;
  if (s == "oos") return Split::oos;
  if (s == "unassigned") return Split::unassigned;
  throw ConfigError("unknown split '" + std::string(s) + "'");
}

std::string Chunk::text() const { return text::join(sentences, "\n"); }

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
}

LabelSet LabelSet::from_records(std::span<const AuthorRecord> records) {
  std::vector<std::string> labels;
  for (const auto& r : records) labels.push_back(r.native_language);
  return LabelSet(std::move(labels));
}

LabelSet LabelSet::from_chunks(std::span<const Chunk> chunks) {
  std::vector<std::string> labels;
  for (const auto& c : chunks) labels.push_back(c.label);
  return LabelSet(std::move(labels));
}

std::size_t LabelSet::index_of(std::string_view label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it != labels_.end() && *it == label) return static_cast<std::size_t>(it - labels_.begin());
  return labels_.size();
}

void SamplingConfig::validate() const {
  if (authors_per_language == 0) throw ConfigError("authors_per_language must be positive");
  if (chunk_cap_per_author == 0) throw ConfigError("chunk_cap_per_author must be positive");
}

namespace {

const json& require_key(const json& obj, const char* key, const std::string& source, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(source, line, std::string("missing key \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& source, std::size_t line) {
  const json& v = require_key(obj, key, source, line);
  if (!v.is_string()) throw ParseError(source, line, std::string("key \"") + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

std::vector<AuthorRecord> parse_corpus(std::string_view contents, const std::string& source) {
  std::vector<AuthorRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(source, line_no, "expected a JSON object");

    AuthorRecord rec;
    rec.author_id = require_string(obj, "author_id", source, line_no);
    rec.native_language = require_string(obj, "native_language", source, line_no);
    const std::string partition = require_string(obj, "partition", source, line_no);
    if (partition == "europe") {
      rec.partition = Partition::europe;
    } else if (partition == "non_europe") {
      rec.partition = Partition::non_europe;
    } else {
      throw ParseError(source, line_no, "key \"partition\" must be \"europe\" or \"non_europe\"");
    }
    const json& sents = require_key(obj, "sentences", source, line_no);
    if (!sents.is_array()) throw ParseError(source, line_no, "key \"sentences\" must be an array");
    rec.sentences.reserve(sents.size());
    for (const auto& s : sents) {
      if (!s.is_string()) throw ParseError(source, line_no, "key \"sentences\" must hold strings");
      rec.sentences.push_back(s.get<std::string>());
    }
    if (rec.sentences.empty()) throw ParseError(source, line_no, "key \"sentences\" is empty");
    if (rec.author_id.empty()) throw ParseError(source, line_no, "key \"author_id\" is empty");
    if (!seen.insert(rec.author_id).second) {
      throw DuplicateError(source + ":" + std::to_string(line_no) + ": duplicate author_id \"" + rec.author_id + "\"");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<AuthorRecord> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(io::read_file(path), path.string());
}

std::string preprocess_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (std::string_view tok : text::split_ws(raw)) {
    if (!out.empty()) out.push_back(' ');
    if (tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.")) {
      out.append(kUrlToken);
    } else {
      out.append(tok);
    }
  }
  return out;
}

AuthorRecord preprocess_record(AuthorRecord record) {
  std::vector<std::string> kept;
  kept.reserve(record.sentences.size());
  for (const auto& s : record.sentences) {
    std::string clean = preprocess_text(s);
    if (!clean.empty()) kept.push_back(std::move(clean));
  }
  record.sentences = std::move(kept);
  return record;
}

std::vector<Chunk> chunk_author(const AuthorRecord& record, std::size_t chunk_size) {
  if (chunk_size == 0) throw ConfigError("chunk_size must be positive");
  std::vector<Chunk> chunks;
  const std::size_t n = record.sentences.size() / chunk_size;
  chunks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Chunk c;
    c.chunk_id = record.author_id + "#" + std::to_string(i);
    c.author_id = record.author_id;
    c.label = record.native_language;
    c.partition = record.partition;
    c.split = record.partition == Partition::europe ? Split::oos : Split::unassigned;
    const auto first = record.sentences.begin() + static_cast<std::ptrdiff_t>(i * chunk_size);
    c.sentences.assign(first, first + static_cast<std::ptrdiff_t>(chunk_size));
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<AuthorRecord> balance_authors(std::span<const AuthorRecord> records, std::size_t n_per_language,
                                          std::uint64_t seed) {
  if (n_per_language == 0) throw ConfigError("authors_per_language must be positive");
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < records.size(); ++i) by_label[records[i].native_language].push_back(i);

  for (const auto& [label, members] : by_label) {
    if (members.size() < n_per_language) {
      throw ConfigError("label \"" + label + "\" has " + std::to_string(members.size()) +
                        " authors, fewer than the " + std::to_string(n_per_language) + " required");
    }
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (const auto& [label, members] : by_label) {
    for (std::size_t k : rng.sample_indices(members.size(), n_per_language)) chosen.push_back(members[k]);
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<AuthorRecord> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(records[i]);
  return out;
}

std::vector<Chunk> cap_chunks(std::span<const std::vector<Chunk>> chunks_by_author, std::size_t cap,
                              std::uint64_t seed) {
  if (cap == 0) throw ConfigError("chunk cap must be positive");
  Rng rng(seed);
  std::vector<Chunk> out;
  for (const auto& group : chunks_by_author) {
    if (group.size() <= cap) {
      out.insert(out.end(), group.begin(), group.end());
      continue;
    }
    for (std::size_t k : rng.sample_indices(group.size(), cap)) out.push_back(group[k]);
  }
  return out;
}

SplitResult make_splits(std::span<const Chunk> chunks, std::uint64_t seed) {
  for (const auto& c : chunks) {
    if (c.partition == Partition::europe) {
      throw ProtocolError("chunk " + c.chunk_id + " belongs to the europe partition and cannot be split");
    }
  }
  std::vector<std::size_t> order(chunks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t n_tune = (chunks.size() + 1) / 2;
  std::vector<char> is_tune(chunks.size(), 0);
  for (std::size_t i = 0; i < n_tune; ++i) is_tune[order[i]] = 1;

  SplitResult result;
  result.tune.reserve(n_tune);
  result.exp.reserve(chunks.size() - n_tune);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    Chunk c = chunks[i];
    if (is_tune[i]) {
      c.split = Split::tune;
      result.tune.push_back(std::move(c));
    } else {
      c.split = Split::exp;
      result.exp.push_back(std::move(c));
    }
  }
  return result;
}

void write_chunks(std::span<const Chunk> chunks, const std::filesystem::path& path) {
  std::string out;
  for (const auto& c : chunks) {
    json obj = {{"chunk_id", c.chunk_id},     {"author_id", c.author_id},
                {"label", c.label},           {"partition", to_string(c.partition)},
                {"split", to_string(c.split)}, {"sentences", c.sentences}};
    out += obj.dump();
    out.push_back('\n');
  }
  io::write_file(path, out);
}

std::vector<Chunk> read_chunks(const std::filesystem::path& path) {
  const std::string contents = io::read_file(path);
  const std::string source = path.string();
  std::vector<Chunk> chunks;
  std::unordered_set<std::string> seen;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json obj = json::parse(line);
      Chunk c;
      c.chunk_id = obj.at("chunk_id").get<std::string>();
      c.author_id = obj.at("author_id").get<std::string>();
      c.label = obj.at("label").get<std::string>();
      c.partition = parse_partition(obj.at("partition").get<std::string>());
      c.split = parse_split(obj.at("split").get<std::string>());
      c.sentences = obj.at("sentences").get<std::vector<std::string>>();
      if (!seen.insert(c.chunk_id).second) throw DuplicateError(source + ": duplicate chunk_id " + c.chunk_id);
      chunks.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const ConfigError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return chunks;
}

void write_split_manifest(std::span<const Chunk> chunks, const std::filesystem::path& path) {
  std::string out;
  for (const auto& c : chunks) {
    out += json{{"chunk_id", c.chunk_id}, {"split", to_string(c.split)}}.dump();
    out.push_back('\n');
  }
  io::write_file(path, out);
}

std::vector<Chunk> select_split(std::span<const Chunk> chunks, Split split) {
  std::vector<Chunk> out;
  for (const auto& c : chunks) {
    if (c.split == split) out.push_back(c);
  }
  return out;
}

}  // namespace nli::corpus
