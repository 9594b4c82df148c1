#include "nli/embedstore.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"

namespace nli::embedstore {

using nlohmann::json;

void EmbeddingRecord::validate() const {
  if (chunk_id.empty()) throw ConfigError("embedding record has an empty chunk_id");
  if (vector.size() != kEmbeddingDim) {
    throw ConfigError("embedding for " + chunk_id + " has length " + std::to_string(vector.size()) + ", expected " +
                      std::to_string(kEmbeddingDim));
  }
  if (std::find(kInputSizes.begin(), kInputSizes.end(), input_size) == kInputSizes.end()) {
    throw ConfigError("embedding for " + chunk_id + " has input_size " + std::to_string(input_size) +
                      ", expected one of 512, 2048, 4096");
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw ConfigError("embedding for " + chunk_id + " contains a non-finite value");
  }
}

void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path) {
  for (const auto& r : records) r.validate();
  std::string out;
  for (const auto& r : records) {
    // nlohmann/json prints doubles in their shortest round-trip form.
    json obj = {{"chunk_id", r.chunk_id},
                {"label", r.label},
                {"model_tag", r.model_tag},
                {"input_size", r.input_size},
                {"vector", r.vector}};
    out += obj.dump();
    out.push_back('\n');
  }
  io::write_file(path, out);
}

std::vector<EmbeddingRecord> parse_embeddings(std::string_view contents, const std::string& source) {
  std::vector<EmbeddingRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    const std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    EmbeddingRecord r;
    try {
      const json obj = json::parse(line);
      r.chunk_id = obj.at("chunk_id").get<std::string>();
      r.label = obj.at("label").get<std::string>();
      r.model_tag = obj.at("model_tag").get<std::string>();
      r.input_size = obj.at("input_size").get<int>();
      r.vector = obj.at("vector").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
    try {
      r.validate();
    } catch (const ConfigError& e) {
      throw ParseError(source, line_no, e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  return parse_embeddings(io::read_file(path), path.string());
}

JoinResult join(std::span<const EmbeddingRecord> records, std::span<const corpus::Chunk> chunks) {
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!by_id.emplace(records[i].chunk_id, i).second) {
      throw DuplicateError("embedding file holds more than one record for chunk " + records[i].chunk_id);
    }
  }

  std::vector<std::string> missing;
  for (const auto& c : chunks) {
    if (!by_id.count(c.chunk_id)) missing.push_back(c.chunk_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 20) list += ", ...";
    throw ProtocolError("no embedding for " + std::to_string(missing.size()) + " requested chunk(s): " + list);
  }

  JoinResult result;
  Eigen::MatrixXd dense(static_cast<Eigen::Index>(chunks.size()), static_cast<Eigen::Index>(kEmbeddingDim));
  std::string provenance;
  for (std::size_t r = 0; r < chunks.size(); ++r) {
    const auto& rec = records[by_id.at(chunks[r].chunk_id)];
    if (rec.label != chunks[r].label) {
      throw ProtocolError("label mismatch for chunk " + chunks[r].chunk_id + ": embedding says \"" + rec.label +
                          "\", chunk store says \"" + chunks[r].label + "\"");
    }
    if (r == 0) {
      result.model_tag = rec.model_tag;
      result.input_size = rec.input_size;
    } else if (rec.model_tag != result.model_tag || rec.input_size != result.input_size) {
      throw ProtocolError("embedding records mix model tags or input sizes");
    }
    for (std::size_t k = 0; k < kEmbeddingDim; ++k) dense(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = rec.vector[k];
    result.matrix.ids.push_back(chunks[r].chunk_id);
    result.matrix.labels.push_back(chunks[r].label);
  }
  result.extra_records = records.size() - chunks.size();
  result.matrix.X = to_sparse(dense);
  result.matrix.fingerprint =
      io::sha256_hex("embeddings|" + result.model_tag + "|" + std::to_string(result.input_size));
  return result;
}

JoinResult read_and_join(const std::filesystem::path& path, std::span<const corpus::Chunk> chunks) {
  return join(read_embeddings(path), chunks);
}

}  // namespace nli::embedstore
