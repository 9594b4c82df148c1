#pragma once

// Chunk-level embedding files: the exchange format between the embedding
// exporter and everything downstream of it.

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nli/corpus.hpp"
#include "nli/matrix.hpp"

namespace nli::embedstore {

inline constexpr std::size_t kEmbeddingDim = 768;
inline constexpr std::array<int, 3> kInputSizes = {512, 2048, 4096};

struct EmbeddingRecord {
  std::string chunk_id;
  std::string label;
  std::string model_tag;
  int input_size = 2048;
  std::vector<double> vector;

  // Throws ConfigError describing the first violated invariant.
  void validate() const;
  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

// Validates every record before anything is written.
void write_embeddings(std::span<const EmbeddingRecord> records, const std::filesystem::path& path);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);
std::vector<EmbeddingRecord> parse_embeddings(std::string_view contents, const std::string& source = "<memory>");

struct JoinResult {
  LabeledMatrix matrix;        // row i belongs to chunks[i]
  std::size_t extra_records = 0;  // records for chunks outside the requested set
  std::string model_tag;
  int input_size = 0;
};

// Joins records to the requested chunks, in chunk order.
JoinResult join(std::span<const EmbeddingRecord> records, std::span<const corpus::Chunk> chunks);
JoinResult read_and_join(const std::filesystem::path& path, std::span<const corpus::Chunk> chunks);

}  // namespace nli::embedstore
