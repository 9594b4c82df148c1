#pragma once

// Corpus ingestion, normalization, 100-sentence chunking, seeded balancing
// and the tune / exp / oos split.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nli::corpus {

inline constexpr std::size_t kChunkSize = 100;
inline constexpr std::string_view kUrlToken = "<URL>";

enum class Partition { europe, non_europe };
enum class Split { unassigned, tune, exp, oos };

const char* to_string(Partition p) noexcept;
const char* to_string(Split s) noexcept;
Partition parse_partition(std::string_view s);
Split parse_split(std::string_view s);

struct AuthorRecord {
  std::string author_id;
  std::string native_language;
  Partition partition = Partition::non_europe;
  std::vector<std::string> sentences;
};

struct Chunk {
  std::string chunk_id;
  std::string author_id;
  std::string label;
  Partition partition = Partition::non_europe;
  Split split = Split::unassigned;
  std::vector<std::string> sentences;

  // Sentences joined by '\n'.
  std::string text() const;
};

// Sorted, duplicate-free list of native-language labels.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);
  static LabelSet from_records(std::span<const AuthorRecord> records);
  static LabelSet from_chunks(std::span<const Chunk> chunks);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  // Index of label, or size() when absent.
  std::size_t index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label) < labels_.size(); }

 private:
  std::vector<std::string> labels_;
};

struct SamplingConfig {
  std::size_t authors_per_language = 273;
  std::size_t chunk_cap_per_author = 17;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<AuthorRecord> load_corpus(const std::filesystem::path& path);
std::vector<AuthorRecord> parse_corpus(std::string_view contents, const std::string& source = "<memory>");

std::string preprocess_text(std::string_view raw);

// Preprocesses every sentence; sentences left empty are dropped.
AuthorRecord preprocess_record(AuthorRecord record);

std::vector<Chunk> chunk_author(const AuthorRecord& record, std::size_t chunk_size = kChunkSize);

std::vector<AuthorRecord> balance_authors(std::span<const AuthorRecord> records, std::size_t n_per_language,
                                          std::uint64_t seed);

// One group per author, in the order the groups should be visited.
std::vector<Chunk> cap_chunks(std::span<const std::vector<Chunk>> chunks_by_author, std::size_t cap,
                              std::uint64_t seed);

struct SplitResult {
  std::vector<Chunk> tune;
  std::vector<Chunk> exp;
};

SplitResult make_splits(std::span<const Chunk> chunks, std::uint64_t seed);

// Chunk store: JSON lines carrying every Chunk field.
void write_chunks(std::span<const Chunk> chunks, const std::filesystem::path& path);
std::vector<Chunk> read_chunks(const std::filesystem::path& path);
// Split manifest: JSON lines of {chunk_id, split}.
void write_split_manifest(std::span<const Chunk> chunks, const std::filesystem::path& path);

std::vector<Chunk> select_split(std::span<const Chunk> chunks, Split split);

}  // namespace nli::corpus
