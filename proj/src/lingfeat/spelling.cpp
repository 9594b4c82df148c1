#include "nli/lingfeat/spelling.hpp"

#include <algorithm>
#include <charconv>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/lingfeat/edit_ops.hpp"
#include "nli/text.hpp"

namespace nli::lingfeat {

Dictionary::Dictionary(std::vector<std::pair<std::string, std::uint64_t>> entries) {
  std::sort(entries.begin(), entries.end());
  for (auto& e : entries) {
    if (e.first.empty()) continue;
    if (!entries_.empty() && entries_.back().first == e.first) {
      entries_.back().second += e.second;
    } else {
      entries_.push_back(std::move(e));
    }
  }
  index_.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].first, i);
}

Dictionary Dictionary::load(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), line_no, "expected word<TAB>frequency");
    std::uint64_t freq = 0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, freq);
    if (ec != std::errc() || ptr != last) throw ParseError(path.string(), line_no, "invalid frequency");
    entries.emplace_back(text::to_lower_utf8(line.substr(0, tab)), freq);
  }
  return Dictionary(std::move(entries));
}

bool Dictionary::contains(std::string_view word) const { return index_.find(std::string(word)) != index_.end(); }

std::uint64_t Dictionary::frequency(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? 0 : entries_[it->second].second;
}

std::string Dictionary::fingerprint() const {
  std::string buf;
  for (const auto& [w, f] : entries_) {
    buf += w;
    buf.push_back('\t');
    buf += std::to_string(f);
    buf.push_back('\n');
  }
  return io::sha256_hex(buf);
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;

// Hash of s with positions skip_a and skip_b removed (npos = keep all).
std::uint64_t hash_without(std::u32string_view s, std::size_t skip_a, std::size_t skip_b) {
  std::uint64_t h = kFnvOffset;
  std::uint64_t len = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i == skip_a || i == skip_b) continue;
    h ^= static_cast<std::uint64_t>(s[i]);
    h *= kFnvPrime;
    ++len;
  }
  h ^= len;
  h *= kFnvPrime;
  return h;
}

void delete_hashes(std::u32string_view s, std::size_t max_distance, std::vector<std::uint64_t>& out) {
  constexpr std::size_t npos = std::u32string_view::npos;
  out.clear();
  out.push_back(hash_without(s, npos, npos));
  if (max_distance >= 1) {
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back(hash_without(s, i, npos));
  }
  if (max_distance >= 2) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t j = i + 1; j < s.size(); ++j) out.push_back(hash_without(s, i, j));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace

SpellIndex::SpellIndex(Dictionary dictionary, std::size_t max_distance)
    : dictionary_(std::move(dictionary)), max_distance_(max_distance) {
  if (max_distance > 2) throw ConfigError("spell index supports a maximum lookup distance of 2");
  terms_.reserve(dictionary_.size());
  std::vector<std::uint64_t> hashes;
  for (std::size_t w = 0; w < dictionary_.entries().size(); ++w) {
    terms_.push_back(text::decode_utf8(dictionary_.entries()[w].first));
    delete_hashes(terms_.back(), max_distance_, hashes);
    for (auto h : hashes) deletes_.emplace_back(h, static_cast<std::uint32_t>(w));
  }
  std::sort(deletes_.begin(), deletes_.end());
}

std::optional<Suggestion> SpellIndex::lookup(std::string_view word) const {
  if (word.empty() || dictionary_.contains(word)) return std::nullopt;
  const std::u32string query = text::decode_utf8(word);

  std::vector<std::uint64_t> hashes;
  delete_hashes(query, max_distance_, hashes);
  std::vector<std::uint32_t> candidates;
  for (auto h : hashes) {
    auto it = std::lower_bound(deletes_.begin(), deletes_.end(), std::make_pair(h, std::uint32_t{0}));
    for (; it != deletes_.end() && it->first == h; ++it) candidates.push_back(it->second);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::optional<Suggestion> best;
  for (std::uint32_t w : candidates) {
    const std::size_t dist = osa_distance(query, terms_[w], max_distance_);
    if (dist > max_distance_) continue;
    const auto& [term, freq] = dictionary_.entries()[w];
    const bool better = !best || dist < best->distance ||
                        (dist == best->distance &&
                         (freq > best->frequency || (freq == best->frequency && term < best->term)));
    if (better) best = Suggestion{term, dist, freq};
  }
  return best;
}

std::optional<Suggestion> spell_correct(std::string_view word, const SpellIndex& index) {
  return index.lookup(word);
}

}  // namespace nli::lingfeat
