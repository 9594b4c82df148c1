#pragma once

// Client for a LanguageTool-compatible grammar service. Rule ids reported for
// a chunk become binary presence features.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nli/corpus.hpp"

namespace nli::grammar {

inline constexpr std::string_view kEndpointEnvVar = "NLI_GRAMMAR_ENDPOINT";

struct GrammarMatch {
  std::string rule_id;
  std::int64_t offset = 0;
  std::int64_t length = 0;
};

// Parses matches[].rule.id (with offset/length) from a /v2/check response.
std::vector<GrammarMatch> parse_matches(std::string_view response_json);

struct HttpResponse {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws TransportError when no response could be obtained.
  virtual HttpResponse post_check(std::string_view text, std::string_view language) = 0;
};

// POST <endpoint>/v2/check with form fields text and language.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string endpoint, std::chrono::seconds timeout = std::chrono::seconds(60));
  HttpResponse post_check(std::string_view text, std::string_view language) override;

 private:
  std::string scheme_host_port_;
  std::string base_path_;
  std::chrono::seconds timeout_;
};

// One file per request: <dir>/<sha256(text)>.json holding the raw response bytes.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string key_for(std::string_view request_text);
  std::filesystem::path path_for(const std::string& key) const;
  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, std::string_view bytes) const;
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct ClientOptions {
  std::string language = "en-US";
  bool offline = false;
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
  std::size_t max_in_flight = 4;
  double requests_per_second = 0.0;  // 0 disables throttling
};

class GrammarClient {
 public:
  // transport may be null in offline mode.
  GrammarClient(std::shared_ptr<Transport> transport, ResponseCache cache, ClientOptions options = {});

  // Sentences are joined with '\n' into a single request.
  std::set<std::string> check_text(const std::vector<std::string>& sentences);
  // Runs check_text for every chunk with at most max_in_flight requests
  // outstanding; results follow the input order.
  std::vector<std::set<std::string>> check_chunks(std::span<const corpus::Chunk> chunks);

  std::uint64_t network_calls() const noexcept { return network_calls_.load(); }
  std::uint64_t cache_hits() const noexcept { return cache_hits_.load(); }
  const ClientOptions& options() const noexcept { return options_; }

 private:
  std::string fetch(const std::string& text);
  void throttle();

  std::shared_ptr<Transport> transport_;
  ResponseCache cache_;
  ClientOptions options_;
  std::array<std::mutex, 64> key_locks_;
  std::mutex throttle_lock_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::atomic<std::uint64_t> network_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
};

struct GrammarVocabulary {
  std::vector<std::string> rule_ids;  // sorted, unique

  std::size_t size() const noexcept { return rule_ids.size(); }
  std::ptrdiff_t index_of(std::string_view rule_id) const;
};

GrammarVocabulary fit_grammar_vocab(std::span<const std::set<std::string>> rules_per_chunk);
GrammarVocabulary fit_grammar_vocab(std::span<const corpus::Chunk> train_chunks, GrammarClient& client);

std::vector<double> grammar_features(const std::set<std::string>& chunk_rule_ids, const GrammarVocabulary& vocab);

// Flag value wins, then the environment variable, then the config value.
std::string resolve_endpoint(const std::optional<std::string>& flag_value, const std::string& config_value);

}  // namespace nli::grammar
