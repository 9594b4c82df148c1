#include "nli/grammar.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/text.hpp"

namespace nli::grammar {

using nlohmann::json;

std::vector<GrammarMatch> parse_matches(std::string_view response_json) {
  json j;
  try {
    j = json::parse(response_json);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("grammar service returned invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("grammar service response is not a JSON object");
  std::vector<GrammarMatch> out;
  auto it = j.find("matches");
  if (it == j.end()) return out;
  if (!it->is_array()) throw ProtocolError("grammar service response: \"matches\" is not an array");
  for (const auto& m : *it) {
    try {
      GrammarMatch gm;
      gm.rule_id = m.at("rule").at("id").get<std::string>();
      gm.offset = m.value("offset", std::int64_t{0});
      gm.length = m.value("length", std::int64_t{0});
      if (gm.offset < 0 || gm.length < 0) throw ProtocolError("grammar match with negative offset/length");
      out.push_back(std::move(gm));
    } catch (const json::exception& e) {
      throw ProtocolError(std::string("grammar service response: malformed match: ") + e.what());
    }
  }
  return out;
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ResponseCache::key_for(std::string_view request_text) { return io::sha256_hex(request_text); }

std::filesystem::path ResponseCache::path_for(const std::string& key) const { return dir_ / (key + ".json"); }

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  const auto p = path_for(key);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(p, ec)) return std::nullopt;
  return io::read_file(p);
}

void ResponseCache::put(const std::string& key, std::string_view bytes) const { io::write_file(path_for(key), bytes); }

GrammarClient::GrammarClient(std::shared_ptr<Transport> transport, ResponseCache cache, ClientOptions options)
    : transport_(std::move(transport)), cache_(std::move(cache)), options_(std::move(options)) {
  if (!options_.offline && !transport_) throw ConfigError("grammar client needs an endpoint unless running offline");
  if (options_.max_in_flight == 0) options_.max_in_flight = 1;
  if (options_.max_retries < 0) options_.max_retries = 0;
}

void GrammarClient::throttle() {
  if (options_.requests_per_second <= 0.0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(throttle_lock_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(1.0 / options_.requests_per_second));
  }
  std::this_thread::sleep_until(slot);
}

std::string GrammarClient::fetch(const std::string& text) {
  std::string last_error;
  auto delay = options_.backoff;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    throttle();
    ++network_calls_;
    try {
      HttpResponse r = transport_->post_check(text, options_.language);
      if (r.status == 200) return std::move(r.body);
      last_error = "HTTP status " + std::to_string(r.status);
      const bool retryable = r.status == 429 || r.status >= 500;
      if (!retryable) break;
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw TransportError("grammar service request failed after " + std::to_string(options_.max_retries) +
                       " retries: " + last_error);
}

std::set<std::string> GrammarClient::check_text(const std::vector<std::string>& sentences) {
  const std::string request = text::join(sentences, "\n");
  if (request.empty()) return {};
  const std::string key = ResponseCache::key_for(request);

  std::string body;
  {
    std::lock_guard lock(key_locks_[std::hash<std::string>{}(key) % key_locks_.size()]);
    if (auto cached = cache_.get(key)) {
      ++cache_hits_;
      body = std::move(*cached);
    } else {
      if (options_.offline) {
        throw CacheMissError("offline mode: no cached grammar response for request " + key + " in " +
                             cache_.dir().string());
      }
      body = fetch(request);
      // Only responses that parse are cached.
      parse_matches(body);
      cache_.put(key, body);
    }
  }
  std::set<std::string> rules;
  for (auto& m : parse_matches(body)) rules.insert(std::move(m.rule_id));
  return rules;
}

std::vector<std::set<std::string>> GrammarClient::check_chunks(std::span<const corpus::Chunk> chunks) {
  std::vector<std::set<std::string>> out(chunks.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_lock;
  std::exception_ptr first_error;
  std::size_t first_error_index = chunks.size();

  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= chunks.size()) return;
      try {
        out[i] = check_text(chunks[i].sentences);
      } catch (...) {
        std::lock_guard lock(error_lock);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
        next.store(chunks.size());
        return;
      }
    }
  };

  const std::size_t n_workers = std::min(options_.max_in_flight, std::max<std::size_t>(chunks.size(), 1));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::ptrdiff_t GrammarVocabulary::index_of(std::string_view rule_id) const {
  auto it = std::lower_bound(rule_ids.begin(), rule_ids.end(), rule_id);
  if (it != rule_ids.end() && *it == rule_id) return it - rule_ids.begin();
  return -1;
}

GrammarVocabulary fit_grammar_vocab(std::span<const std::set<std::string>> rules_per_chunk) {
  std::set<std::string> all;
  for (const auto& rules : rules_per_chunk) all.insert(rules.begin(), rules.end());
  return GrammarVocabulary{std::vector<std::string>(all.begin(), all.end())};
}

GrammarVocabulary fit_grammar_vocab(std::span<const corpus::Chunk> train_chunks, GrammarClient& client) {
  const auto rules = client.check_chunks(train_chunks);
  return fit_grammar_vocab(std::span<const std::set<std::string>>(rules));
}

std::vector<double> grammar_features(const std::set<std::string>& chunk_rule_ids, const GrammarVocabulary& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  for (const auto& r : chunk_rule_ids) {
    const auto idx = vocab.index_of(r);
    if (idx >= 0) out[static_cast<std::size_t>(idx)] = 1.0;
  }
  return out;
}

std::string resolve_endpoint(const std::optional<std::string>& flag_value, const std::string& config_value) {
  if (flag_value && !flag_value->empty()) return *flag_value;
  if (const char* env = std::getenv(std::string(kEndpointEnvVar).c_str()); env != nullptr && *env != '\0') {
    return env;
  }
  return config_value;
}

}  // namespace nli::grammar
