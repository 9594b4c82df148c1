#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <thread>

#include "nli/errors.hpp"
#include "nli/grammar.hpp"
#include "nli/io.hpp"
#include "nli/synth.hpp"

#include <httplib.h>

using namespace nli;
using namespace nli::grammar;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Replies with a fixed script of statuses, then 200 with an empty match list.
class ScriptedTransport final : public Transport {
 public:
  explicit ScriptedTransport(std::vector<int> statuses) : statuses_(std::move(statuses)) {}
  HttpResponse post_check(std::string_view, std::string_view) override {
    const std::size_t i = calls++;
    if (i < statuses_.size()) {
      if (statuses_[i] < 0) throw TransportError("connection refused");
      return {statuses_[i], "busy"};
    }
    return {200, R"({"matches":[]})"};
  }
  std::size_t calls = 0;

 private:
  std::vector<int> statuses_;
};

ClientOptions fast_options() {
  ClientOptions o;
  o.backoff = std::chrono::milliseconds(1);
  return o;
}

}  // namespace

TEST_CASE("parse_matches reads rule ids, offsets and lengths") {
  const auto m = parse_matches(
      R"({"matches":[{"offset":3,"length":2,"rule":{"id":"A"}},{"offset":0,"length":1,"rule":{"id":"B"}}]})");
  REQUIRE(m.size() == 2);
  CHECK(m[0].rule_id == "A");
  CHECK(m[0].offset == 3);
  CHECK(m[1].length == 1);
  CHECK(parse_matches(R"({"matches":[]})").empty());
  CHECK_THROWS_AS(parse_matches("not json"), ProtocolError);
  CHECK_THROWS_AS(parse_matches(R"({"matches":[{"offset":-1,"length":1,"rule":{"id":"A"}}]})"), ProtocolError);
}

TEST_CASE("empty text needs no request") {
  auto transport = std::make_shared<ScriptedTransport>(std::vector<int>{});
  GrammarClient client(transport, ResponseCache(fresh_dir("nli_g_empty")), fast_options());
  CHECK(client.check_text({}).empty());
  CHECK(transport->calls == 0);
}

TEST_CASE("identical text is served from the cache the second time") {
  auto checker = std::make_shared<synth::StubChecker>();
  auto transport = std::make_shared<synth::StubTransport>(checker);
  const auto dir = fresh_dir("nli_g_cache");
  GrammarClient client(transport, ResponseCache(dir), fast_options());
  const std::vector<std::string> text{"He want a new car.", "i like it ."};
  const auto first = client.check_text(text);
  const auto second = client.check_text(text);
  CHECK(first == second);
  CHECK(first.count("HE_VERB_AGR") == 1);
  CHECK(first.count("I_LOWERCASE") == 1);
  CHECK(transport->calls() == 1);
  CHECK(client.cache_hits() == 1);

  // A fresh client over the same directory never touches the network.
  GrammarClient offline(nullptr, ResponseCache(dir), ClientOptions{.offline = true});
  CHECK(offline.check_text(text) == first);
}

TEST_CASE("cache round trip is byte identical") {
  ResponseCache cache(fresh_dir("nli_g_bytes"));
  const std::string bytes = "{\"matches\":[]}\n\xc3\xa9 \r\n";
  const auto key = ResponseCache::key_for("some text");
  CHECK(key == io::sha256_hex("some text"));
  cache.put(key, bytes);
  CHECK(cache.get(key) == bytes);
  CHECK_FALSE(cache.get(ResponseCache::key_for("other")));
}

TEST_CASE("committed fixture response for a known agreement error") {
  GrammarClient client(nullptr, ResponseCache(std::string(NLI_FIXTURE_DIR) + "/grammar-cache"),
                       ClientOptions{.offline = true});
  CHECK(client.check_text({"He want a new car."}) == std::set<std::string>{"HE_VERB_AGR"});
  CHECK_THROWS_AS(client.check_text({"Not in the fixture."}), CacheMissError);
}

TEST_CASE("retries transient failures then gives up") {
  auto flaky = std::make_shared<ScriptedTransport>(std::vector<int>{503, -1, 429});
  GrammarClient ok(flaky, ResponseCache(fresh_dir("nli_g_retry")), fast_options());
  CHECK(ok.check_text({"x y"}).empty());
  CHECK(flaky->calls == 4);

  auto down = std::make_shared<ScriptedTransport>(std::vector<int>{500, 500, 500, 500, 500});
  GrammarClient bad(down, ResponseCache(fresh_dir("nli_g_down")), fast_options());
  CHECK_THROWS_AS(bad.check_text({"x y"}), TransportError);
  CHECK(down->calls == 4);

  auto rejected = std::make_shared<ScriptedTransport>(std::vector<int>{400});
  GrammarClient client_error(rejected, ResponseCache(fresh_dir("nli_g_400")), fast_options());
  CHECK_THROWS_AS(client_error.check_text({"x y"}), TransportError);
  CHECK(rejected->calls == 1);
}

TEST_CASE("unparseable responses are not cached") {
  class Garbage final : public Transport {
    HttpResponse post_check(std::string_view, std::string_view) override { return {200, "<html>"}; }
  };
  const auto dir = fresh_dir("nli_g_garbage");
  GrammarClient client(std::make_shared<Garbage>(), ResponseCache(dir), fast_options());
  CHECK_THROWS_AS(client.check_text({"x"}), ProtocolError);
  CHECK(std::filesystem::is_empty(dir));
}

TEST_CASE("check_chunks keeps input order under concurrency") {
  auto transport = std::make_shared<synth::StubTransport>(std::make_shared<synth::StubChecker>());
  ClientOptions o = fast_options();
  o.max_in_flight = 4;
  GrammarClient client(transport, ResponseCache(fresh_dir("nli_g_chunks")), o);
  std::vector<corpus::Chunk> chunks(12);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    chunks[i].chunk_id = "c#" + std::to_string(i);
    chunks[i].sentences = {i % 2 ? "He want it." : "Fine text here.", "Number " + std::to_string(i) + "."};
  }
  const auto rules = client.check_chunks(chunks);
  REQUIRE(rules.size() == chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) CHECK(rules[i].count("HE_VERB_AGR") == (i % 2));
  CHECK(transport->calls() == chunks.size());
}

TEST_CASE("grammar vocabulary and presence features") {
  const std::vector<std::set<std::string>> per_chunk{{"A", "B"}, {"B", "C"}};
  const auto vocab = fit_grammar_vocab(per_chunk);
  CHECK(vocab.rule_ids == std::vector<std::string>{"A", "B", "C"});
  CHECK(fit_grammar_vocab(std::vector<std::set<std::string>>{{}, {}}).size() == 0);
  const GrammarVocabulary ab{{"A", "B"}};
  CHECK(grammar_features({"A"}, ab) == std::vector<double>{1, 0});
  CHECK(grammar_features({}, ab) == std::vector<double>{0, 0});
  CHECK(grammar_features({"Z"}, ab) == std::vector<double>{0, 0});
}

TEST_CASE("endpoint resolution order") {
  ::unsetenv(std::string(kEndpointEnvVar).c_str());
  CHECK(resolve_endpoint(std::nullopt, "http://cfg") == "http://cfg");
  ::setenv(std::string(kEndpointEnvVar).c_str(), "http://env", 1);
  CHECK(resolve_endpoint(std::nullopt, "http://cfg") == "http://env");
  CHECK(resolve_endpoint(std::string("http://flag"), "http://cfg") == "http://flag");
  ::unsetenv(std::string(kEndpointEnvVar).c_str());
}

TEST_CASE("http transport speaks the check protocol over loopback") {
  const synth::StubChecker checker;
  httplib::Server server;
  std::string seen_language;
  server.Post("/lt/v2/check", [&](const httplib::Request& req, httplib::Response& res) {
    seen_language = req.get_param_value("language");
    res.set_content(checker.check_json(req.get_param_value("text")), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto transport = std::make_shared<HttpTransport>("http://127.0.0.1:" + std::to_string(port) + "/lt/");
  GrammarClient client(transport, ResponseCache(fresh_dir("nli_g_http")), fast_options());
  CHECK(client.check_text({"He want a new car."}) == std::set<std::string>{"HE_VERB_AGR"});
  CHECK(seen_language == "en-US");
  server.stop();
  th.join();

  CHECK_THROWS_AS(HttpTransport("ftp://x"), ConfigError);
  CHECK_THROWS_AS(HttpTransport("localhost:8081"), ConfigError);
}

TEST_CASE("unreachable service surfaces a transport error") {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  auto transport = std::make_shared<HttpTransport>("http://127.0.0.1:" + std::to_string(port), std::chrono::seconds(2));
  ClientOptions o = fast_options();
  o.max_retries = 0;
  GrammarClient client(transport, ResponseCache(fresh_dir("nli_g_unreach")), o);
  CHECK_THROWS_AS(client.check_text({"x"}), TransportError);
}
