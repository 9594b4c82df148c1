#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <set>
#include <string>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/pipeline.hpp"

using namespace nli;
using namespace nli::pipeline;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run(const std::string& cmd) {
  Run r;
  FILE* p = ::popen((cmd + " 2>&1").c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::string nli_cmd(const fs::path& out) {
  return quoted(NLI_CLI) + " -c " + quoted(fs::path(NLI_DATA_DIR) / "synthetic" / "config.json") + " --out-dir " +
         quoted(out);
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config rejects unknown keys at every level") {
  CHECK_THROWS_AS(RunConfig::from_json(json{{"sed", 1}}, "/x"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"paths", {{"corpos", "a"}}}}, "/x"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"evaluation", {{"fold", 3}}}}, "/x"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"seed", "forty-two"}}, "/x"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json{{"feature_set", "words"}}, "/x"), ConfigError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto c = RunConfig::from_json(
      json{{"paths", {{"corpus", "c.jsonl"}, {"cache_dir", "../cache"}, {"out_dir", "/abs/out"}}}}, "/base/dir");
  CHECK(c.paths.corpus == fs::path("/base/dir/c.jsonl"));
  CHECK(c.paths.cache_dir == fs::path("/base/cache"));
  CHECK(c.paths.out_dir == fs::path("/abs/out"));
  CHECK(RunConfig::from_json(json::object(), "/base").paths.out_dir == fs::path("/base/out"));
}

TEST_CASE("config json round trip and defaults") {
  const auto c = RunConfig::load(fs::path(NLI_DATA_DIR) / "synthetic" / "config.json");
  CHECK(c.seed == 42);
  CHECK(c.sampling.authors_per_language == 8);
  CHECK(c.evaluation.n_holdout == 100);
  CHECK_FALSE(c.evaluation.record_timing);
  CHECK(c.evaluation.percents == std::vector<int>{10, 20, 40, 80});
  const auto back = RunConfig::from_json(json::parse(c.to_json().dump()), fs::current_path());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
}

TEST_CASE("config hash ignores settings that cannot change results") {
  RunConfig a;
  a.seed = 5;
  const std::string h = a.hash();
  CHECK(h.size() == 64);
  RunConfig b = a;
  b.threads = 7;
  b.paths.out_dir = "/somewhere/else";
  b.grammar.endpoint = "http://other:1";
  b.grammar.max_in_flight = 1;
  CHECK(b.hash() == h);
  b.seed = 6;
  CHECK(b.hash() != h);
  RunConfig d = a;
  d.classifier.C = 2.0;
  CHECK(d.hash() != h);
}

TEST_CASE("stage seeds are named, distinct and reproducible") {
  const auto s = stage_seeds(42);
  CHECK(s == stage_seeds(42));
  CHECK(s != stage_seeds(43));
  std::set<std::uint64_t> values;
  for (const auto& [name, v] : s.items()) values.insert(v.get<std::uint64_t>());
  CHECK(values.size() == s.size());
  CHECK(s.size() >= 3);
}

TEST_CASE("manifest lists every output with its digest") {
  const auto dir = fresh_dir("nli_manifest");
  io::write_file(dir / "b.txt", "bee\n");
  io::write_file(dir / "sub" / "a.json", "{}\n");
  RunConfig c;
  write_manifest(dir, c, "test");
  const auto m = json::parse(io::read_file(dir / "run-manifest.json"));
  CHECK(m["stage"] == "test");
  CHECK(m["config_hash"] == c.hash());
  REQUIRE(m["outputs"].size() == 2);
  CHECK(m["outputs"][0]["file"] == "b.txt");
  CHECK(m["outputs"][0]["sha256"] == io::sha256_hex("bee\n"));
  CHECK(m["outputs"][1]["file"] == "sub/a.json");
}

TEST_CASE("cli usage and error exit codes") {
  const auto none = run(quoted(NLI_CLI));
  CHECK(none.code == 2);
  CHECK(none.output.find("prepare") != std::string::npos);
  CHECK(run(quoted(NLI_CLI) + " frobnicate").code == 2);
  CHECK(run(quoted(NLI_CLI) + " --help").code == 0);

  const auto missing = run(quoted(NLI_CLI) + " -c /nonexistent/nli.json prepare");
  CHECK(missing.code == 2);
  CHECK(missing.output.find("config") != std::string::npos);

  const auto dir = fresh_dir("nli_cli_errors");
  io::write_file(dir / "bad.json", "{\"seed\": ");
  CHECK(run(quoted(NLI_CLI) + " -c " + quoted(dir / "bad.json") + " prepare").code == 2);
  io::write_file(dir / "unknown.json", "{\"sede\": 1}");
  CHECK(run(quoted(NLI_CLI) + " -c " + quoted(dir / "unknown.json") + " prepare").code == 2);

  // A later stage without its inputs is an io failure.
  CHECK(run(nli_cmd(dir / "out") + " cv").code == 3);
}

TEST_CASE("offline grammar cache miss is a protocol failure") {
  const auto dir = fresh_dir("nli_cli_offline");
  REQUIRE(run(nli_cmd(dir / "out") + " prepare").code == 0);
  fs::create_directories(dir / "empty-cache");
  const auto r = run(nli_cmd(dir / "out") + " --cache-dir " + quoted(dir / "empty-cache") + " --offline features");
  CHECK(r.code == 4);
}

TEST_CASE("embedding pipeline end to end through the cli") {
  const auto dir = fresh_dir("nli_cli_embed");
  const auto out = dir / "out";
  REQUIRE(run(nli_cmd(out) + " prepare").code == 0);
  const auto emb = dir / "emb.jsonl";
  const auto gen = run(quoted(NLI_SYNTH_CLI) + " embeddings --chunks " + quoted(out / "prepare" / "chunks.jsonl") +
                       " --out " + quoted(emb) + " --noise 6 --slices 10,20,40,80");
  REQUIRE(gen.code == 0);
  const std::string base = nli_cmd(out) + " --embeddings " + quoted(emb) + " --feature-set embeddings";
  for (const char* stage : {"embed-import", "cv", "oos", "length-sense", "cluster", "pca", "report"}) {
    const auto r = run(base + " " + stage);
    INFO(stage << ": " << r.output);
    CHECK(r.code == 0);
  }
  const auto cv = json::parse(io::read_file(out / "cv" / "synthetic-2048.json"));
  CHECK(cv["per_fold"].size() == 10);
  CHECK(cv["acva"].get<double>() >= 0.9);
  const auto oos = json::parse(io::read_file(out / "oos" / "synthetic-2048.json"));
  CHECK(oos["oosa"].get<double>() >= 0.9);
  for (const auto& entry : fs::directory_iterator(out)) {
    if (entry.is_directory()) CHECK(fs::exists(entry.path() / "run-manifest.json"));
  }
}
