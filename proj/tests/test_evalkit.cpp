#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "nli/embedstore.hpp"
#include "nli/errors.hpp"
#include "nli/evalkit.hpp"
#include "nli/io.hpp"
#include "nli/rng.hpp"
#include "nli/synth.hpp"

using namespace nli;
using namespace nli::evalkit;

namespace {

struct Data {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
};

Data balanced(std::size_t per_class, std::size_t k) {
  Data d;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      d.ids.push_back("L" + std::to_string(c) + "_" + std::to_string(i));
      d.labels.push_back("L" + std::to_string(c));
    }
  }
  return d;
}

LabeledMatrix matrix_from(const Data& d, const std::function<std::vector<double>(std::size_t)>& row) {
  LabeledMatrix m;
  m.ids = d.ids;
  m.labels = d.labels;
  const std::size_t dim = row(0).size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(d.ids.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < d.ids.size(); ++i) {
    const auto r = row(i);
    for (std::size_t j = 0; j < dim; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
  }
  m.X = to_sparse(X);
  m.fingerprint = "fixture";
  return m;
}

std::vector<corpus::Chunk> sentence_chunks(std::size_t per_class, std::size_t n_classes, std::size_t lines) {
  std::vector<corpus::Chunk> out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      corpus::Chunk ch;
      ch.author_id = "a" + std::to_string(c) + "_" + std::to_string(i);
      ch.chunk_id = ch.author_id + "#0";
      ch.label = "Lang" + std::to_string(c);
      ch.split = corpus::Split::exp;
      for (std::size_t s = 0; s < lines; ++s) ch.sentences.push_back("line " + std::to_string(s));
      out.push_back(ch);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("folds partition the data with balanced class counts") {
  const Data d = balanced(37, 5);
  const auto folds = stratified_folds(d.ids, d.labels, 10, 42);
  CHECK(folds.fold_of.size() == d.ids.size());
  std::set<std::size_t> seen;
  for (int f = 0; f < 10; ++f) {
    const auto m = folds.members(f);
    for (auto i : m) CHECK(seen.insert(i).second);
    std::map<std::string, int> per_class;
    for (auto i : m) per_class[d.labels[i]]++;
    for (const auto& [label, n] : per_class) CHECK((n == 3 || n == 4));
    CHECK(folds.complement(f).size() + m.size() == d.ids.size());
  }
  CHECK(seen.size() == d.ids.size());
  for (int f : folds.fold_of) CHECK((f >= 0 && f < 10));
}

TEST_CASE("folds small fixtures") {
  const Data three = balanced(10, 3);
  const auto folds = stratified_folds(three.ids, three.labels, 10, 1);
  for (int f = 0; f < 10; ++f) {
    std::set<std::string> labels;
    for (auto i : folds.members(f)) labels.insert(three.labels[i]);
    CHECK(folds.members(f).size() == 3);
    CHECK(labels.size() == 3);
  }
  const Data one = balanced(23, 1);
  const auto f23 = stratified_folds(one.ids, one.labels, 10, 1);
  for (int f = 0; f < 10; ++f) {
    const auto n = f23.members(f).size();
    CHECK((n == 2 || n == 3));
  }
  const auto again = stratified_folds(one.ids, one.labels, 10, 1);
  CHECK(again.fold_of == f23.fold_of);
  const Data tiny = balanced(4, 2);
  CHECK(stratified_folds(tiny.ids, tiny.labels, 10, 1).warnings.size() == 2);
  CHECK_THROWS_AS(stratified_folds(tiny.ids, tiny.labels, 1, 1), ConfigError);
  auto dup = tiny;
  dup.ids[1] = dup.ids[0];
  CHECK_THROWS_AS(stratified_folds(dup.ids, dup.labels, 2, 1), DuplicateError);
}

TEST_CASE("one-hot label features give perfect cross-validation") {
  const Data d = balanced(20, 4);
  const auto m = matrix_from(d, [&](std::size_t i) {
    std::vector<double> r(4, 0.0);
    r[static_cast<std::size_t>(d.labels[i][1] - '0')] = 1.0;
    return r;
  });
  CvOptions opt;
  opt.record_timing = false;
  const auto rep = cross_validate(m, stratified_folds(d.ids, d.labels, 10, 3), {}, opt);
  CHECK(rep.per_fold.size() == 10);
  CHECK(rep.acva == 1.0);
  CHECK(rep.duration_hours == 0.0);
}

TEST_CASE("acva is exactly the mean of the fold accuracies") {
  const Data d = balanced(30, 3);
  Rng rng(4);
  const auto m = matrix_from(d, [&](std::size_t i) {
    return std::vector<double>{rng.normal() + (d.labels[i] == "L0"), rng.normal(), rng.normal() + (d.labels[i] == "L2")};
  });
  const auto rep = cross_validate(m, stratified_folds(d.ids, d.labels, 10, 8), {});
  double sum = 0.0;
  for (double v : rep.per_fold) sum += v;
  CHECK(rep.acva == sum / 10.0);
  CHECK_NOTHROW(rep.validate());
  CHECK(rep.duration_hours > 0.0);
}

TEST_CASE("label-independent features score near chance") {
  const std::size_t K = 5;
  const Data d = balanced(40, K);
  const auto m = matrix_from(d, [](std::size_t) { return std::vector<double>{1.0, 2.0}; });
  const auto rep = cross_validate(m, stratified_folds(d.ids, d.labels, 10, 11), {});
  const double n = static_cast<double>(d.ids.size());
  const double p = 1.0 / static_cast<double>(K);
  const double sigma = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(rep.acva - p) <= 3 * sigma);
}

TEST_CASE("cross validation refuses mismatched folds") {
  const Data d = balanced(5, 2);
  auto m = matrix_from(d, [](std::size_t) { return std::vector<double>{1.0}; });
  auto folds = stratified_folds(d.ids, d.labels, 2, 1);
  std::swap(m.ids[0], m.ids[1]);
  CHECK_THROWS_AS(cross_validate(m, folds, {}), ProtocolError);
}

TEST_CASE("out-of-sample evaluation") {
  const Data d = balanced(10, 3);
  const auto onehot = [&](std::size_t i) {
    std::vector<double> r(3, 0.0);
    r[static_cast<std::size_t>(d.labels[i][1] - '0')] = 1.0;
    return r;
  };
  const auto m = matrix_from(d, onehot);
  CHECK(evaluate_oos(m, m, {}) == 1.0);
  // Test rows whose label the model never saw cannot be right.
  auto unseen = m;
  for (auto& l : unseen.labels) l = l == "L2" ? "L9" : l;
  CHECK(evaluate_oos(m, unseen, {}) == doctest::Approx(2.0 / 3.0));
  auto other = m;
  other.fingerprint = "different";
  CHECK_THROWS_AS(evaluate_oos(m, other, {}), ProtocolError);
}

TEST_CASE("refit cross validation insists on matching fingerprints") {
  const Data d = balanced(10, 2);
  const auto m = matrix_from(d, [&](std::size_t i) { return std::vector<double>{d.labels[i] == "L0" ? 1.0 : 0.0}; });
  const auto folds = stratified_folds(d.ids, d.labels, 5, 1);
  const FoldFeaturizer good = [&](std::span<const std::size_t> tr, std::span<const std::size_t> te) {
    return FoldMatrices{select_rows(m, tr), select_rows(m, te)};
  };
  const auto rep = cross_validate_refit(folds, good, {});
  CHECK(rep.acva == 1.0);
  const FoldFeaturizer bad = [&](std::span<const std::size_t> tr, std::span<const std::size_t> te) {
    FoldMatrices fm{select_rows(m, tr), select_rows(m, te)};
    fm.test.fingerprint = "other";
    return fm;
  };
  CHECK_THROWS_AS(cross_validate_refit(folds, bad, {}), ProtocolError);
}

TEST_CASE("slicing keeps the first lines") {
  CHECK(slice_length(100, 10) == 10);
  CHECK(slice_length(5, 80) == 4);
  CHECK(slice_length(5, 10) == 1);
  CHECK(slice_length(3, 50) == 2);
  CHECK(slice_length(7, 100) == 7);
  CHECK_THROWS_AS(slice_length(5, 0), ConfigError);
  const auto chunks = sentence_chunks(1, 1, 100);
  const auto s = slice_chunk(chunks[0], 10);
  CHECK(s.chunk_id == chunks[0].chunk_id + "@10");
  CHECK(s.sentences.size() == 10);
  CHECK(s.sentences.front() == "line 0");
  CHECK(s.sentences.back() == "line 9");
}

TEST_CASE("length sensitivity keeps the holdout out of training") {
  const auto chunks = sentence_chunks(60, 5, 100);
  synth::EmbeddingOptions eo;
  eo.noise = 6.0;
  eo.slice_percents = {10, 20, 40, 80};
  const auto records = synth::class_embeddings(chunks, eo);
  std::set<std::string> trained_on;
  const ChunkFeaturizer featurize = [&](std::span<const corpus::Chunk> cs) {
    if (cs.front().chunk_id.find('@') == std::string::npos) {
      for (const auto& c : cs) trained_on.insert(c.chunk_id);
    }
    return embedstore::join(records, cs).matrix;
  };
  LengthOptions opt;
  opt.n_holdout = 100;
  opt.seed = 5;
  const auto r = length_sensitivity(chunks, featurize, {}, opt);
  CHECK(r.holdout_ids.size() == 100);
  CHECK(r.train_ids.size() == 200);
  for (const auto& id : r.holdout_ids) CHECK(trained_on.count(id) == 0);
  CHECK(r.accuracy.size() == 4);
  MESSAGE("p10=" << r.accuracy.at(10) << " p80=" << r.accuracy.at(80));
  CHECK(r.accuracy.at(80) >= r.accuracy.at(10));

  opt.n_holdout = chunks.size();
  CHECK_THROWS_AS(length_sensitivity(chunks, featurize, {}, opt), ConfigError);
}

TEST_CASE("accuracy and duration formatting") {
  CHECK(format_accuracy(0.475) == ".475");
  CHECK(format_accuracy(0.6544) == ".654");
  CHECK(format_accuracy(1.0) == "1.000");
  CHECK(format_accuracy(0.0) == ".000");
  CHECK(format_hours(1.234) == "1.23");
}

TEST_CASE("table has one row per report and dashes for missing oosa") {
  EvalReport a;
  a.model_name = "linguistic";
  a.duration_hours = 1.5;
  a.acva = 0.475;
  a.oosa = 0.637;
  EvalReport b;
  b.model_name = "tuned-2048";
  b.acva = 0.654;
  const std::vector<EvalReport> reps{a, b};
  const std::string table = render_table(reps);
  CHECK(table ==
        "MODEL      |  DUR | ACVA | OOSA\n"
        "linguistic | 1.50 | .475 | .637\n"
        "tuned-2048 | 0.00 | .654 |    -\n");
}

TEST_CASE("figure tsv has one row per model and percent") {
  EvalReport a;
  a.model_name = "m1";
  a.length_accuracy = {{10, 0.5}, {80, 0.75}};
  EvalReport b;
  b.model_name = "m2";
  b.length_accuracy = {{10, 0.25}, {80, 1.0}};
  const std::vector<EvalReport> reps{a, b};
  CHECK(render_figure_tsv(reps) ==
        "percent\tmodel\taccuracy\n"
        "10\tm1\t0.5\n"
        "10\tm2\t0.25\n"
        "80\tm1\t0.75\n"
        "80\tm2\t1\n");
}

TEST_CASE("report json round trip and emission") {
  EvalReport a;
  a.model_name = "linguistic";
  a.acva = 0.5;
  a.per_fold = {0.25, 0.75};
  a.oosa = 0.625;
  a.length_accuracy = {{10, 0.2}};
  const auto back = report_from_json(report_to_json(a, "abc"));
  CHECK(back.model_name == a.model_name);
  CHECK(back.per_fold == a.per_fold);
  CHECK(back.oosa == a.oosa);
  CHECK(back.length_accuracy == a.length_accuracy);

  const auto dir = std::filesystem::temp_directory_path() / "nli_report_test";
  std::filesystem::remove_all(dir);
  const std::vector<EvalReport> reps{a};
  emit_report(reps, dir, "abc");
  CHECK(std::filesystem::exists(dir / "report.txt"));
  CHECK(std::filesystem::exists(dir / "figure1.tsv"));
  const auto read = read_reports(dir / "report.json");
  REQUIRE(read.size() == 1);
  CHECK(read[0].acva == 0.5);
  CHECK(io::read_file(dir / "report.json").find("\"config_hash\": \"abc\"") != std::string::npos);

  EvalReport broken = a;
  broken.acva = 0.9;
  const std::vector<EvalReport> bad{broken};
  CHECK_THROWS_AS(emit_report(bad, dir, "abc"), NumericError);
}
