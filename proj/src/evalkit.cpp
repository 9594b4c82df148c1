#include "nli/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/parallel.hpp"
#include "nli/rng.hpp"

namespace nli::evalkit {

using nlohmann::ordered_json;

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_folds(std::span<const std::string> ids, std::span<const std::string> labels, int k,
                                std::uint64_t seed) {
  if (k < 2) throw ConfigError("number of folds must be >= 2, got " + std::to_string(k));
  if (ids.size() != labels.size()) throw ShapeError("ids and labels differ in length");
  {
    std::set<std::string_view> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw DuplicateError("duplicate id in fold assignment: " + id);
    }
  }

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldAssignment out;
  out.k = k;
  out.ids.assign(ids.begin(), ids.end());
  out.fold_of.assign(ids.size(), -1);
  Rng rng(derive_seed(seed, "folds"));
  std::size_t deal = 0;
  for (auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      out.warnings.push_back("class '" + label + "' has " + std::to_string(members.size()) +
                             " members, fewer than " + std::to_string(k) + " folds");
    }
    rng.shuffle(members);
    for (std::size_t idx : members) {
      out.fold_of[idx] = static_cast<int>(deal % static_cast<std::size_t>(k));
      ++deal;
    }
  }
  return out;
}

void EvalReport::validate() const {
  const auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (!in_unit(acva)) throw NumericError("acva outside [0, 1]");
  if (oosa && !in_unit(*oosa)) throw NumericError("oosa outside [0, 1]");
  for (double v : per_fold) {
    if (!in_unit(v)) throw NumericError("fold accuracy outside [0, 1]");
  }
  for (const auto& [p, v] : length_accuracy) {
    if (!in_unit(v)) throw NumericError("length accuracy outside [0, 1]");
  }
  if (!per_fold.empty()) {
    const double mean = std::accumulate(per_fold.begin(), per_fold.end(), 0.0) / static_cast<double>(per_fold.size());
    if (std::abs(mean - acva) > 1e-12) throw NumericError("acva is not the mean of the fold accuracies");
  }
  if (!std::isfinite(duration_hours) || duration_hours < 0.0) throw NumericError("invalid duration");
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double fold_accuracy(const LabeledMatrix& train, const LabeledMatrix& test, const classifier::TrainConfig& config) {
  if (test.rows() == 0) throw ConfigError("empty test fold");
  const classifier::LogRegModel model = classifier::train(train.X, train.labels, config);
  return classifier::accuracy(model, test.X, test.labels);
}

EvalReport finish(std::vector<double> per_fold, const CvOptions& options, double elapsed) {
  EvalReport r;
  r.model_name = options.model_name;
  double sum = 0.0;
  for (double v : per_fold) sum += v;
  r.acva = sum / static_cast<double>(per_fold.size());
  r.per_fold = std::move(per_fold);
  r.duration_hours = options.record_timing ? (options.featurize_seconds + elapsed) / 3600.0 : 0.0;
  return r;
}

std::size_t resolve_threads(std::size_t t) { return t == 0 ? default_threads() : t; }

}  // namespace

EvalReport cross_validate(const LabeledMatrix& data, const FoldAssignment& folds,
                          const classifier::TrainConfig& train_config, const CvOptions& options) {
  if (folds.ids != data.ids) throw ProtocolError("fold assignment does not match the matrix rows");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> per_fold(static_cast<std::size_t>(folds.k));
  parallel_for(
      per_fold.size(),
      [&](std::size_t f) {
        const auto test_rows = folds.members(static_cast<int>(f));
        const auto train_rows = folds.complement(static_cast<int>(f));
        per_fold[f] = fold_accuracy(select_rows(data, train_rows), select_rows(data, test_rows), train_config);
      },
      resolve_threads(options.threads));
  return finish(std::move(per_fold), options, seconds_since(t0));
}

EvalReport cross_validate_refit(const FoldAssignment& folds, const FoldFeaturizer& featurize,
                                const classifier::TrainConfig& train_config, const CvOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> per_fold(static_cast<std::size_t>(folds.k));
  // Featurizers are often parallel themselves, so folds run one at a time.
  for (std::size_t f = 0; f < per_fold.size(); ++f) {
    const auto test_rows = folds.members(static_cast<int>(f));
    const auto train_rows = folds.complement(static_cast<int>(f));
    const FoldMatrices m = featurize(train_rows, test_rows);
    if (m.train.fingerprint != m.test.fingerprint) throw ProtocolError("fold matrices use different artifacts");
    per_fold[f] = fold_accuracy(m.train, m.test, train_config);
  }
  return finish(std::move(per_fold), options, seconds_since(t0));
}

double evaluate_oos(const LabeledMatrix& train, const LabeledMatrix& oos,
                    const classifier::TrainConfig& train_config) {
  if (train.fingerprint != oos.fingerprint) {
    throw ProtocolError("out-of-sample features were produced with different artifacts (fingerprint " +
                        oos.fingerprint + ", training " + train.fingerprint + ")");
  }
  if (train.cols() != oos.cols()) throw ShapeError("train and out-of-sample dimensions differ");
  if (oos.rows() == 0) throw ConfigError("empty out-of-sample set");
  const classifier::LogRegModel model = classifier::train(train.X, train.labels, train_config);
  return classifier::accuracy(model, oos.X, oos.labels);
}

std::size_t slice_length(std::size_t lines, int percent) {
  if (percent <= 0 || percent > 100) throw ConfigError("slice percent must be in (0, 100]");
  const std::size_t keep = (static_cast<std::size_t>(percent) * lines + 50) / 100;
  return std::min(lines, std::max<std::size_t>(1, keep));
}

std::string slice_id(const std::string& chunk_id, int percent) { return chunk_id + "@" + std::to_string(percent); }

corpus::Chunk slice_chunk(const corpus::Chunk& chunk, int percent) {
  corpus::Chunk out = chunk;
  out.chunk_id = slice_id(chunk.chunk_id, percent);
  out.sentences.resize(slice_length(chunk.sentences.size(), percent));
  return out;
}

LengthResult length_sensitivity(std::span<const corpus::Chunk> chunks, const ChunkFeaturizer& featurize,
                                const classifier::TrainConfig& train_config, const LengthOptions& options) {
  if (chunks.size() <= options.n_holdout) {
    throw ConfigError("length sensitivity needs more than " + std::to_string(options.n_holdout) + " chunks, got " +
                      std::to_string(chunks.size()));
  }
  if (options.percents.empty()) throw ConfigError("no slice percentages given");

  Rng rng(derive_seed(options.seed, "length-holdout"));
  const std::vector<std::size_t> holdout = rng.sample_indices(chunks.size(), options.n_holdout);
  std::vector<bool> is_holdout(chunks.size(), false);
  for (std::size_t i : holdout) is_holdout[i] = true;

  std::vector<corpus::Chunk> train_chunks;
  std::vector<corpus::Chunk> holdout_chunks;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    (is_holdout[i] ? holdout_chunks : train_chunks).push_back(chunks[i]);
  }

  LengthResult result;
  for (const auto& c : holdout_chunks) result.holdout_ids.push_back(c.chunk_id);
  for (const auto& c : train_chunks) result.train_ids.push_back(c.chunk_id);

  const LabeledMatrix train = featurize(train_chunks);
  const classifier::LogRegModel model = classifier::train(train.X, train.labels, train_config);

  for (int p : options.percents) {
    std::vector<corpus::Chunk> sliced;
    sliced.reserve(holdout_chunks.size());
    for (const auto& c : holdout_chunks) sliced.push_back(slice_chunk(c, p));
    const LabeledMatrix test = featurize(sliced);
    if (test.fingerprint != train.fingerprint) throw ProtocolError("sliced chunks featurized with other artifacts");
    result.accuracy[p] = classifier::accuracy(model, test.X, test.labels);
  }
  return result;
}

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

std::string format_hours(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_table(std::span<const EvalReport> reports) {
  std::vector<std::array<std::string, 4>> rows;
  rows.push_back({"MODEL", "DUR", "ACVA", "OOSA"});
  for (const auto& r : reports) {
    rows.push_back({r.model_name, format_hours(r.duration_hours), format_accuracy(r.acva),
                    r.oosa ? format_accuracy(*r.oosa) : "-"});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c > 0) out += " | ";
      const std::string pad(width[c] - row[c].size(), ' ');
      out += c == 0 ? row[c] + pad : pad + row[c];
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

std::string render_figure_tsv(std::span<const EvalReport> reports) {
  std::string out = "percent\tmodel\taccuracy\n";
  std::vector<std::tuple<int, std::string, double>> rows;
  for (const auto& r : reports) {
    for (const auto& [p, acc] : r.length_accuracy) rows.emplace_back(p, r.model_name, acc);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
  for (const auto& [p, model, acc] : rows) {
    out += std::to_string(p) + "\t" + model + "\t" + format_double(acc) + "\n";
  }
  return out;
}

namespace {

ordered_json to_ordered(const EvalReport& r) {
  ordered_json j;
  j["model_name"] = r.model_name;
  j["duration_hours"] = r.duration_hours;
  j["acva"] = r.acva;
  j["oosa"] = r.oosa ? ordered_json(*r.oosa) : ordered_json(nullptr);
  j["per_fold"] = r.per_fold;
  ordered_json len = ordered_json::object();
  for (const auto& [p, acc] : r.length_accuracy) len[std::to_string(p)] = acc;
  j["length_accuracy"] = len;
  return j;
}

EvalReport from_ordered(const ordered_json& j) {
  EvalReport r;
  r.model_name = j.at("model_name").get<std::string>();
  r.duration_hours = j.at("duration_hours").get<double>();
  r.acva = j.at("acva").get<double>();
  if (j.contains("oosa") && !j.at("oosa").is_null()) r.oosa = j.at("oosa").get<double>();
  r.per_fold = j.value("per_fold", std::vector<double>{});
  if (j.contains("length_accuracy")) {
    for (const auto& [k, v] : j.at("length_accuracy").items()) r.length_accuracy[std::stoi(k)] = v.get<double>();
  }
  return r;
}

}  // namespace

std::string report_to_json(const EvalReport& report, const std::string& config_hash) {
  ordered_json j = to_ordered(report);
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json_text) {
  try {
    return from_ordered(ordered_json::parse(json_text));
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(std::string("invalid report: ") + e.what());
  }
}

std::string report_json(std::span<const EvalReport> reports, const std::string& config_hash) {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["columns"] = {"MODEL", "DUR", "ACVA", "OOSA"};
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_ordered(r));
  j["reports"] = arr;
  return j.dump(2) + "\n";
}

void emit_report(std::span<const EvalReport> reports, const std::filesystem::path& out_dir,
                 const std::string& config_hash) {
  for (const auto& r : reports) r.validate();
  io::write_file(out_dir / "report.json", report_json(reports, config_hash));
  io::write_file(out_dir / "report.txt", render_table(reports));
  io::write_file(out_dir / "figure1.tsv", render_figure_tsv(reports));
}

std::vector<EvalReport> read_reports(const std::filesystem::path& report_json_path) {
  const std::string text = io::read_file(report_json_path);
  std::vector<EvalReport> out;
  try {
    const ordered_json j = ordered_json::parse(text);
    if (j.contains("reports")) {
      for (const auto& r : j.at("reports")) out.push_back(from_ordered(r));
    } else {
      out.push_back(from_ordered(j));
    }
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(report_json_path.string() + ": invalid report: " + e.what());
  }
  return out;
}

}  // namespace nli::evalkit
