#include "nli/matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <optional>
#include <system_error>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/text.hpp"

namespace nli {

double FeatureVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const auto& e, std::size_t i) { return e.first < i; });
  return (it != entries.end() && it->first == index) ? it->second : 0.0;
}

std::vector<double> FeatureVector::dense() const {
  std::vector<double> out(dim, 0.0);
  for (const auto& [i, v] : entries) out[i] = v;
  return out;
}

SparseMatrix to_sparse(std::span<const FeatureVector> rows, std::size_t dim) {
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].dim != dim) throw ShapeError("feature vector dimension mismatch");
    for (const auto& [c, v] : rows[r].entries) {
      triplets.emplace_back(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c), v);
    }
  }
  SparseMatrix X(static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(dim));
  X.setFromTriplets(triplets.begin(), triplets.end());
  X.makeCompressed();
  return X;
}

SparseMatrix to_sparse(const Eigen::MatrixXd& dense) {
  SparseMatrix X = dense.sparseView(0.0, 0.0);
  X.makeCompressed();
  return X;
}

LabeledMatrix select_rows(const LabeledMatrix& m, std::span<const std::size_t> rows) {
  LabeledMatrix out;
  out.fingerprint = m.fingerprint;
  out.config_hash = m.config_hash;
  out.ids.reserve(rows.size());
  out.labels.reserve(rows.size());
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<std::int64_t>(rows[r]);
    if (rows[r] >= m.rows()) throw ShapeError("row index out of range");
    out.ids.push_back(m.ids[rows[r]]);
    out.labels.push_back(m.labels[rows[r]]);
    for (SparseMatrix::InnerIterator it(m.X, src); it; ++it) {
      triplets.emplace_back(static_cast<std::int64_t>(r), it.col(), it.value());
    }
  }
  out.X.resize(static_cast<std::int64_t>(rows.size()), m.X.cols());
  out.X.setFromTriplets(triplets.begin(), triplets.end());
  out.X.makeCompressed();
  return out;
}

LabeledMatrix hstack(const LabeledMatrix& a, const LabeledMatrix& b) {
  if (a.ids != b.ids) throw ShapeError("hstack requires identical row ids in identical order");
  if (a.labels != b.labels) throw ShapeError("hstack requires identical row labels");
  LabeledMatrix out;
  out.ids = a.ids;
  out.labels = a.labels;
  out.fingerprint = io::sha256_hex(a.fingerprint + "|" + b.fingerprint);
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  for (std::int64_t r = 0; r < a.X.rows(); ++r) {
    for (SparseMatrix::InnerIterator it(a.X, r); it; ++it) triplets.emplace_back(r, it.col(), it.value());
    for (SparseMatrix::InnerIterator it(b.X, r); it; ++it) triplets.emplace_back(r, a.X.cols() + it.col(), it.value());
  }
  out.X.resize(a.X.rows(), a.X.cols() + b.X.cols());
  out.X.setFromTriplets(triplets.begin(), triplets.end());
  out.X.makeCompressed();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw NumericError("cannot format value");
  return std::string(buf, ptr);
}

std::string format_feature_matrix(const LabeledMatrix& m) {
  std::string out = "dim=" + std::to_string(m.cols()) + " rows=" + std::to_string(m.rows());
  if (!m.fingerprint.empty()) out += " fingerprint=" + m.fingerprint;
  if (!m.config_hash.empty()) out += " config_hash=" + m.config_hash;
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (m.ids[r].find_first_of("\t\n") != std::string::npos || m.labels[r].find_first_of("\t\n") != std::string::npos) {
      throw ConfigError("chunk ids and labels may not contain tabs or newlines: " + m.ids[r]);
    }
    out += m.ids[r];
    out.push_back('\t');
    out += m.labels[r];
    out.push_back('\t');
    bool first = true;
    // Compressed row-major storage keeps inner indices ascending.
    for (SparseMatrix::InnerIterator it(m.X, static_cast<std::int64_t>(r)); it; ++it) {
      if (it.value() == 0.0) continue;
      if (!std::isfinite(it.value())) throw NumericError("non-finite feature value in row " + m.ids[r]);
      if (!first) out.push_back(' ');
      first = false;
      out += std::to_string(it.col());
      out.push_back(':');
      out += format_double(it.value());
    }
    out.push_back('\n');
  }
  return out;
}

void write_feature_matrix(const LabeledMatrix& m, const std::filesystem::path& path) {
  io::write_file(path, format_feature_matrix(m));
}

LabeledMatrix parse_feature_matrix(std::string_view contents, const std::string& source) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  const auto next_line = [&](std::string_view& line) {
    if (pos >= contents.size()) return false;
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    return true;
  };
  const auto parse_uint = [&](std::string_view s, const char* what) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(source, line_no, std::string("bad ") + what);
    return v;
  };

  std::string_view header;
  if (!next_line(header)) throw ParseError(source, 1, "missing header");
  const std::string bad_header = "header must be \"dim=<N> rows=<M>\" with optional key=value fields";
  std::optional<std::size_t> dim_field;
  std::optional<std::size_t> rows_field;
  std::string fingerprint;
  std::string config_hash;
  for (std::string_view field : text::split_ws(header)) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, 1, bad_header);
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "dim") {
      dim_field = parse_uint(value, "dim");
    } else if (key == "rows") {
      rows_field = parse_uint(value, "rows");
    } else if (key == "fingerprint") {
      fingerprint = value;
    } else if (key == "config_hash") {
      config_hash = value;
    }
  }
  if (!dim_field || !rows_field) throw ParseError(source, 1, bad_header);
  const std::size_t dim = *dim_field;
  const std::size_t rows = *rows_field;

  LabeledMatrix m;
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  std::string_view line;
  while (next_line(line)) {
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos) throw ParseError(source, line_no, "expected chunk_id<TAB>label<TAB>features");
    const auto r = static_cast<std::int64_t>(m.ids.size());
    m.ids.emplace_back(line.substr(0, t1));
    m.labels.emplace_back(line.substr(t1 + 1, t2 - t1 - 1));
    std::string_view rest = line.substr(t2 + 1);
    std::int64_t last = -1;
    while (!rest.empty()) {
      auto space = rest.find(' ');
      std::string_view pair = rest.substr(0, space);
      rest = space == std::string_view::npos ? std::string_view{} : rest.substr(space + 1);
      if (pair.empty()) continue;
      const auto colon = pair.find(':');
      if (colon == std::string_view::npos) throw ParseError(source, line_no, "expected index:value");
      const auto idx = static_cast<std::int64_t>(parse_uint(pair.substr(0, colon), "index"));
      if (idx <= last) throw ParseError(source, line_no, "indices must be strictly ascending");
      if (static_cast<std::size_t>(idx) >= dim) throw ParseError(source, line_no, "index out of range");
      last = idx;
      double v = 0.0;
      const auto vs = pair.substr(colon + 1);
      auto [ptr, ec] = std::from_chars(vs.data(), vs.data() + vs.size(), v);
      if (ec != std::errc() || ptr != vs.data() + vs.size() || !std::isfinite(v)) {
        throw ParseError(source, line_no, "bad value");
      }
      triplets.emplace_back(r, idx, v);
    }
  }
  if (m.ids.size() != rows) {
    throw ParseError(source, line_no, "header declares " + std::to_string(rows) + " rows, found " +
                                          std::to_string(m.ids.size()));
  }
  m.X.resize(static_cast<std::int64_t>(rows), static_cast<std::int64_t>(dim));
  m.X.setFromTriplets(triplets.begin(), triplets.end());
  m.X.makeCompressed();
  m.fingerprint = std::move(fingerprint);
  m.config_hash = std::move(config_hash);
  return m;
}

LabeledMatrix read_feature_matrix(const std::filesystem::path& path) {
  return parse_feature_matrix(io::read_file(path), path.string());
}

}  // namespace nli
