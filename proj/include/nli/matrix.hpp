#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nli {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

// Sparse feature row: (index, value) pairs with strictly ascending indices.
struct FeatureVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  double at(std::size_t index) const;
  std::vector<double> dense() const;
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Row-labeled design matrix. The fingerprint identifies the fitted
// artifacts (vocabularies or embedding source) the rows were produced with.
struct LabeledMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> labels;
  SparseMatrix X;
  std::string fingerprint;
  std::string config_hash;  // of the run that wrote the matrix, if any

  std::size_t rows() const noexcept { return ids.size(); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

SparseMatrix to_sparse(std::span<const FeatureVector> rows, std::size_t dim);
SparseMatrix to_sparse(const Eigen::MatrixXd& dense);

LabeledMatrix select_rows(const LabeledMatrix& m, std::span<const std::size_t> rows);
// Column-wise concatenation of two matrices with identical row ids.
LabeledMatrix hstack(const LabeledMatrix& a, const LabeledMatrix& b);

// Text format: "dim=<N> rows=<M>" header (optionally followed by
// fingerprint=<hex> and config_hash=<hex>), then chunk_id<TAB>label<TAB>
// space-separated index:value pairs with ascending indices. Values use the
// shortest representation that round-trips.
void write_feature_matrix(const LabeledMatrix& m, const std::filesystem::path& path);
std::string format_feature_matrix(const LabeledMatrix& m);
LabeledMatrix read_feature_matrix(const std::filesystem::path& path);
LabeledMatrix parse_feature_matrix(std::string_view contents, const std::string& source = "<memory>");

std::string format_double(double v);

}  // namespace nli
