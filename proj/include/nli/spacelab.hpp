#pragma once

// Embedding-space analysis: per-language centroids, Ward clustering and a
// 2-D PCA projection.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nli::spacelab {

struct Centroids {
  std::vector<std::string> labels;  // ascending
  Eigen::MatrixXd points;           // one row per label
};

Centroids centroids(const std::map<std::string, std::vector<std::vector<double>>>& embeddings_by_label);
// Rows of X grouped by labels[i].
Centroids centroids(std::span<const std::string> labels, const Eigen::MatrixXd& X);

struct LinkageRow {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
  friend bool operator==(const LinkageRow&, const LinkageRow&) = default;
};

// Originals are clusters 0..n-1; merge m creates cluster n+m. Among equal
// distances the pair with the smallest (left, right) wins.
std::vector<LinkageRow> ward_linkage(const Eigen::MatrixXd& points);

struct PcaProjection {
  Eigen::MatrixXd coords;      // n x out_dim
  Eigen::MatrixXd components;  // out_dim x d, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;
  Eigen::VectorXd mean;
};

// Within each component the entry of largest magnitude is positive.
PcaProjection pca_project(const Eigen::MatrixXd& points, int out_dim = 2);

std::string linkage_json(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                         const std::string& config_hash);
std::vector<LinkageRow> parse_linkage_json(const std::string& text);
std::string to_newick(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels);
std::string pca_tsv(const PcaProjection& projection, std::span<const std::string> labels);
std::string dendrogram_svg(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                           const std::string& config_hash);
std::string pca_svg(const PcaProjection& projection, std::span<const std::string> labels,
                    const std::string& config_hash);

// Writes linkage.json, dendrogram.nwk, dendrogram.svg and, when a projection
// is given, pca.tsv and pca.svg.
void emit_clustering(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                     const std::filesystem::path& out_dir, const std::string& config_hash);
void emit_projection(const PcaProjection& projection, std::span<const std::string> labels,
                     const std::filesystem::path& out_dir, const std::string& config_hash);
void emit_analysis(const std::vector<LinkageRow>& linkage, const PcaProjection& projection,
                   std::span<const std::string> labels, const std::filesystem::path& out_dir,
                   const std::string& config_hash);

}  // namespace nli::spacelab
