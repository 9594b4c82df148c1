#include "nli/spacelab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/SVD>
#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"
#include "nli/matrix.hpp"

namespace nli::spacelab {

using nlohmann::ordered_json;

Centroids centroids(const std::map<std::string, std::vector<std::vector<double>>>& embeddings_by_label) {
  if (embeddings_by_label.empty()) throw ConfigError("no labels to average");
  Centroids out;
  Eigen::Index d = -1;
  for (const auto& [label, vectors] : embeddings_by_label) {
    if (vectors.empty()) throw ConfigError("label '" + label + "' has no vectors");
    if (d < 0) d = static_cast<Eigen::Index>(vectors.front().size());
  }
  out.points.resize(static_cast<Eigen::Index>(embeddings_by_label.size()), d);
  Eigen::Index row = 0;
  for (const auto& [label, vectors] : embeddings_by_label) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
    for (const auto& v : vectors) {
      if (static_cast<Eigen::Index>(v.size()) != d) throw ShapeError("vectors of label '" + label + "' differ in length");
      sum += Eigen::Map<const Eigen::VectorXd>(v.data(), d);
    }
    out.points.row(row++) = (sum / static_cast<double>(vectors.size())).transpose();
    out.labels.push_back(label);
  }
  if (!out.points.allFinite()) throw NumericError("non-finite centroid");
  return out;
}

Centroids centroids(std::span<const std::string> labels, const Eigen::MatrixXd& X) {
  if (static_cast<Eigen::Index>(labels.size()) != X.rows()) throw ShapeError("label count does not match rows");
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.empty()) throw ConfigError("no labels to average");
  Centroids out;
  out.points.resize(static_cast<Eigen::Index>(groups.size()), X.cols());
  Eigen::Index row = 0;
  for (const auto& [label, rows] : groups) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(X.cols());
    for (Eigen::Index r : rows) sum += X.row(r);
    out.points.row(row++) = sum / static_cast<double>(rows.size());
    out.labels.push_back(label);
  }
  if (!out.points.allFinite()) throw NumericError("non-finite centroid");
  return out;
}

std::vector<LinkageRow> ward_linkage(const Eigen::MatrixXd& points) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  if (n < 2) throw ConfigError("ward linkage needs at least two points");
  if (!points.allFinite()) throw NumericError("non-finite point");

  // Squared distances between active clusters, indexed by slot. Slot i holds
  // cluster id[i]; a merge writes the new cluster into the lower slot.
  Eigen::MatrixXd d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      d2(i, j) = (points.row(i) - points.row(j)).squaredNorm();
    }
  }
  std::vector<std::size_t> id(n);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) id[i] = i;

  std::vector<LinkageRow> out;
  out.reserve(n - 1);
  for (std::size_t m = 0; m + 1 < n; ++m) {
    std::size_t bi = n, bj = n;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> best_ids{n * 2, n * 2};
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const std::pair<std::size_t, std::size_t> ids{std::min(id[i], id[j]), std::max(id[i], id[j])};
        if (d2(i, j) < best || (d2(i, j) == best && ids < best_ids)) {
          best = d2(i, j);
          best_ids = ids;
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(size[bi]);
    const double nj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double nk = static_cast<double>(size[k]);
      const double v = ((ni + nk) * d2(bi, k) + (nj + nk) * d2(bj, k) - nk * best) / (ni + nj + nk);
      d2(bi, k) = d2(k, bi) = std::max(0.0, v);
    }
    out.push_back({best_ids.first, best_ids.second, std::sqrt(std::max(0.0, best)), size[bi] + size[bj]});
    size[bi] += size[bj];
    id[bi] = n + m;
    active[bj] = false;
  }
  return out;
}

PcaProjection pca_project(const Eigen::MatrixXd& points, int out_dim) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2) throw ConfigError("PCA needs at least two points");
  if (out_dim < 1 || out_dim > std::min(n, d)) throw ConfigError("invalid PCA output dimension");
  if (!points.allFinite()) throw NumericError("non-finite point");

  PcaProjection p;
  p.mean = points.colwise().mean().transpose();
  const Eigen::MatrixXd centered = points.rowwise() - p.mean.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  p.components = svd.matrixV().leftCols(out_dim).transpose();
  for (Eigen::Index c = 0; c < out_dim; ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < d; ++j) {
      if (std::abs(p.components(c, j)) > std::abs(p.components(c, arg))) arg = j;
    }
    if (p.components(c, arg) < 0.0) p.components.row(c) *= -1.0;
  }
  p.coords = centered * p.components.transpose();
  const double total = s.squaredNorm();
  p.explained_variance_ratio = Eigen::VectorXd::Zero(out_dim);
  if (total > 0.0) {
    for (Eigen::Index c = 0; c < out_dim; ++c) p.explained_variance_ratio(c) = s(c) * s(c) / total;
  }
  return p;
}

std::string linkage_json(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                         const std::string& config_hash) {
  ordered_json j;
  j["config_hash"] = config_hash;
  j["labels"] = std::vector<std::string>(labels.begin(), labels.end());
  ordered_json rows = ordered_json::array();
  for (const auto& r : linkage) {
    ordered_json row;
    row["left"] = r.left;
    row["right"] = r.right;
    row["height"] = r.height;
    row["size"] = r.size;
    rows.push_back(row);
  }
  j["linkage"] = rows;
  return j.dump(2) + "\n";
}

std::vector<LinkageRow> parse_linkage_json(const std::string& text) {
  std::vector<LinkageRow> out;
  try {
    const auto j = ordered_json::parse(text);
    for (const auto& row : j.at("linkage")) {
      out.push_back({row.at("left").get<std::size_t>(), row.at("right").get<std::size_t>(),
                     row.at("height").get<double>(), row.at("size").get<std::size_t>()});
    }
  } catch (const ordered_json::exception& e) {
    throw ProtocolError(std::string("invalid linkage file: ") + e.what());
  }
  return out;
}

namespace {

void check_labels(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels) {
  if (linkage.size() + 1 != labels.size()) throw ShapeError("linkage and label count disagree");
}

std::string newick_name(const std::string& s) {
  if (s.find_first_of(" ()[]':;,\t\n") == std::string::npos) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

// Leaves in left-to-right drawing order.
std::vector<std::size_t> leaf_order(const std::vector<LinkageRow>& linkage, std::size_t n) {
  std::vector<std::size_t> out;
  std::function<void(std::size_t)> walk = [&](std::size_t node) {
    if (node < n) {
      out.push_back(node);
      return;
    }
    const auto& r = linkage[node - n];
    walk(r.left);
    walk(r.right);
  };
  walk(n + linkage.size() - 1);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string to_newick(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels) {
  check_labels(linkage, labels);
  const std::size_t n = labels.size();
  const auto height = [&](std::size_t node) { return node < n ? 0.0 : linkage[node - n].height; };
  std::function<std::string(std::size_t, double)> render = [&](std::size_t node, double parent_height) {
    const std::string branch = ":" + format_double(parent_height - height(node));
    if (node < n) return newick_name(labels[node]) + branch;
    const auto& r = linkage[node - n];
    return "(" + render(r.left, r.height) + "," + render(r.right, r.height) + ")" + branch;
  };
  const auto& root = linkage.back();
  return "(" + render(root.left, root.height) + "," + render(root.right, root.height) + ");\n";
}

std::string pca_tsv(const PcaProjection& projection, std::span<const std::string> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != projection.coords.rows()) {
    throw ShapeError("label count does not match projected points");
  }
  std::string out = "label\tx\ty\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double y = projection.coords.cols() > 1 ? projection.coords(r, 1) : 0.0;
    out += labels[i] + "\t" + format_double(projection.coords(r, 0)) + "\t" + format_double(y) + "\n";
  }
  return out;
}

std::string dendrogram_svg(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                           const std::string& config_hash) {
  check_labels(linkage, labels);
  const std::size_t n = labels.size();
  const double width = 60.0 + 40.0 * static_cast<double>(n);
  const double plot_h = 300.0;
  const double top = 20.0;
  const double max_h = std::max(linkage.back().height, 1e-12);
  const auto y_of = [&](double h) { return top + plot_h * (1.0 - h / max_h); };

  std::vector<double> x(n + linkage.size());
  const auto order = leaf_order(linkage, n);
  for (std::size_t i = 0; i < order.size(); ++i) x[order[i]] = 40.0 + 40.0 * static_cast<double>(i);
  std::vector<double> h(n + linkage.size(), 0.0);

  std::string body;
  for (std::size_t m = 0; m < linkage.size(); ++m) {
    const auto& r = linkage[m];
    const std::size_t node = n + m;
    x[node] = (x[r.left] + x[r.right]) / 2.0;
    h[node] = r.height;
    const double yl = y_of(h[r.left]);
    const double yr = y_of(h[r.right]);
    const double ym = y_of(r.height);
    body += "  <path d=\"M" + fixed(x[r.left]) + " " + fixed(yl) + " V" + fixed(ym) + " H" + fixed(x[r.right]) +
            " V" + fixed(yr) + "\" fill=\"none\" stroke=\"black\"/>\n";
  }
  for (std::size_t i = 0; i < n; ++i) {
    body += "  <text x=\"" + fixed(x[i]) + "\" y=\"" + fixed(top + plot_h + 12.0) +
            "\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-60 " + fixed(x[i]) + " " +
            fixed(top + plot_h + 12.0) + ")\">" + xml_escape(labels[i]) + "</text>\n";
  }
  const double total_h = top + plot_h + 120.0;
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" + fixed(total_h, 0) +
         "\">\n  <!-- config_hash: " + config_hash + " -->\n  <text x=\"4\" y=\"12\" font-size=\"10\">height max " +
         format_double(max_h) + "</text>\n" + body + "</svg>\n";
}

std::string pca_svg(const PcaProjection& projection, std::span<const std::string> labels,
                    const std::string& config_hash) {
  if (static_cast<Eigen::Index>(labels.size()) != projection.coords.rows()) {
    throw ShapeError("label count does not match projected points");
  }
  const double size = 500.0;
  const double margin = 50.0;
  const Eigen::Index n = projection.coords.rows();
  const auto col = [&](Eigen::Index c) {
    return c < projection.coords.cols() ? Eigen::VectorXd(projection.coords.col(c)) : Eigen::VectorXd::Zero(n);
  };
  const Eigen::VectorXd xs = col(0);
  const Eigen::VectorXd ys = col(1);
  const auto scale = [&](const Eigen::VectorXd& v, double value, bool flip) {
    const double lo = v.minCoeff();
    const double hi = v.maxCoeff();
    const double t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
    return margin + (size - 2 * margin) * (flip ? 1.0 - t : t);
  };
  std::string body;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double px = scale(xs, xs(i), false);
    const double py = scale(ys, ys(i), true);
    body += "  <circle cx=\"" + fixed(px) + "\" cy=\"" + fixed(py) + "\" r=\"3\"/>\n";
    body += "  <text x=\"" + fixed(px + 5) + "\" y=\"" + fixed(py - 5) + "\" font-size=\"10\">" +
            xml_escape(labels[static_cast<std::size_t>(i)]) + "</text>\n";
  }
  const auto ratio = [&](Eigen::Index c) {
    return c < projection.explained_variance_ratio.size() ? projection.explained_variance_ratio(c) : 0.0;
  };
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(size, 0) + "\" height=\"" + fixed(size, 0) +
         "\">\n  <!-- config_hash: " + config_hash + " -->\n  <text x=\"4\" y=\"12\" font-size=\"10\">PC1 " +
         fixed(ratio(0) * 100.0, 1) + "% / PC2 " + fixed(ratio(1) * 100.0, 1) + "%</text>\n" + body + "</svg>\n";
}

void emit_clustering(const std::vector<LinkageRow>& linkage, std::span<const std::string> labels,
                     const std::filesystem::path& out_dir, const std::string& config_hash) {
  io::write_file(out_dir / "linkage.json", linkage_json(linkage, labels, config_hash));
  io::write_file(out_dir / "dendrogram.nwk", to_newick(linkage, labels));
  io::write_file(out_dir / "dendrogram.svg", dendrogram_svg(linkage, labels, config_hash));
}

void emit_projection(const PcaProjection& projection, std::span<const std::string> labels,
                     const std::filesystem::path& out_dir, const std::string& config_hash) {
  io::write_file(out_dir / "pca.tsv", pca_tsv(projection, labels));
  io::write_file(out_dir / "pca.svg", pca_svg(projection, labels, config_hash));
}

void emit_analysis(const std::vector<LinkageRow>& linkage, const PcaProjection& projection,
                   std::span<const std::string> labels, const std::filesystem::path& out_dir,
                   const std::string& config_hash) {
  emit_clustering(linkage, labels, out_dir, config_hash);
  emit_projection(projection, labels, out_dir, config_hash);
}

}  // namespace nli::spacelab
