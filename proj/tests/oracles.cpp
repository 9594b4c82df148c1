#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "nli/text.hpp"

namespace oracle {

std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  }
  return d[a.size()][b.size()];
}

std::size_t osa(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j - 1] + cost, d[i - 1][j] + 1, d[i][j - 1] + 1});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[a.size()][b.size()];
}

std::optional<nli::lingfeat::Suggestion> exhaustive_correct(const std::string& word,
                                                            const nli::lingfeat::Dictionary& dict,
                                                            std::size_t max_distance) {
  if (dict.contains(word)) return std::nullopt;
  const auto w = nli::text::decode_utf8(word);
  std::optional<nli::lingfeat::Suggestion> best;
  for (const auto& [term, freq] : dict.entries()) {
    const std::size_t dist = osa(w, nli::text::decode_utf8(term));
    if (dist > max_distance) continue;
    const auto better = [&] {
      if (!best) return true;
      if (dist != best->distance) return dist < best->distance;
      if (freq != best->frequency) return freq > best->frequency;
      return term < best->term;
    };
    if (better()) best = nli::lingfeat::Suggestion{term, dist, freq};
  }
  return best;
}

std::string random_word(nli::Rng& rng, std::size_t min_len, std::size_t max_len, std::string_view alphabet) {
  const std::size_t len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.below(alphabet.size())]);
  return s;
}

double naive_loss(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                  const std::vector<int>& y, double C) {
  double data = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<double> z(static_cast<std::size_t>(W.rows()));
    for (Eigen::Index k = 0; k < W.rows(); ++k) {
      double s = b(k);
      for (Eigen::Index j = 0; j < X.cols(); ++j) s += W(k, j) * X(i, j);
      z[static_cast<std::size_t>(k)] = s;
    }
    const double m = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - m);
    data += -(z[static_cast<std::size_t>(y[static_cast<std::size_t>(i)])] - m - std::log(denom));
  }
  return 0.5 * W.squaredNorm() + C * data;
}

GradCheck finite_difference_check(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const Eigen::MatrixXd& X,
                                  const std::vector<int>& y, double C, double h) {
  const nli::SparseMatrix Xs = nli::to_sparse(X);
  const auto lg = nli::classifier::loss_and_grad(W, b, Xs, y, C);
  const auto f = [&](const Eigen::MatrixXd& w, const Eigen::VectorXd& bb) {
    return nli::classifier::loss_and_grad(w, bb, Xs, y, C).loss;
  };
  const auto rel = [](double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
  };
  GradCheck out;
  for (Eigen::Index k = 0; k < W.rows(); ++k) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      Eigen::MatrixXd wp = W;
      Eigen::MatrixXd wm = W;
      wp(k, j) += h;
      wm(k, j) -= h;
      const double num = (f(wp, b) - f(wm, b)) / (2 * h);
      out.max_rel_error = std::max(out.max_rel_error, rel(lg.grad_W(k, j), num));
    }
  }
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    Eigen::VectorXd bp = b;
    Eigen::VectorXd bm = b;
    bp(k) += h;
    bm(k) -= h;
    const double num = (f(W, bp) - f(W, bm)) / (2 * h);
    out.max_rel_error = std::max(out.max_rel_error, rel(lg.grad_b(k), num));
  }
  return out;
}

namespace {

double sse(const Eigen::MatrixXd& points, const std::vector<std::size_t>& members) {
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
  for (auto m : members) mean += points.row(static_cast<Eigen::Index>(m));
  mean /= static_cast<double>(members.size());
  double s = 0.0;
  for (auto m : members) s += (points.row(static_cast<Eigen::Index>(m)) - mean).squaredNorm();
  return s;
}

}  // namespace

std::vector<nli::spacelab::LinkageRow> naive_ward(const Eigen::MatrixXd& points) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  struct Cluster {
    std::size_t id;
    std::vector<std::size_t> members;
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < n; ++i) active.push_back({i, {i}});
  std::vector<nli::spacelab::LinkageRow> out;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bu = 0;
    std::size_t bv = 0;
    std::tuple<std::size_t, std::size_t> best_key{0, 0};
    for (std::size_t u = 0; u < active.size(); ++u) {
      for (std::size_t v = u + 1; v < active.size(); ++v) {
        std::vector<std::size_t> merged = active[u].members;
        merged.insert(merged.end(), active[v].members.begin(), active[v].members.end());
        const double delta = sse(points, merged) - sse(points, active[u].members) - sse(points, active[v].members);
        const auto key = std::make_tuple(std::min(active[u].id, active[v].id), std::max(active[u].id, active[v].id));
        if (delta < best || (delta == best && key < best_key)) {
          best = delta;
          best_key = key;
          bu = u;
          bv = v;
        }
      }
    }
    Cluster merged{n + step, active[bu].members};
    merged.members.insert(merged.members.end(), active[bv].members.begin(), active[bv].members.end());
    out.push_back({std::get<0>(best_key), std::get<1>(best_key), std::sqrt(2.0 * std::max(0.0, best)),
                   merged.members.size()});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bv));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bu));
    active.push_back(std::move(merged));
  }
  return out;
}

double projected_variance(const Eigen::MatrixXd& points, const Eigen::VectorXd& u) {
  const Eigen::VectorXd proj = points * u;
  const double mean = proj.mean();
  return (proj.array() - mean).square().sum() / static_cast<double>(proj.size());
}

std::unordered_map<std::string, std::vector<double>> naive_averaged_weights(
    const std::vector<nli::postag::TaggedSentence>& corpus, int epochs, std::uint64_t seed,
    const nli::postag::TaggerModel& reference) {
  const std::size_t n_tags = reference.tag_set.size();
  const auto tag_of = [&](const std::string& t) {
    return static_cast<std::size_t>(
        std::lower_bound(reference.tag_set.begin(), reference.tag_set.end(), t) - reference.tag_set.begin());
  };
  std::unordered_map<std::string, std::vector<double>> w;
  std::unordered_map<std::string, std::vector<double>> sum;
  std::size_t snapshots = 0;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  nli::Rng rng(seed);
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (std::size_t si : order) {
      const auto& s = corpus[si];
      std::string prev = "-START-";
      std::string prev2 = "-START2-";
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        std::string guess;
        if (auto it = reference.single_tag_words.find(s.tokens[i]); it != reference.single_tag_words.end()) {
          guess = it->second;
        } else {
          const auto feats = nli::postag::extract_features(s.tokens, i, prev, prev2);
          std::vector<double> scores(n_tags, 0.0);
          for (const auto& f : feats) {
            if (auto it2 = w.find(f); it2 != w.end()) {
              for (std::size_t t = 0; t < n_tags; ++t) scores[t] += it2->second[t];
            }
          }
          std::size_t g = 0;
          for (std::size_t t = 1; t < n_tags; ++t) {
            if (scores[t] > scores[g]) g = t;
          }
          const std::size_t truth = tag_of(s.tags[i]);
          if (g != truth) {
            for (const auto& f : feats) {
              auto& v = w[f];
              v.resize(n_tags, 0.0);
              v[truth] += 1.0;
              v[g] -= 1.0;
            }
          }
          // Snapshot after every scored token.
          ++snapshots;
          for (const auto& [f, v] : w) {
            auto& acc = sum[f];
            acc.resize(n_tags, 0.0);
            for (std::size_t t = 0; t < n_tags; ++t) acc[t] += v[t];
          }
          guess = reference.tag_set[g];
        }
        prev2 = prev;
        prev = guess;
      }
    }
  }
  for (auto& [f, acc] : sum) {
    for (auto& v : acc) v /= static_cast<double>(snapshots);
  }
  return sum;
}

Blobs gaussian_blobs(std::size_t n, std::size_t d, std::size_t k, double spacing, std::uint64_t seed) {
  nli::Rng rng(seed);
  Blobs out;
  out.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    for (std::size_t j = 0; j < d; ++j) {
      out.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal() + (j == c % d ? spacing : 0.0);
    }
    out.labels.push_back("c" + std::to_string(c));
  }
  return out;
}

}  // namespace oracle
