#include "nli/classifier/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "nli/errors.hpp"
#include "nli/io.hpp"

namespace nli::classifier {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be positive");
  if (lbfgs_memory < 1) throw ConfigError("lbfgs_memory must be >= 1");
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - mx).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossGrad loss_and_grad(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const SparseMatrix& X,
                       std::span<const int> y, double C) {
  const Eigen::Index K = W.rows();
  if (X.cols() != W.cols()) throw ShapeError("feature dimension does not match W");
  if (b.size() != K) throw ShapeError("bias length does not match W");
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw ShapeError("label count does not match rows");
  if (!W.allFinite() || !b.allFinite()) throw NumericError("non-finite parameters");

  // Products run directly over the compressed rows: each nonzero touches one
  // contiguous column of W, which is much faster than Eigen's generic
  // sparse-dense kernels here.
  SparseMatrix compressed;
  const SparseMatrix* Xc = &X;
  if (!X.isCompressed()) {
    compressed = X;
    compressed.makeCompressed();
    Xc = &compressed;
  }
  const auto* outer = Xc->outerIndexPtr();
  const auto* inner = Xc->innerIndexPtr();
  const double* values = Xc->valuePtr();
  const Eigen::Index N = X.rows();

  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  RowMajorMatrix logits(N, K);
  for (Eigen::Index i = 0; i < N; ++i) {
    double* row = logits.row(i).data();
    for (Eigen::Index k = 0; k < K; ++k) row[k] = b(k);
    for (auto p = outer[i]; p < outer[i + 1]; ++p) {
      const double v = values[p];
      const double* w = W.col(inner[p]).data();
      for (Eigen::Index k = 0; k < K; ++k) row[k] += v * w[k];
    }
  }
  if (!logits.allFinite()) throw NumericError("non-finite logits (check the feature matrix)");

  LossGrad out;
  double data_loss = 0.0;
  RowMajorMatrix residual(N, K);  // softmax - onehot
  for (Eigen::Index i = 0; i < N; ++i) {
    const int yi = y[static_cast<std::size_t>(i)];
    if (yi < 0 || yi >= K) throw ShapeError("label index out of range");
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double z = e.sum();
    data_loss += std::log(z) + mx - logits(i, yi);
    residual.row(i) = e / z;
    residual(i, yi) -= 1.0;
  }
  out.loss = 0.5 * W.squaredNorm() + C * data_loss;
  Eigen::MatrixXd data_grad = Eigen::MatrixXd::Zero(K, W.cols());
  for (Eigen::Index i = 0; i < N; ++i) {
    const double* r = residual.row(i).data();
    for (auto p = outer[i]; p < outer[i + 1]; ++p) {
      const double v = values[p];
      double* g = data_grad.col(inner[p]).data();
      for (Eigen::Index k = 0; k < K; ++k) g[k] += v * r[k];
    }
  }
  out.grad_W = W + C * data_grad;
  out.grad_b = C * residual.colwise().sum().transpose();
  return out;
}

LogRegModel train(const SparseMatrix& X_in, std::span<const std::string> labels, const TrainConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(X_in.rows()) != labels.size()) throw ShapeError("label count does not match rows");

  LogRegModel model;
  model.config = config;
  std::set<std::string> classes(labels.begin(), labels.end());
  model.class_order.assign(classes.begin(), classes.end());
  const auto K = static_cast<Eigen::Index>(model.class_order.size());
  if (K < 2) throw ConfigError("training data must contain at least two classes");
  if (static_cast<Eigen::Index>(labels.size()) < K) throw ConfigError("need at least one row per class");

  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = static_cast<int>(std::lower_bound(model.class_order.begin(), model.class_order.end(), labels[i]) -
                            model.class_order.begin());
  }

  // Standardization is folded back into W and b after fitting, so the stored
  // model always applies to raw features.
  const Eigen::Index d = X_in.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  SparseMatrix X_std;
  if (config.standardize) {
    Eigen::MatrixXd dense = Eigen::MatrixXd(X_in);
    mean = dense.colwise().mean().transpose();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double var = (dense.col(j).array() - mean(j)).square().mean();
      scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
    }
    dense = (dense.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    X_std = to_sparse(dense);
  }
  const SparseMatrix& X = config.standardize ? X_std : X_in;

  const Eigen::Index n_w = K * d;
  const auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Wm(theta.data(), K, d);
    const Eigen::VectorXd bv = theta.tail(K);
    LossGrad lg = loss_and_grad(Wm, bv, X, y, config.C);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(grad.data(), K, d) = lg.grad_W;
    grad.tail(K) = lg.grad_b;
    return lg.loss;
  };

  LbfgsOptions opt;
  opt.memory = config.lbfgs_memory;
  opt.tol = config.tol;
  opt.max_iter = config.max_iter;
  const LbfgsResult res = lbfgs_minimize(objective, Eigen::VectorXd::Zero(n_w + K), opt);

  Eigen::MatrixXd W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      res.x.data(), K, d);
  Eigen::VectorXd b = res.x.tail(K);
  if (config.standardize) {
    for (Eigen::Index j = 0; j < d; ++j) W.col(j) /= scale(j);
    b -= W * mean;
  }
  model.W = std::move(W);
  model.b = std::move(b);
  model.meta.iterations = res.iterations;
  model.meta.evaluations = res.evaluations;
  model.meta.final_loss = res.f;
  model.meta.status = to_string(res.status);
  if (!model.W.allFinite() || !model.b.allFinite()) throw NumericError("training produced non-finite weights");
  return model;
}

Prediction predict(const LogRegModel& model, const SparseMatrix& X) {
  if (static_cast<std::size_t>(X.cols()) != model.dim()) {
    throw ShapeError("feature dimension " + std::to_string(X.cols()) + " does not match model dimension " +
                     std::to_string(model.dim()));
  }
  Eigen::MatrixXd logits = X * model.W.transpose();
  logits.rowwise() += model.b.transpose();
  Prediction p;
  p.probabilities = softmax_rows(logits);
  p.labels.resize(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    p.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return p;
}

double accuracy(const LogRegModel& model, const SparseMatrix& X, std::span<const std::string> labels) {
  if (labels.empty()) return 0.0;
  const Prediction p = predict(model, X);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (model.class_order[static_cast<std::size_t>(p.labels[i])] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::string LogRegModel::to_json() const {
  std::vector<double> w_flat;
  w_flat.reserve(static_cast<std::size_t>(W.size()));
  for (Eigen::Index k = 0; k < W.rows(); ++k) {
    for (Eigen::Index j = 0; j < W.cols(); ++j) w_flat.push_back(W(k, j));
  }
  json j = {{"class_order", class_order},
            {"d", W.cols()},
            {"W", w_flat},
            {"b", std::vector<double>(b.data(), b.data() + b.size())},
            {"config",
             {{"C", config.C},
              {"max_iter", config.max_iter},
              {"tol", config.tol},
              {"lbfgs_memory", config.lbfgs_memory},
              {"standardize", config.standardize}}},
            {"training_meta",
             {{"iterations", meta.iterations},
              {"evaluations", meta.evaluations},
              {"final_loss", meta.final_loss},
              {"status", meta.status}}}};
  return j.dump();
}

LogRegModel LogRegModel::from_json(std::string_view text) {
  LogRegModel m;
  try {
    const json j = json::parse(text);
    m.class_order = j.at("class_order").get<std::vector<std::string>>();
    const auto d = j.at("d").get<Eigen::Index>();
    const auto w = j.at("W").get<std::vector<double>>();
    const auto b = j.at("b").get<std::vector<double>>();
    const auto K = static_cast<Eigen::Index>(m.class_order.size());
    if (static_cast<Eigen::Index>(w.size()) != K * d || static_cast<Eigen::Index>(b.size()) != K) {
      throw ShapeError("model file has inconsistent shapes");
    }
    m.W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), K, d);
    m.b = Eigen::Map<const Eigen::VectorXd>(b.data(), K);
    const auto& c = j.at("config");
    m.config.C = c.at("C").get<double>();
    m.config.max_iter = c.at("max_iter").get<int>();
    m.config.tol = c.at("tol").get<double>();
    m.config.lbfgs_memory = c.at("lbfgs_memory").get<int>();
    m.config.standardize = c.value("standardize", false);
    const auto& meta = j.at("training_meta");
    m.meta.iterations = meta.value("iterations", 0);
    m.meta.evaluations = meta.value("evaluations", 0);
    m.meta.final_loss = meta.value("final_loss", 0.0);
    m.meta.status = meta.value("status", std::string());
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("invalid model file: ") + e.what());
  }
  if (!std::is_sorted(m.class_order.begin(), m.class_order.end())) throw ProtocolError("class_order is not sorted");
  if (!m.W.allFinite() || !m.b.allFinite()) throw NumericError("model file holds non-finite weights");
  return m;
}

void LogRegModel::save(const std::filesystem::path& path) const { io::write_file(path, to_json()); }

LogRegModel LogRegModel::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace nli::classifier
