#pragma once

// Multinomial logistic regression with an L2 penalty, trained by L-BFGS.
//
// Objective: J(W, b) = 0.5 * ||W||_F^2 + C * sum_i -log softmax(W x_i + b)[y_i]
// The bias is not penalized.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nli/classifier/lbfgs.hpp"
#include "nli/matrix.hpp"

namespace nli::classifier {

struct TrainConfig {
  double C = 1.0;
  int max_iter = 1000;
  double tol = 1e-4;
  int lbfgs_memory = 10;
  bool standardize = false;  // z-score columns before fitting

  void validate() const;
};

struct TrainingMeta {
  int iterations = 0;
  int evaluations = 0;
  double final_loss = 0.0;
  std::string status;
};

struct LogRegModel {
  std::vector<std::string> class_order;  // sorted ascending
  Eigen::MatrixXd W;                     // K x d
  Eigen::VectorXd b;                     // K
  TrainConfig config;
  TrainingMeta meta;

  std::size_t num_classes() const noexcept { return class_order.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(W.cols()); }

  std::string to_json() const;
  static LogRegModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static LogRegModel load(const std::filesystem::path& path);
};

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad_W;
  Eigen::VectorXd grad_b;
};

// Exact value and gradient of J. Labels index rows of W.
LossGrad loss_and_grad(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const SparseMatrix& X,
                       std::span<const int> y, double C);

// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

LogRegModel train(const SparseMatrix& X, std::span<const std::string> labels, const TrainConfig& config = {});

struct Prediction {
  std::vector<int> labels;  // indices into class_order
  Eigen::MatrixXd probabilities;
};

// Ties go to the lowest class index.
Prediction predict(const LogRegModel& model, const SparseMatrix& X);

// Fraction of rows whose predicted class name equals the true label.
double accuracy(const LogRegModel& model, const SparseMatrix& X, std::span<const std::string> labels);

}  // namespace nli::classifier
