#pragma once

// Limited-memory BFGS with a strong-Wolfe line search.

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nli::classifier {

// Returns f(x) and writes the gradient into grad (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int memory = 10;
  double tol = 1e-4;  // on the max-norm of the gradient
  int max_iter = 1000;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_evals = 40;
};

enum class LbfgsStatus { converged, max_iterations, line_search_failed };

const char* to_string(LbfgsStatus s) noexcept;

struct LbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::max_iterations;
  // Objective after every accepted iteration, starting with f(x0).
  std::vector<double> history;
};

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options = {});

}  // namespace nli::classifier
