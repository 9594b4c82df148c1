#include "nli/classifier/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "nli/errors.hpp"

namespace nli::classifier {

const char* to_string(LbfgsStatus s) noexcept {
  switch (s) {
    case LbfgsStatus::converged: return "converged";
    case LbfgsStatus::max_iterations: return "max_iterations";
    case LbfgsStatus::line_search_failed: return "line_search_failed";
  }
  return "?";
}

namespace {

struct Probe {
  double step = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along the search direction
  Eigen::VectorXd x;
  Eigen::VectorXd g;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsOptions& opt, const Eigen::VectorXd& x0, double f0, double slope0,
             const Eigen::VectorXd& dir, int& evals)
      : f_(f), opt_(opt), x0_(x0), f0_(f0), slope0_(slope0), dir_(dir), evals_(evals) {}

  // Strong-Wolfe search (bracketing phase followed by zoom).
  std::optional<Probe> run(double initial_step) {
    Probe prev{0.0, f0_, slope0_, x0_, {}};
    double step = initial_step;
    for (int i = 0; i < opt_.max_line_search_evals; ++i) {
      Probe cur = probe(step);
      if (!std::isfinite(cur.f)) {
        step *= 0.5;
        continue;
      }
      if (cur.f > f0_ + opt_.c1 * cur.step * slope0_ || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.slope) <= -opt_.c2 * slope0_) return cur;
      if (cur.slope >= 0.0) return zoom(cur, prev);
      prev = std::move(cur);
      step *= 2.0;
    }
    return std::nullopt;
  }

 private:
  Probe probe(double step) {
    Probe p;
    p.step = step;
    p.x = x0_ + step * dir_;
    p.g.resize(p.x.size());
    p.f = f_(p.x, p.g);
    p.slope = p.g.dot(dir_);
    ++evals_;
    return p;
  }

  static double cubic_min(const Probe& a, const Probe& b) {
    const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.step - b.step);
    const double disc = d1 * d1 - a.slope * b.slope;
    if (!(disc >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b.step - a.step);
    return b.step - (b.step - a.step) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  }

  std::optional<Probe> zoom(Probe lo, Probe hi) {
    for (int i = 0; i < opt_.max_line_search_evals; ++i) {
      const double left = std::min(lo.step, hi.step);
      const double right = std::max(lo.step, hi.step);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) break;
      double step = cubic_min(lo, hi);
      if (!std::isfinite(step) || step < left + 0.1 * width || step > right - 0.1 * width) {
        step = 0.5 * (left + right);
      }
      Probe cur = probe(step);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opt_.c1 * cur.step * slope0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.slope) <= -opt_.c2 * slope0_) return cur;
        if (cur.slope * (hi.step - lo.step) >= 0.0) hi = std::move(lo);
        lo = std::move(cur);
      }
    }
    // Accept the best sufficient-decrease point if the curvature test never passed.
    if (lo.step > 0.0 && lo.f < f0_) return lo;
    return std::nullopt;
  }

  const Objective& f_;
  const LbfgsOptions& opt_;
  const Eigen::VectorXd& x0_;
  double f0_;
  double slope0_;
  const Eigen::VectorXd& dir_;
  int& evals_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& f, Eigen::VectorXd x0, const LbfgsOptions& options) {
  if (options.memory < 1) throw ConfigError("L-BFGS memory must be >= 1");
  if (options.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(options.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!x0.allFinite()) throw NumericError("L-BFGS start point is not finite");

  LbfgsResult r;
  r.x = std::move(x0);
  r.grad.resize(r.x.size());
  r.f = f(r.x, r.grad);
  r.evaluations = 1;
  if (!std::isfinite(r.f) || !r.grad.allFinite()) throw NumericError("objective is not finite at the start point");
  r.history.push_back(r.f);
  if (r.grad.size() == 0 || r.grad.lpNorm<Eigen::Infinity>() <= options.tol) {
    r.status = LbfgsStatus::converged;
    return r;
  }

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // Two-loop recursion.
    Eigen::VectorXd q = r.grad;
    const std::size_t m = s_hist.size();
    alpha.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += s_hist[k] * (alpha[k] - beta);
    }
    Eigen::VectorXd dir = -q;
    double slope = r.grad.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -r.grad;
      slope = -r.grad.squaredNorm();
    }
    const double initial_step = s_hist.empty() ? 1.0 / std::max(1.0, r.grad.norm()) : 1.0;

    LineSearch search(f, options, r.x, r.f, slope, dir, r.evaluations);
    auto accepted = search.run(initial_step);
    if (!accepted) {
      r.status = LbfgsStatus::line_search_failed;
      return r;
    }

    Eigen::VectorXd s = accepted->x - r.x;
    Eigen::VectorXd y = accepted->g - r.grad;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    r.x = std::move(accepted->x);
    r.grad = std::move(accepted->g);
    r.f = accepted->f;
    r.iterations = iter;
    r.history.push_back(r.f);
    if (r.grad.lpNorm<Eigen::Infinity>() <= options.tol) {
      r.status = LbfgsStatus::converged;
      return r;
    }
  }
  r.status = LbfgsStatus::max_iterations;
  return r;
}

}  // namespace nli::classifier
