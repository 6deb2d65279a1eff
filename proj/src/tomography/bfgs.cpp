#include <algorithm>
#include <cmath>
#include <limits>

#include "qdent/optimize.hpp"

namespace qdent::optimize {
namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

struct Probe {
  double step;
  double value;
  double slope;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

class LineSearch {
 public:
  LineSearch(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& dir, double f0, double slope0,
             int& evaluations)
      : f_(f), x_(x), dir_(dir), f0_(f0), slope0_(slope0), flat_(1e-12 * std::abs(f0)), evaluations_(evaluations) {}

  /// Strong-Wolfe step; returns false if none was found. On failure `out`
  /// still holds the best sufficient-decrease point, if any.
  bool run(double initial_step, Probe& out, bool& has_decrease) {
    has_decrease = false;
    Probe prev{0.0, f0_, slope0_, x_, {}};
    double step = initial_step;
    for (int i = 0; i < 40; ++i) {
      Probe cur = probe(step);
      if (!decreases(cur) || (i > 0 && no_better(cur, prev))) {
        return zoom(prev, cur, out, has_decrease);
      }
      remember(cur, out, has_decrease);
      if (std::abs(cur.slope) <= -kC2 * slope0_) return true;
      if (cur.slope >= 0.0) return zoom(cur, prev, out, has_decrease);
      prev = std::move(cur);
      step *= 2.0;
    }
    return false;
  }

 private:
  Probe probe(double step) {
    Probe p{step, 0.0, 0.0, x_ + step * dir_, Eigen::VectorXd(x_.size())};
    p.value = f_(p.x, p.grad);
    ++evaluations_;
    p.slope = std::isfinite(p.value) ? p.grad.dot(dir_) : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  void remember(const Probe& p, Probe& out, bool& has_decrease) const {
    if (p.step > 0.0 && decreases(p) && (!has_decrease || p.value < out.value)) {
      out = p;
      has_decrease = true;
    }
  }

  // Sufficient decrease, or the approximate form used once f no longer
  // resolves changes of size step·slope: f flat within rounding and the slope
  // reduced to (1 − 2c1)|φ'(0)|.
  bool decreases(const Probe& p) const {
    if (!std::isfinite(p.value)) return false;
    if (p.value <= f0_ + kC1 * p.step * slope0_) return true;
    return p.value <= f0_ + flat_ && p.slope <= -(1.0 - 2.0 * kC1) * slope0_;
  }

  // Whether `cur` fails to improve on `ref`; within rounding of each other the
  // slope sign decides.
  bool no_better(const Probe& cur, const Probe& ref) const {
    if (std::abs(cur.value - ref.value) <= flat_) return cur.slope >= 0.0;
    return cur.value >= ref.value;
  }

  bool zoom(Probe lo, Probe hi, Probe& out, bool& has_decrease) {
    for (int i = 0; i < 60; ++i) {
      const double width = hi.step - lo.step;
      if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(lo.step))) break;
      // Quadratic through lo (value, slope) and hi (value), safeguarded to the
      // interior of the bracket.
      double trial = lo.step + 0.5 * width;
      if (std::isfinite(hi.value)) {
        const double denom = 2.0 * (hi.value - lo.value - lo.slope * width);
        if (denom > 0.0) trial = lo.step - lo.slope * width * width / denom;
      }
      const double a = std::min(lo.step, hi.step);
      const double b = std::max(lo.step, hi.step);
      trial = std::clamp(trial, a + 0.1 * (b - a), b - 0.1 * (b - a));

      Probe cur = probe(trial);
      if (!decreases(cur) || no_better(cur, lo)) {
        hi = std::move(cur);
        continue;
      }
      remember(cur, out, has_decrease);
      if (std::abs(cur.slope) <= -kC2 * slope0_) return true;
      if (cur.slope * (hi.step - lo.step) >= 0.0) hi = lo;
      lo = std::move(cur);
    }
    return false;
  }

  const Objective& f_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& dir_;
  double f0_;
  double slope0_;
  double flat_;
  int& evaluations_;
};

}  // namespace

std::string to_string(BfgsStatus s) {
  switch (s) {
    case BfgsStatus::Converged:
      return "converged";
    case BfgsStatus::MaxIterations:
      return "iteration budget exhausted";
    case BfgsStatus::LineSearchFailed:
      return "line search failed";
  }
  return "unknown";
}

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  Eigen::VectorXd grad(n);
  res.value = f(res.x, grad);
  res.evaluations = 1;
  res.gradient_norm = grad.lpNorm<Eigen::Infinity>();

  Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;  // inverse Hessian is a scaled identity with no curvature yet
  while (true) {
    if (res.gradient_norm <= options.gradient_tolerance) {
      res.status = BfgsStatus::Converged;
      return res;
    }
    if (res.iterations >= options.max_iterations) {
      res.status = BfgsStatus::MaxIterations;
      return res;
    }

    Eigen::VectorXd dir = -inv_hessian * grad;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      fresh = true;
      dir = -grad;
      slope = grad.dot(dir);
    }
    const double initial = fresh ? std::min(1.0, 1.0 / std::max(res.gradient_norm, 1e-300)) : 1.0;

    Probe accepted;
    bool has_decrease = false;
    LineSearch search(f, res.x, dir, res.value, slope, res.evaluations);
    const bool wolfe = search.run(initial, accepted, has_decrease);
    if (!wolfe && !has_decrease) {
      if (!fresh) {
        // Retry once along steepest descent before giving up.
        inv_hessian.setIdentity();
        fresh = true;
        continue;
      }
      res.status = BfgsStatus::LineSearchFailed;
      return res;
    }

    const Eigen::VectorXd s = accepted.x - res.x;
    const Eigen::VectorXd y = accepted.grad - grad;
    res.x = std::move(accepted.x);
    res.value = accepted.value;
    grad = std::move(accepted.grad);
    res.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    ++res.iterations;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        inv_hessian *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = inv_hessian * y;
      // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, expanded
      inv_hessian += rho * rho * y.dot(hy) * s * s.transpose() + rho * s * s.transpose() -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }
  }
}

}  // namespace qdent::optimize
