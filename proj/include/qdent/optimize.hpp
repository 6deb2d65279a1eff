#pragma once

#include <functional>
#include <string>

#include <Eigen/Core>

namespace qdent::optimize {

/// Returns f(x) and writes ∇f(x) into `grad` (already sized like x).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
  double gradient_tolerance = 1e-9;  // on ‖∇f‖∞
  int max_iterations = 10000;
};

enum class BfgsStatus { Converged, MaxIterations, LineSearchFailed };

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  BfgsStatus status = BfgsStatus::MaxIterations;
  bool converged() const noexcept { return status == BfgsStatus::Converged; }
};

std::string to_string(BfgsStatus s);

/// Dense BFGS on the inverse Hessian with a strong-Wolfe line search
/// (c1 = 1e-4, c2 = 0.9). Deterministic: no randomness, fixed evaluation order.
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options = {});

}  // namespace qdent::optimize
