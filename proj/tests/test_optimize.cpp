#include <cmath>

#include "doctest.h"
#include <Eigen/Dense>

#include "qdent/optimize.hpp"

using namespace qdent::optimize;

TEST_SUITE("optimize") {
  TEST_CASE("quadratic bowl converges to the exact minimum") {
    Eigen::MatrixXd a(3, 3);
    a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
    const Eigen::VectorXd b = Eigen::Vector3d(1, -2, 0.5);
    const Objective f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      g = a * x - b;
      return 0.5 * x.dot(a * x) - b.dot(x);
    };
    const auto r = minimize_bfgs(f, Eigen::VectorXd::Zero(3));
    CHECK(r.converged());
    CHECK((r.x - a.ldlt().solve(b)).norm() < 1e-9);
  }

  TEST_CASE("Rosenbrock") {
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      const double u = 1 - x(0), v = x(1) - x(0) * x(0);
      g(0) = -2 * u - 400 * x(0) * v;
      g(1) = 200 * v;
      return u * u + 100 * v * v;
    };
    const auto r = minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0));
    CHECK(r.converged());
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.gradient_norm <= 1e-9);
  }

  TEST_CASE("iteration budget is reported") {
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      const double u = 1 - x(0), v = x(1) - x(0) * x(0);
      g(0) = -2 * u - 400 * x(0) * v;
      g(1) = 200 * v;
      return u * u + 100 * v * v;
    };
    const auto r = minimize_bfgs(f, Eigen::Vector2d(-1.2, 1.0), {1e-9, 3});
    CHECK(!r.converged());
    CHECK(r.status == BfgsStatus::MaxIterations);
    CHECK(r.iterations == 3);
    CHECK(to_string(r.status) == "iteration budget exhausted");
  }

  TEST_CASE("deterministic across repeated runs") {
    const Objective f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      double s = 0;
      for (int i = 0; i < x.size(); ++i) {
        s += std::cosh(x(i) - i) + 0.1 * x(i) * x((i + 1) % x.size());
      }
      for (int i = 0; i < x.size(); ++i)
        g(i) = std::sinh(x(i) - i) + 0.1 * (x((i + 1) % x.size()) + x((i + x.size() - 1) % x.size()));
      return s;
    };
    const auto a = minimize_bfgs(f, Eigen::VectorXd::Constant(6, 0.3));
    const auto b = minimize_bfgs(f, Eigen::VectorXd::Constant(6, 0.3));
    CHECK(a.converged());
    CHECK(a.x == b.x);
    CHECK(a.evaluations == b.evaluations);
  }
}
