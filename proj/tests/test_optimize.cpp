#include "mixtsql/optimize.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mixtsql;

TEST(Bfgs, QuadraticBowl) {
  // f(x) = (x - c)' A (x - c) with A diagonal.
  Eigen::VectorXd c(3);
  c << 1.0, -2.0, 0.5;
  Eigen::VectorXd a(3);
  a << 1.0, 10.0, 0.1;

  auto fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd r = x - c;
    if (g) *g = 2.0 * a.cwiseProduct(r);
    return r.dot(a.cwiseProduct(r));
  };

  const OptimResult res = minimize_bfgs(fn, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(res.status, OptimStatus::Converged);
  EXPECT_LT((res.x - c).lpNorm<Eigen::Infinity>(), 1e-5);
  EXPECT_LT(res.value, 1e-10);
}

TEST(Bfgs, Rosenbrock) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (g) {
      g->resize(2);
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const OptimResult res = minimize_bfgs(fn, x0);
  EXPECT_EQ(res.status, OptimStatus::Converged);
  EXPECT_NEAR(res.x[0], 1.0, 1e-5);
  EXPECT_NEAR(res.x[1], 1.0, 1e-5);
}

TEST(Bfgs, ReportsIterationCap) {
  // Tolerance tight enough that the cap is reached first.
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) {
      g->resize(1);
      (*g)[0] = 4.0 * x[0] * (x[0] * x[0] - 2.0);
    }
    const double d = x[0] * x[0] - 2.0;
    return d * d;
  };
  Eigen::VectorXd x0(1);
  x0 << 3.0;
  OptimOptions opts;
  opts.max_iterations = 2;
  opts.grad_tol = 1e-16;
  const OptimResult res = minimize_bfgs(fn, x0, opts);
  EXPECT_EQ(res.status, OptimStatus::MaxIterations);
  EXPECT_EQ(res.iterations, 2);
}

TEST(Bfgs, ConvergenceCriterionHolds) {
  auto fn = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm();
  };
  const OptimResult res = minimize_bfgs(fn, Eigen::VectorXd::Constant(2, 5.0));
  EXPECT_EQ(res.status, OptimStatus::Converged);
  EXPECT_DOUBLE_EQ(res.grad_norm, res.grad.lpNorm<Eigen::Infinity>());
  EXPECT_LE(res.grad_norm, 1e-6 * (1.0 + std::abs(res.value)));
}

TEST(NelderMead, PolishesNonSmoothPoint) {
  // |x| + |y|: gradient-based steps stall at kinks; the simplex still moves.
  auto value_only = [](const Eigen::VectorXd& x, Eigen::VectorXd*) {
    return std::abs(x[0] - 0.3) + std::abs(x[1] + 0.7);
  };
  Eigen::VectorXd x0(2);
  x0 << 2.0, 2.0;
  const Eigen::VectorXd best = detail::nelder_mead(value_only, x0, 800);
  EXPECT_NEAR(best[0], 0.3, 1e-3);
  EXPECT_NEAR(best[1], -0.7, 1e-3);
}
