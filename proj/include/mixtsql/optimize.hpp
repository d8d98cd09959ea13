#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace mixtsql {

enum class OptimStatus { Converged, MaxIterations, LineSearchFailed };

struct OptimOptions {
  int max_iterations = 500;
  // Converged when ||grad||_inf <= grad_tol * (1 + |f|).
  double grad_tol = 1e-6;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd grad;
  int iterations = 0;
  OptimStatus status = OptimStatus::MaxIterations;
  double grad_norm = 0.0;
};

// Objective: f(x) with gradient written to *grad when non-null.
using Objective =
    std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

namespace detail {

// Nelder-Mead simplex, used only as a restart when the BFGS line search
// stalls. Returns the best vertex found.
inline Eigen::VectorXd nelder_mead(const Objective& fn, Eigen::VectorXd x0,
                                   int max_iters) {
  const int d = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> v(d + 1, x0);
  std::vector<double> f(d + 1);
  for (int i = 0; i < d; ++i) {
    const double step = std::abs(x0[i]) > 1e-2 ? 0.05 * std::abs(x0[i]) : 0.05;
    v[i + 1][i] += step;
  }
  for (int i = 0; i <= d; ++i) f[i] = fn(v[i], nullptr);

  auto order = [&] {
    for (int i = 1; i <= d; ++i) {
      int j = i;
      while (j > 0 && f[j] < f[j - 1]) {
        std::swap(f[j], f[j - 1]);
        std::swap(v[j], v[j - 1]);
        --j;
      }
    }
  };
  order();

  for (int it = 0; it < max_iters; ++it) {
    if (std::abs(f[d] - f[0]) <= 1e-12 * (1.0 + std::abs(f[0]))) break;
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += v[i];
    centroid /= d;

    Eigen::VectorXd xr = centroid + (centroid - v[d]);
    const double fr = fn(xr, nullptr);
    if (fr < f[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - v[d]);
      const double fe = fn(xe, nullptr);
      if (fe < fr) { v[d] = xe; f[d] = fe; } else { v[d] = xr; f[d] = fr; }
    } else if (fr < f[d - 1]) {
      v[d] = xr; f[d] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (v[d] - centroid);
      const double fc = fn(xc, nullptr);
      if (fc < f[d]) {
        v[d] = xc; f[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          v[i] = v[0] + 0.5 * (v[i] - v[0]);
          f[i] = fn(v[i], nullptr);
        }
      }
    }
    order();
  }
  return v[0];
}

}  // namespace detail

/// BFGS with analytic gradient and Armijo backtracking. If a line search
/// fails to find decrease, restarts once from a Nelder-Mead polish of the
/// current point before giving up.
inline OptimResult minimize_bfgs(const Objective& fn, Eigen::VectorXd x0,
                                 const OptimOptions& opts = {}) {
  const int d = static_cast<int>(x0.size());
  OptimResult res;

  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(d);
  double f = fn(x, &g);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(d, d);
  bool simplex_used = false;

  auto converged = [&](double fv, const Eigen::VectorXd& gv) {
    return gv.lpNorm<Eigen::Infinity>() <= opts.grad_tol * (1.0 + std::abs(fv));
  };

  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (converged(f, g)) {
      res.status = OptimStatus::Converged;
      break;
    }

    Eigen::VectorXd dir = -(h_inv * g);
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {  // not a descent direction; reset curvature
      h_inv.setIdentity();
      dir = -g;
      slope = g.dot(dir);
    }

    double alpha = 1.0;
    double f_new = f;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * dir;
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      if (!simplex_used) {
        simplex_used = true;
        x = detail::nelder_mead(fn, x, 200 * d);
        f = fn(x, &g);
        h_inv.setIdentity();
        continue;
      }
      res.status = OptimStatus::LineSearchFailed;
      break;
    }

    Eigen::VectorXd g_new(d);
    fn(x_new, &g_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
      h_inv = (eye - rho * s * yv.transpose()) * h_inv *
                  (eye - rho * yv * s.transpose()) +
              rho * s * s.transpose();
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
  }

  if (it == opts.max_iterations && converged(f, g))
    res.status = OptimStatus::Converged;

  res.x = std::move(x);
  res.value = f;
  res.grad = std::move(g);
  res.iterations = it;
  res.grad_norm = res.grad.lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace mixtsql
