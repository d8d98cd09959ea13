#pragma once

// Test-only oracles, independent of the library's evaluation paths.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mixtsql/model.hpp"

namespace oracles {

inline double simpson(const std::function<double(double)>& f, double a,
                      double m, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f,
                                   double a, double b, double fa, double fm,
                                   double fb, double whole, double tol,
                                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, lm, m, fa, flm, fm);
  const double right = simpson(f, m, rm, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-10) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb,
                              simpson(f, a, m, b, fa, fm, fb), tol, 60);
}

// Direct numerical evaluation of (1/phi) * int_y^mu (y - w)/V(w) dw.
inline double quadrature_ql(double y, double mu, double phi,
                            mixtsql::VarianceKind kind) {
  auto v = [kind](double w) {
    switch (kind) {
      case mixtsql::VarianceKind::Constant: return 1.0;
      case mixtsql::VarianceKind::Linear: return w;
      case mixtsql::VarianceKind::BernoulliLike: return w * (1.0 - w);
      case mixtsql::VarianceKind::Quadratic: return w * w;
    }
    return 1.0;
  };
  auto integrand = [&](double w) { return (y - w) / v(w); };
  // Split at the midpoint to keep the adaptive rule honest on skewed ranges.
  const double mid = 0.5 * (y + mu);
  return (adaptive_simpson(integrand, y, mid, 5e-11) +
          adaptive_simpson(integrand, mid, mu, 5e-11)) /
         phi;
}

inline Eigen::VectorXd central_difference_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h0 = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h0 * std::max(1.0, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// PACF by solving the Yule-Walker (Toeplitz) system at each order directly;
// an algebraic route independent of the Durbin-Levinson recursion.
inline std::vector<double> toeplitz_pacf(const std::vector<double>& acf,
                                         int max_lag) {
  std::vector<double> pacf(max_lag);
  for (int h = 1; h <= max_lag; ++h) {
    Eigen::MatrixXd r(h, h);
    Eigen::VectorXd rhs(h);
    for (int i = 0; i < h; ++i) {
      rhs[i] = acf[i + 1];
      for (int j = 0; j < h; ++j) r(i, j) = acf[std::abs(i - j)];
    }
    pacf[h - 1] = r.fullPivLu().solve(rhs)[h - 1];
  }
  return pacf;
}

}  // namespace oracles
