#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mixtsql/model.hpp"

namespace mixtsql {

/// Linear predictors and conditional means for t = m+1..n.
struct MeanPath {
  std::vector<double> nu1, nu2;
  std::vector<double> mu1, mu2;
  bool clamped = false;  // any mean hit the variance-domain guard
};

/// Apply the lag transform T elementwise.
inline std::vector<double> transform_series(const std::vector<double>& y,
                                            const LinkFunction& link) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = link.transform_obs(y[i]);
  return out;
}

inline MeanPath mean_path(const ModelContext& ctx,
                          const Eigen::VectorXd& theta_flat) {
  const int d1 = ctx.spec.eq1.num_params();
  const int d2 = ctx.spec.eq2.num_params();
  if (theta_flat.size() != d1 + d2)
    throw InvalidSpec("theta not conformable with model spec");

  const Eigen::VectorXd nu1 = ctx.x1 * theta_flat.head(d1);
  const Eigen::VectorXd nu2 = ctx.x2 * theta_flat.tail(d2);

  MeanPath path;
  const int rows = ctx.terms();
  path.nu1.resize(rows);
  path.nu2.resize(rows);
  path.mu1.resize(rows);
  path.mu2.resize(rows);
  for (int i = 0; i < rows; ++i) {
    path.nu1[i] = nu1[i];
    path.nu2[i] = nu2[i];
    path.mu1[i] = ctx.spec.eq1.variance.clamp_mean(
        ctx.spec.eq1.link.inverse(nu1[i]), &path.clamped);
    path.mu2[i] = ctx.spec.eq2.variance.clamp_mean(
        ctx.spec.eq2.link.inverse(nu2[i]), &path.clamped);
  }
  return path;
}

inline MeanPath mean_path(const ModelContext& ctx, const ParamVector& theta) {
  return mean_path(ctx, theta.flatten(ctx.spec));
}

/// Q(y; mu) with y-only constants dropped, as used in optimization.
inline double ql_contribution(double y, double mu, double phi,
                              const VarianceFunction& variance) {
  mu = variance.clamp_mean(mu);
  switch (variance.kind) {
    case VarianceKind::Constant: {
      const double r = mu - y;
      return -r * r / (2.0 * phi);
    }
    case VarianceKind::Linear:
      return (y * std::log(mu) - mu) / phi;
    case VarianceKind::BernoulliLike: {
      const double yc = std::clamp(y, kDomainEps, 1.0 - kDomainEps);
      return (yc * std::log(mu) + (1.0 - yc) * std::log(1.0 - mu)) / phi;
    }
    case VarianceKind::Quadratic:
      return (-y / mu - std::log(mu)) / phi;
  }
  return 0.0;
}

/// Q(y; mu) including the y-dependent constants, i.e. the exact integral
/// (1/phi) * int_y^mu (y - w)/V(w) dw. Zero at mu = y. Used by the
/// quadrature-oracle tests and the deviance saturation identity.
inline double ql_contribution_full(double y, double mu, double phi,
                                   const VarianceFunction& variance) {
  mu = variance.clamp_mean(mu);
  switch (variance.kind) {
    case VarianceKind::Constant: {
      const double r = mu - y;
      return -r * r / (2.0 * phi);
    }
    case VarianceKind::Linear: {
      if (y == 0.0) return -mu / phi;
      if (!(y > 0.0))
        throw DomainViolation("linear-variance QL requires y >= 0");
      return (y * std::log(mu / y) - (mu - y)) / phi;
    }
    case VarianceKind::BernoulliLike: {
      const double yc = std::clamp(y, kDomainEps, 1.0 - kDomainEps);
      return (yc * std::log(mu / yc) +
              (1.0 - yc) * std::log((1.0 - mu) / (1.0 - yc))) /
             phi;
    }
    case VarianceKind::Quadratic: {
      const double yc = std::max(y, kDomainEps);
      return (-yc / mu - std::log(mu) + 1.0 + std::log(yc)) / phi;
    }
  }
  return 0.0;
}

/// Accumulated quasi-log-likelihood over t = m+1..n (constant-dropped forms).
inline double quasi_loglik(const ModelContext& ctx, const MeanPath& path,
                           double phi1, double phi2) {
  double q = 0.0;
  const int rows = ctx.terms();
  for (int i = 0; i < rows; ++i) {
    q += ql_contribution(ctx.data.y1[ctx.m + i], path.mu1[i], phi1,
                         ctx.spec.eq1.variance);
    q += ql_contribution(ctx.data.y2[ctx.m + i], path.mu2[i], phi2,
                         ctx.spec.eq2.variance);
  }
  return q;
}

inline double quasi_loglik(const ModelContext& ctx, const ParamVector& theta) {
  const MeanPath path = mean_path(ctx, theta);
  return quasi_loglik(ctx, path, theta.phi1, theta.phi2);
}

namespace detail {

// Score weight for one observation: (1/phi) (y - mu) / (V(mu) g'(mu)).
inline double score_weight(double y, double mu, double phi,
                           const VarianceFunction& variance,
                           const LinkFunction& link) {
  return (y - mu) / (phi * variance.value(mu) * link.derivative(mu));
}

}  // namespace detail

/// Analytic quasi-score U(theta) in flattening order.
inline Eigen::VectorXd score(const ModelContext& ctx,
                             const Eigen::VectorXd& theta_flat, double phi1,
                             double phi2) {
  const MeanPath path = mean_path(ctx, theta_flat);
  const int d1 = ctx.spec.eq1.num_params();
  const int d2 = ctx.spec.eq2.num_params();
  const int rows = ctx.terms();

  Eigen::VectorXd w1(rows), w2(rows);
  for (int i = 0; i < rows; ++i) {
    w1[i] = detail::score_weight(ctx.data.y1[ctx.m + i], path.mu1[i], phi1,
                                 ctx.spec.eq1.variance, ctx.spec.eq1.link);
    w2[i] = detail::score_weight(ctx.data.y2[ctx.m + i], path.mu2[i], phi2,
                                 ctx.spec.eq2.variance, ctx.spec.eq2.link);
  }

  Eigen::VectorXd u(d1 + d2);
  u.head(d1) = ctx.x1.transpose() * w1;
  u.tail(d2) = ctx.x2.transpose() * w2;
  return u;
}

inline Eigen::VectorXd score(const ModelContext& ctx, const ParamVector& theta) {
  return score(ctx, theta.flatten(ctx.spec), theta.phi1, theta.phi2);
}

}  // namespace mixtsql
