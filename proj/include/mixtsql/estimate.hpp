#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mixtsql/model.hpp"
#include "mixtsql/optimize.hpp"
#include "mixtsql/qlcore.hpp"
#include "mixtsql/simulate.hpp"
#include "mixtsql/threads.hpp"

namespace mixtsql {

// 95% intervals use the normal quantile 1.96.
inline constexpr double kNormal975 = 1.96;

struct Convergence {
  int iterations = 0;
  double grad_norm = 0.0;
  OptimStatus status = OptimStatus::MaxIterations;
};

struct FitResult {
  ModelSpec spec;
  ParamVector theta;  // theta-hat, with phi1/phi2 set to the MoM estimates
  Eigen::MatrixXd cov;  // (n-m)^{-1} Sigma-hat, flattening order
  Eigen::VectorXd se;
  std::vector<std::array<double, 2>> ci;  // theta_i -+ 1.96 se_i
  double qll = 0.0;     // quasi-log-likelihood at theta-hat
  MeanPath path;        // fitted conditional means
  Convergence convergence;
  bool dispersion_degenerate = false;  // a phi-hat collapsed to zero
  bool clamping = false;  // epsilon-clamping engaged during transform or fit
  int conditioning = 0;   // m used for this fit

  bool converged() const { return convergence.status == OptimStatus::Converged; }
};

/// Method-of-moments dispersions: phi_j = sum (y - mu)^2 / sum V(mu).
inline std::pair<double, double> estimate_dispersion(const ModelContext& ctx,
                                                     const MeanPath& path) {
  double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
  const int rows = ctx.terms();
  for (int i = 0; i < rows; ++i) {
    const double r1 = ctx.data.y1[ctx.m + i] - path.mu1[i];
    const double r2 = ctx.data.y2[ctx.m + i] - path.mu2[i];
    num1 += r1 * r1;
    den1 += ctx.spec.eq1.variance.value(path.mu1[i]);
    num2 += r2 * r2;
    den2 += ctx.spec.eq2.variance.value(path.mu2[i]);
  }
  if (!(den1 > 0.0) || !(den2 > 0.0))
    throw ZeroVarianceDenominator("sum of variance-function values is zero");
  return {num1 / den1, num2 / den2};
}

inline std::pair<double, double> estimate_dispersion(const ModelContext& ctx,
                                                     const ParamVector& theta) {
  return estimate_dispersion(ctx, mean_path(ctx, theta));
}

/// Robust covariance: Sigma-hat = S2^{-1} S1 S2^{-1} with
/// S1 = N^{-1} sum U_t U_t', S2 = N^{-1} sum H_t, H_t block-diagonal with
/// blocks x_t x_t' / (phi_j V_j(mu_jt) g_j'(mu_jt)^2). N = n - m, the number
/// of summands. Returns the coefficient covariance N^{-1} Sigma-hat.
inline Eigen::MatrixXd sandwich_covariance(const ModelContext& ctx,
                                           const Eigen::VectorXd& theta_flat,
                                           double phi1, double phi2,
                                           Eigen::MatrixXd* s1_out = nullptr,
                                           Eigen::MatrixXd* s2_out = nullptr) {
  const MeanPath path = mean_path(ctx, theta_flat);
  const int d1 = ctx.spec.eq1.num_params();
  const int d2 = ctx.spec.eq2.num_params();
  const int d = d1 + d2;
  const int rows = ctx.terms();

  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd u(d);
  for (int i = 0; i < rows; ++i) {
    const auto& eq1 = ctx.spec.eq1;
    const auto& eq2 = ctx.spec.eq2;
    const double mu1 = path.mu1[i];
    const double mu2 = path.mu2[i];
    const double w1 = detail::score_weight(ctx.data.y1[ctx.m + i], mu1, phi1,
                                           eq1.variance, eq1.link);
    const double w2 = detail::score_weight(ctx.data.y2[ctx.m + i], mu2, phi2,
                                           eq2.variance, eq2.link);
    u.head(d1) = w1 * ctx.x1.row(i).transpose();
    u.tail(d2) = w2 * ctx.x2.row(i).transpose();
    s1.noalias() += u * u.transpose();

    const double g1p = eq1.link.derivative(mu1);
    const double g2p = eq2.link.derivative(mu2);
    const double h1 = 1.0 / (phi1 * eq1.variance.value(mu1) * g1p * g1p);
    const double h2 = 1.0 / (phi2 * eq2.variance.value(mu2) * g2p * g2p);
    s2.topLeftCorner(d1, d1).noalias() +=
        h1 * ctx.x1.row(i).transpose() * ctx.x1.row(i);
    s2.bottomRightCorner(d2, d2).noalias() +=
        h2 * ctx.x2.row(i).transpose() * ctx.x2.row(i);
  }
  const double nn = static_cast<double>(rows);
  s1 /= nn;
  s2 /= nn;
  if (s1_out) *s1_out = s1;
  if (s2_out) *s2_out = s2;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(s2);
  if (!lu.isInvertible())
    throw SingularS2("conditional-expected Hessian S2 is singular");
  const Eigen::MatrixXd s2_inv = lu.inverse();
  Eigen::MatrixXd cov = (s2_inv * s1 * s2_inv) / nn;
  return 0.5 * (cov + cov.transpose());
}

namespace detail {

inline Eigen::VectorXd initial_theta(const ModelContext& ctx) {
  auto margin_mean = [](const std::vector<double>& y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
  };
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(ctx.spec.num_params());
  const double m1 =
      ctx.spec.eq1.variance.clamp_mean(margin_mean(ctx.data.y1));
  const double m2 =
      ctx.spec.eq2.variance.clamp_mean(margin_mean(ctx.data.y2));
  x0[0] = ctx.spec.eq1.link.link(
      ctx.spec.eq1.link.kind == LinkKind::Log ? std::max(m1, kDomainEps) : m1);
  x0[ctx.spec.eq1.num_params()] = ctx.spec.eq2.link.link(
      ctx.spec.eq2.link.kind == LinkKind::Log ? std::max(m2, kDomainEps) : m2);
  return x0;
}

}  // namespace detail

/// Quasi-maximum likelihood: minimize -Q(theta) with the analytic score
/// (dispersions fixed at 1; they do not move the argmin), then estimate
/// dispersions by method of moments and the covariance by the sandwich.
inline FitResult fit_qmle(const ModelContext& ctx,
                          const OptimOptions& opts = {}) {
  auto objective = [&ctx](const Eigen::VectorXd& th,
                          Eigen::VectorXd* grad) -> double {
    const MeanPath path = mean_path(ctx, th);
    if (grad) *grad = -score(ctx, th, 1.0, 1.0);
    return -quasi_loglik(ctx, path, 1.0, 1.0);
  };

  const OptimResult opt = minimize_bfgs(objective, detail::initial_theta(ctx), opts);

  FitResult fit;
  fit.spec = ctx.spec;
  fit.conditioning = ctx.m;
  fit.path = mean_path(ctx, opt.x);
  fit.convergence = {opt.iterations, opt.grad_norm, opt.status};

  const auto [phi1, phi2] = estimate_dispersion(ctx, fit.path);
  fit.dispersion_degenerate = !(phi1 > 0.0) || !(phi2 > 0.0);
  fit.theta = ParamVector::unflatten(ctx.spec, opt.x, phi1, phi2);
  fit.clamping = ctx.transform_clamped || fit.path.clamped;

  const int d = ctx.spec.num_params();
  if (fit.dispersion_degenerate) {
    // Perfect-fit data: the sandwich is 0/0; report zero uncertainty.
    fit.cov = Eigen::MatrixXd::Zero(d, d);
    fit.qll = quasi_loglik(ctx, fit.path, phi1 > 0.0 ? phi1 : 1.0,
                           phi2 > 0.0 ? phi2 : 1.0);
  } else {
    fit.cov = sandwich_covariance(ctx, opt.x, phi1, phi2);
    fit.qll = quasi_loglik(ctx, fit.path, phi1, phi2);
  }
  fit.se = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.ci.resize(d);
  for (int i = 0; i < d; ++i)
    fit.ci[i] = {opt.x[i] - kNormal975 * fit.se[i],
                 opt.x[i] + kNormal975 * fit.se[i]};
  return fit;
}

struct BootstrapResult {
  Eigen::VectorXd se;                      // SD of estimates over replications
  std::vector<std::array<double, 2>> quantiles;  // empirical 2.5% / 97.5%
  double se_phi1 = 0.0, se_phi2 = 0.0;
  int requested = 0;
  int failed = 0;
};

namespace detail {

inline double type7_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

/// Pseudo-parametric bootstrap: simulate B trajectories from the fitted
/// model under the chosen families, refit each, and summarize the spread of
/// the estimates. Replication b draws from seed base_seed + b, so results
/// are bit-identical for any worker count.
inline BootstrapResult bootstrap_se(const ModelContext& ctx,
                                    const FitResult& fit, int B,
                                    SamplingFamily family1,
                                    SamplingFamily family2,
                                    std::uint64_t base_seed,
                                    int burn_in = 500) {
  if (B < 1) throw InvalidReplicationCount("bootstrap needs B >= 1");

  const int d = ctx.spec.num_params();
  const int n = ctx.n();
  std::vector<Eigen::VectorXd> draws(B);
  std::vector<std::array<double, 2>> phis(B);
  std::vector<char> ok(B, 0);

  parallel_for(B, [&](int b) {
    try {
      Rng rng(base_seed + static_cast<std::uint64_t>(b) + 1);
      const BivariateSeries sim = simulate_trajectory(
          ctx.spec, fit.theta, family1, family2, n, burn_in, rng);
      const ModelContext sim_ctx = validate_spec(ctx.spec, sim, ctx.m);
      const FitResult refit = fit_qmle(sim_ctx);
      draws[b] = refit.theta.flatten(ctx.spec);
      phis[b] = {refit.theta.phi1, refit.theta.phi2};
      ok[b] = 1;
    } catch (const Error&) {
      ok[b] = 0;
    }
  });

  BootstrapResult out;
  out.requested = B;
  for (int b = 0; b < B; ++b)
    if (!ok[b]) ++out.failed;
  if (out.failed > 0.05 * B)
    throw BootstrapFailure(std::to_string(out.failed) + " of " +
                           std::to_string(B) + " replications failed");

  const int good = B - out.failed;
  out.se.resize(d);
  out.quantiles.resize(d);
  std::vector<double> column;
  column.reserve(good);
  for (int j = 0; j < d; ++j) {
    column.clear();
    for (int b = 0; b < B; ++b)
      if (ok[b]) column.push_back(draws[b][j]);
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(good);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    out.se[j] = good > 1 ? std::sqrt(ss / static_cast<double>(good - 1)) : 0.0;
    out.quantiles[j] = {detail::type7_quantile(column, 0.025),
                        detail::type7_quantile(column, 0.975)};
  }

  for (int which = 0; which < 2; ++which) {
    column.clear();
    for (int b = 0; b < B; ++b)
      if (ok[b]) column.push_back(phis[b][which]);
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(good);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd =
        good > 1 ? std::sqrt(ss / static_cast<double>(good - 1)) : 0.0;
    (which == 0 ? out.se_phi1 : out.se_phi2) = sd;
  }
  return out;
}

}  // namespace mixtsql
