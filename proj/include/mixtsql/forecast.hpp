#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "mixtsql/estimate.hpp"
#include "mixtsql/model.hpp"
#include "mixtsql/simulate.hpp"

namespace mixtsql {

struct ForecastPoint {
  int t = 0;  // 1-based index of the forecast target
  double observed = 0.0;
  double point = 0.0;
  double pi_low = 0.0;
  double pi_high = 0.0;
  bool refit_failed = false;  // previous step's parameters were reused
};

struct ForecastRun {
  int initial_train = 0;
  std::vector<ForecastPoint> points;
  std::vector<double> rmfe_path;  // RMFE_H for H = 1..points.size()
  int failed_refits = 0;
};

/// Quantile of a sampling family at (mu, phi). Count families invert the
/// tabulated CDF (smallest y with CDF >= q).
inline double family_quantile(SamplingFamily family, double mu, double phi,
                              double q) {
  switch (family) {
    case SamplingFamily::Poisson:
      return static_cast<double>(DoublePoissonTable(mu, 1.0).quantile(q));
    case SamplingFamily::DoublePoisson:
      return static_cast<double>(DoublePoissonTable(mu, phi).quantile(q));
    case SamplingFamily::BetaMeanDispersion: {
      const double precision = 1.0 / phi - 1.0;
      return boost::math::ibeta_inv(mu * precision, (1.0 - mu) * precision, q);
    }
    case SamplingFamily::BoundedAlternative: {
      const auto p = detail::bounded_alternative_params(mu, phi);
      const double precision = 1.0 / p.phi_component - 1.0;
      auto cdf = [&](double x) {
        return 0.5 * boost::math::ibeta(p.mu_lo * precision,
                                        (1.0 - p.mu_lo) * precision, x) +
               0.5 * boost::math::ibeta(p.mu_hi * precision,
                                        (1.0 - p.mu_hi) * precision, x);
      };
      double lo = 0.0, hi = 1.0;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < q ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
  }
  throw InvalidConfig("unknown sampling family");
}

namespace detail {

inline void append_rmfe(ForecastRun& run) {
  run.rmfe_path.clear();
  run.rmfe_path.reserve(run.points.size());
  double sum_sq = 0.0;
  for (std::size_t h = 0; h < run.points.size(); ++h) {
    const double e = run.points[h].observed - run.points[h].point;
    sum_sq += e * e;
    run.rmfe_path.push_back(std::sqrt(sum_sq / static_cast<double>(h + 1)));
  }
}

// One-step predictor for eq2 at 0-based time index `target`, from the
// transformed full series (lags all lie before `target`).
inline double eq2_predictor(const ModelContext& ctx, const ParamVector& theta,
                            int target) {
  const EquationSpec& eq = ctx.spec.eq2;
  double nu = theta.beta2[0];
  for (std::size_t j = 0; j < eq.own_lags.size(); ++j)
    nu += theta.beta2[j + 1] * ctx.ty2[target - eq.own_lags[j]];
  for (std::size_t j = 0; j < eq.cross_lags.size(); ++j)
    nu += theta.gamma2[j] * ctx.ty1[target - eq.cross_lags[j]];
  return nu;
}

}  // namespace detail

/// Recursive one-step-ahead forecasting of the second margin: fit on the
/// first T observations, forecast t = T+1, extend the window by one,
/// re-estimate, repeat. 95% intervals are the 2.5%/97.5% quantiles of
/// pi_family at (mu-hat, phi2-hat). Failed refits reuse the previous step's
/// parameters and are flagged.
inline ForecastRun osa_forecast(const ModelContext& ctx, int T,
                                SamplingFamily pi_family) {
  const int n = ctx.n();
  if (T <= ctx.spec.max_lag() + ctx.spec.num_params())
    throw InvalidConfig("training window too short for the model");
  if (T >= n) throw InvalidConfig("training window must leave data to forecast");

  ForecastRun run;
  run.initial_train = T;
  std::optional<ParamVector> prev;

  for (int target = T; target < n; ++target) {
    ForecastPoint pt;
    pt.t = target + 1;
    pt.observed = ctx.data.y2[target];

    ParamVector theta;
    try {
      const ModelContext train_ctx =
          validate_spec(ctx.spec, ctx.data.head(target));
      theta = fit_qmle(train_ctx).theta;
    } catch (const Error&) {
      if (!prev) throw;
      theta = *prev;
      pt.refit_failed = true;
      ++run.failed_refits;
    }
    prev = theta;

    const double nu = detail::eq2_predictor(ctx, theta, target);
    const double mu = ctx.spec.eq2.variance.clamp_mean(
        ctx.spec.eq2.link.inverse(nu));
    pt.point = mu;
    pt.pi_low = family_quantile(pi_family, mu, theta.phi2, 0.025);
    pt.pi_high = family_quantile(pi_family, mu, theta.phi2, 0.975);
    run.points.push_back(pt);
  }
  detail::append_rmfe(run);
  return run;
}

/// Benchmark: Gaussian linear autoregression on sqrt-transformed y2 with the
/// same own/cross lag structure (own lags enter as sqrt(y2), cross lags as
/// the transformed series 1). Point forecasts are back-transformed by plain
/// squaring; intervals are normal quantile intervals formed in the sqrt
/// scale and squared (lower end clamped at zero).
inline ForecastRun gaussian_baseline(const ModelContext& ctx, int T) {
  const int n = ctx.n();
  const EquationSpec& eq = ctx.spec.eq2;
  const int d = eq.num_params();
  if (T <= ctx.spec.max_lag() + d)
    throw InvalidConfig("training window too short for the baseline");
  if (T >= n) throw InvalidConfig("training window must leave data to forecast");

  std::vector<double> z(n);
  for (int t = 0; t < n; ++t) {
    if (ctx.data.y2[t] < 0.0)
      throw DomainViolation("sqrt transform requires y2 >= 0");
    z[t] = std::sqrt(ctx.data.y2[t]);
  }

  const int m = ctx.m;
  auto design_row = [&](int t, Eigen::RowVectorXd& row) {
    int c = 0;
    row[c++] = 1.0;
    for (int l : eq.own_lags) row[c++] = z[t - l];
    for (int l : eq.cross_lags) row[c++] = ctx.ty1[t - l];
  };

  ForecastRun run;
  run.initial_train = T;
  Eigen::RowVectorXd row(d);

  for (int target = T; target < n; ++target) {
    const int rows = target - m;
    Eigen::MatrixXd x(rows, d);
    Eigen::VectorXd resp(rows);
    for (int i = 0; i < rows; ++i) {
      design_row(m + i, row);
      x.row(i) = row;
      resp[i] = z[m + i];
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(resp);
    const double rss = (resp - x * beta).squaredNorm();
    const double sigma =
        rows > d ? std::sqrt(rss / static_cast<double>(rows - d)) : 0.0;

    design_row(target, row);
    const double z_hat = row.dot(beta);

    ForecastPoint pt;
    pt.t = target + 1;
    pt.observed = ctx.data.y2[target];
    pt.point = z_hat * z_hat;
    const double lo = std::max(0.0, z_hat - kNormal975 * sigma);
    const double hi = z_hat + kNormal975 * sigma;
    pt.pi_low = lo * lo;
    pt.pi_high = hi * hi;
    run.points.push_back(pt);
  }
  detail::append_rmfe(run);
  return run;
}

}  // namespace mixtsql
