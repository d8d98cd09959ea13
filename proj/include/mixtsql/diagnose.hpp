#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "mixtsql/estimate.hpp"
#include "mixtsql/model.hpp"
#include "mixtsql/simulate.hpp"

namespace mixtsql {

struct AcfPacf {
  std::vector<double> acf;   // lags 0..max_lag, acf[0] = 1
  std::vector<double> pacf;  // lags 1..max_lag
};

namespace detail {

inline std::pair<double, double> mean_and_scale(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  if (!(ss > 0.0)) throw ConstantSeries("series has zero variance");
  return {mean, ss / n};
}

}  // namespace detail

/// Sample ACF and Durbin-Levinson PACF.
inline AcfPacf acf_pacf(const std::vector<double>& y, int max_lag) {
  const int n = static_cast<int>(y.size());
  if (max_lag < 1 || max_lag >= n)
    throw InvalidConfig("max_lag must satisfy 1 <= max_lag < n");
  const auto [mean, var] = detail::mean_and_scale(y);

  AcfPacf out;
  out.acf.resize(max_lag + 1);
  out.acf[0] = 1.0;
  for (int h = 1; h <= max_lag; ++h) {
    double s = 0.0;
    for (int t = h; t < n; ++t) s += (y[t] - mean) * (y[t - h] - mean);
    out.acf[h] = s / (static_cast<double>(n) * var);
  }

  // Durbin-Levinson on the sample autocorrelations.
  out.pacf.resize(max_lag);
  std::vector<double> prev(max_lag + 1, 0.0), cur(max_lag + 1, 0.0);
  for (int h = 1; h <= max_lag; ++h) {
    double num = out.acf[h];
    double den = 1.0;
    for (int j = 1; j < h; ++j) {
      num -= prev[j] * out.acf[h - j];
      den -= prev[j] * out.acf[j];
    }
    const double phi_hh = den != 0.0 ? num / den : 0.0;
    cur = prev;
    cur[h] = phi_hh;
    for (int j = 1; j < h; ++j) cur[j] = prev[j] - phi_hh * prev[h - j];
    prev = cur;
    out.pacf[h - 1] = phi_hh;
  }
  return out;
}

/// Sample cross-correlation cor(Y1_{t-h}, Y2_t) for h = -max_lag..max_lag.
/// Index into the result with h + max_lag.
inline std::vector<double> ccf(const std::vector<double>& y1,
                               const std::vector<double>& y2, int max_lag) {
  if (y1.size() != y2.size())
    throw InvalidConfig("ccf requires equal-length series");
  const int n = static_cast<int>(y1.size());
  if (max_lag < 1 || max_lag >= n)
    throw InvalidConfig("max_lag must satisfy 1 <= max_lag < n");
  const auto [m1, v1] = detail::mean_and_scale(y1);
  const auto [m2, v2] = detail::mean_and_scale(y2);
  const double scale = static_cast<double>(n) * std::sqrt(v1 * v2);

  std::vector<double> out(2 * max_lag + 1, 0.0);
  for (int h = -max_lag; h <= max_lag; ++h) {
    double s = 0.0;
    const int t_lo = std::max(0, h);
    const int t_hi = std::min(n, n + h);
    for (int t = t_lo; t < t_hi; ++t)
      s += (y1[t - h] - m1) * (y2[t] - m2);
    out[h + max_lag] = s / scale;
  }
  return out;
}

/// Pearson residuals (y - mu-hat) / sqrt(phi-hat V(mu-hat)) for t = m+1..n.
inline std::pair<std::vector<double>, std::vector<double>> residuals(
    const ModelContext& ctx, const FitResult& fit) {
  const int rows = ctx.terms();
  std::vector<double> r1(rows), r2(rows);
  for (int i = 0; i < rows; ++i) {
    const double sd1 = std::sqrt(
        fit.theta.phi1 * ctx.spec.eq1.variance.value(fit.path.mu1[i]));
    const double sd2 = std::sqrt(
        fit.theta.phi2 * ctx.spec.eq2.variance.value(fit.path.mu2[i]));
    r1[i] = sd1 > 0.0 ? (ctx.data.y1[ctx.m + i] - fit.path.mu1[i]) / sd1 : 0.0;
    r2[i] = sd2 > 0.0 ? (ctx.data.y2[ctx.m + i] - fit.path.mu2[i]) / sd2 : 0.0;
  }
  return {std::move(r1), std::move(r2)};
}

struct PitHistogram {
  int bin_count = 10;
  std::vector<double> heights;  // density-scaled; averages to 1
  SamplingFamily reference_family = SamplingFamily::DoublePoisson;
  bool randomized = false;  // construction is the non-randomized one
};

/// PIT histogram under a reference family with parameters (mu_t, phi).
/// Count margins use the non-randomized construction: each observation's
/// CDF segment [F(y-1), F(y)] is spread uniformly across bins. Continuous
/// margins bin F(y_t) directly. y holds the observations of the window
/// (aligned with mu).
inline PitHistogram pit_histogram(const std::vector<double>& y,
                                  const std::vector<double>& mu, double phi,
                                  SamplingFamily family, SeriesDomain domain,
                                  int bin_count = 10) {
  if (bin_count < 2) throw InvalidConfig("bin_count must be >= 2");
  if (y.size() != mu.size())
    throw InvalidConfig("pit: observations and means must align");

  const bool count_family = family == SamplingFamily::Poisson ||
                            family == SamplingFamily::DoublePoisson;
  if (count_family && domain != SeriesDomain::NonnegativeCount)
    throw FamilyDomainMismatch("count reference family on non-count margin");
  if (!count_family && domain != SeriesDomain::UnitInterval)
    throw FamilyDomainMismatch("bounded reference family on non-bounded margin");

  PitHistogram hist;
  hist.bin_count = bin_count;
  hist.reference_family = family;
  hist.heights.assign(bin_count, 0.0);

  const int rows = static_cast<int>(y.size());
  const double width = 1.0 / bin_count;

  for (int i = 0; i < rows; ++i) {
    const double yi = y[i];
    if (count_family) {
      const double fam_phi = family == SamplingFamily::Poisson ? 1.0 : phi;
      const DoublePoissonTable table(mu[i], fam_phi);
      const double hi = table.cdf(yi);
      const double lo = yi >= 1.0 ? table.cdf(yi - 1.0) : 0.0;
      const double seg = hi - lo;
      if (seg <= 0.0) {
        const int b = std::min(bin_count - 1,
                               static_cast<int>(std::floor(hi * bin_count)));
        hist.heights[b] += 1.0;
        continue;
      }
      for (int b = 0; b < bin_count; ++b) {
        const double a = b * width, c = (b + 1) * width;
        const double overlap = std::min(c, hi) - std::max(a, lo);
        if (overlap > 0.0) hist.heights[b] += overlap / seg;
      }
    } else {
      const double precision = 1.0 / phi - 1.0;
      const double u = boost::math::ibeta(
          mu[i] * precision, (1.0 - mu[i]) * precision,
          std::clamp(yi, 1e-12, 1.0 - 1e-12));
      const int b =
          std::min(bin_count - 1, static_cast<int>(std::floor(u * bin_count)));
      hist.heights[b] += 1.0;
    }
  }

  // Density scaling: mean height 1 for a perfectly uniform histogram.
  const double scale = static_cast<double>(bin_count) / rows;
  for (double& h : hist.heights) h *= scale;
  return hist;
}

inline PitHistogram pit(const ModelContext& ctx, const FitResult& fit,
                        int margin, SamplingFamily family, int bin_count = 10) {
  if (margin != 1 && margin != 2) throw InvalidConfig("margin must be 1 or 2");
  const std::vector<double>& full = margin == 1 ? ctx.data.y1 : ctx.data.y2;
  const std::vector<double> window(full.begin() + ctx.m, full.end());
  const std::vector<double>& mu = margin == 1 ? fit.path.mu1 : fit.path.mu2;
  const double phi = margin == 1 ? fit.theta.phi1 : fit.theta.phi2;
  const SeriesDomain domain = margin == 1 ? ctx.data.domain1 : ctx.data.domain2;
  return pit_histogram(window, mu, phi, family, domain, bin_count);
}

}  // namespace mixtsql
