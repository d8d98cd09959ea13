#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mixtsql/model.hpp"
#include "mixtsql/qlcore.hpp"

namespace mixtsql {

using Rng = std::mt19937_64;

/// Conditional sampling families whose first two moments match the QL
/// mean-variance specifications.
enum class SamplingFamily {
  BetaMeanDispersion,  // Var = phi mu (1-mu), phi in (0,1)
  Poisson,             // Var = mu, phi = 1
  DoublePoisson,       // Var ~ phi mu (Efron), phi > 0
  BoundedAlternative,  // two-component beta mixture, Var = phi mu (1-mu)
};

inline std::string to_string(SamplingFamily f) {
  switch (f) {
    case SamplingFamily::BetaMeanDispersion: return "beta";
    case SamplingFamily::Poisson: return "poisson";
    case SamplingFamily::DoublePoisson: return "double-poisson";
    case SamplingFamily::BoundedAlternative: return "bounded-alternative";
  }
  return "?";
}

inline SamplingFamily parse_sampling_family(const std::string& s) {
  if (s == "beta") return SamplingFamily::BetaMeanDispersion;
  if (s == "poisson") return SamplingFamily::Poisson;
  if (s == "double-poisson") return SamplingFamily::DoublePoisson;
  if (s == "bounded-alternative") return SamplingFamily::BoundedAlternative;
  throw InvalidConfig("unknown sampling family: " + s);
}

inline VarianceKind family_variance_kind(SamplingFamily f) {
  switch (f) {
    case SamplingFamily::BetaMeanDispersion:
    case SamplingFamily::BoundedAlternative:
      return VarianceKind::BernoulliLike;
    case SamplingFamily::Poisson:
    case SamplingFamily::DoublePoisson:
      return VarianceKind::Linear;
  }
  return VarianceKind::Linear;
}

inline SeriesDomain family_domain(SamplingFamily f) {
  switch (f) {
    case SamplingFamily::BetaMeanDispersion:
    case SamplingFamily::BoundedAlternative:
      return SeriesDomain::UnitInterval;
    case SamplingFamily::Poisson:
    case SamplingFamily::DoublePoisson:
      return SeriesDomain::NonnegativeCount;
  }
  return SeriesDomain::Real;
}

namespace detail {

inline double sample_beta_ab(double a, double b, Rng& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  double v = s > 0.0 ? x / s : 0.5;
  return std::clamp(v, 1e-12, 1.0 - 1e-12);
}

}  // namespace detail

/// Beta draw parameterized by mean and dispersion: a = mu (1/phi - 1),
/// b = (1-mu)(1/phi - 1), so E = mu and Var = phi mu (1-mu).
inline double sample_beta_mean_dispersion(double mu, double phi, Rng& rng) {
  if (!(mu > 0.0 && mu < 1.0))
    throw DomainViolation("beta sampler requires mu in (0,1)");
  if (!(phi > 0.0 && phi < 1.0))
    throw DomainViolation("beta sampler requires phi in (0,1)");
  const double precision = 1.0 / phi - 1.0;
  return detail::sample_beta_ab(mu * precision, (1.0 - mu) * precision, rng);
}

/// Tabulated Efron double-Poisson pmf with mean ~ mu and variance ~ phi mu.
/// The pmf is normalized numerically over 0..y_max and sampled by inverse
/// CDF, so CDF and quantiles come for free.
class DoublePoissonTable {
 public:
  DoublePoissonTable(double mu, double phi) : mu_(mu), phi_(phi) {
    if (!(mu > 0.0))
      throw DomainViolation("double-Poisson requires mu > 0");
    if (!(phi > 0.0))
      throw DomainViolation("double-Poisson requires phi > 0");
    const double y_max_d = std::ceil(mu * (1.0 + phi) * 10.0 + 100.0);
    if (y_max_d > 2e7)
      throw TruncationInsufficient(
          "double-Poisson mean too large to tabulate (mu=" +
          std::to_string(mu) + ")");
    const int y_max = static_cast<int>(y_max_d);
    const double theta = 1.0 / phi;

    auto log_pmf = [&](int y) {
      if (y == 0) return 0.5 * std::log(theta) - theta * mu;
      const double yd = static_cast<double>(y);
      return 0.5 * std::log(theta) - theta * mu - yd + yd * std::log(yd) -
             std::lgamma(yd + 1.0) +
             theta * yd * (1.0 + std::log(mu) - std::log(yd));
    };

    std::vector<double> logs(y_max + 1);
    double max_log = -1e300;
    for (int y = 0; y <= y_max; ++y) {
      logs[y] = log_pmf(y);
      max_log = std::max(max_log, logs[y]);
    }
    pmf_.resize(y_max + 1);
    double total = 0.0;
    for (int y = 0; y <= y_max; ++y) {
      pmf_[y] = std::exp(logs[y] - max_log);
      total += pmf_[y];
    }

    // Geometric bound on the truncated tail mass.
    const double f1 = std::exp(log_pmf(y_max + 1) - max_log);
    const double f2 = std::exp(log_pmf(y_max + 2) - max_log);
    const double ratio = f1 > 0.0 ? f2 / f1 : 0.0;
    const double tail = ratio < 1.0 ? f1 / (1.0 - ratio) : 1e300;
    if (tail / total > 1e-10)
      throw TruncationInsufficient("double-Poisson tail mass beyond y_max");

    cdf_.resize(y_max + 1);
    double acc = 0.0;
    for (int y = 0; y <= y_max; ++y) {
      pmf_[y] /= total;
      acc += pmf_[y];
      cdf_[y] = acc;
    }
    cdf_.back() = 1.0;
  }

  double mean() const { return mu_; }
  double dispersion() const { return phi_; }
  int support_max() const { return static_cast<int>(pmf_.size()) - 1; }

  double pmf(int y) const {
    return (y < 0 || y > support_max()) ? 0.0 : pmf_[y];
  }

  double cdf(double y) const {
    if (y < 0.0) return 0.0;
    const int k = std::min(static_cast<int>(std::floor(y)), support_max());
    return cdf_[k];
  }

  /// Smallest y with CDF(y) >= q.
  int quantile(double q) const {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), q);
    return it == cdf_.end() ? support_max()
                            : static_cast<int>(it - cdf_.begin());
  }

  int sample(Rng& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    return quantile(u01(rng));
  }

 private:
  double mu_, phi_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

inline double sample_double_poisson(double mu, double phi, Rng& rng) {
  return static_cast<double>(DoublePoissonTable(mu, phi).sample(rng));
}

namespace detail {

// Moment-matched two-component beta mixture on (0,1): components at
// mu +- delta with a shared component dispersion chosen so the mixture
// mean is mu and variance is phi mu (1-mu). A deliberately non-beta law
// for misspecification experiments.
struct BoundedAlternativeParams {
  double mu_lo, mu_hi, phi_component;
};

inline BoundedAlternativeParams bounded_alternative_params(double mu,
                                                           double phi) {
  if (!(mu > 0.0 && mu < 1.0))
    throw DomainViolation("bounded-alternative sampler requires mu in (0,1)");
  if (!(phi > 0.0 && phi < 1.0))
    throw DomainViolation("bounded-alternative sampler requires phi in (0,1)");
  const double v = phi * mu * (1.0 - mu);
  double delta = std::min(std::sqrt(0.5 * v), 0.5 * std::min(mu, 1.0 - mu));
  const double base = mu * (1.0 - mu) - delta * delta;
  const double phi_c = (v - delta * delta) / base;
  return {mu - delta, mu + delta, phi_c};
}

}  // namespace detail

inline double sample_bounded_alternative(double mu, double phi, Rng& rng) {
  const auto p = detail::bounded_alternative_params(mu, phi);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double m = u01(rng) < 0.5 ? p.mu_lo : p.mu_hi;
  const double precision = 1.0 / p.phi_component - 1.0;
  return detail::sample_beta_ab(m * precision, (1.0 - m) * precision, rng);
}

inline double sample_family(SamplingFamily family, double mu, double phi,
                            Rng& rng) {
  switch (family) {
    case SamplingFamily::BetaMeanDispersion:
      return sample_beta_mean_dispersion(mu, phi, rng);
    case SamplingFamily::Poisson: {
      // Var = mu by definition; the dispersion argument is ignored, which
      // lets a Poisson bootstrap run against a fitted phi near one.
      if (!(mu > 0.0)) throw DomainViolation("Poisson requires mu > 0");
      std::poisson_distribution<long> pois(mu);
      return static_cast<double>(pois(rng));
    }
    case SamplingFamily::DoublePoisson:
      return sample_double_poisson(mu, phi, rng);
    case SamplingFamily::BoundedAlternative:
      return sample_bounded_alternative(mu, phi, rng);
  }
  throw InvalidConfig("unknown sampling family");
}

/// Iterate the conditional-mean recursions forward, drawing the two margins
/// independently given the past. Transformed lags before the start are zero;
/// the first burn_in steps are discarded.
inline BivariateSeries simulate_trajectory(const ModelSpec& spec,
                                           const ParamVector& params,
                                           SamplingFamily family1,
                                           SamplingFamily family2, int n,
                                           int burn_in, Rng& rng) {
  if (!params.conforms(spec))
    throw InvalidSpec("parameter vector does not conform to model spec");
  if (family_variance_kind(family1) != spec.eq1.variance.kind)
    throw FamilyDomainMismatch("family1 does not match eq1 variance kind");
  if (family_variance_kind(family2) != spec.eq2.variance.kind)
    throw FamilyDomainMismatch("family2 does not match eq2 variance kind");
  if (n < 1) throw InvalidConfig("trajectory length must be >= 1");

  const int total = burn_in + n;
  std::vector<double> y1(total), y2(total), t1(total), t2(total);

  auto predictor = [&](const EquationSpec& eq, const std::vector<double>& own,
                       const std::vector<double>& cross,
                       const std::vector<double>& beta,
                       const std::vector<double>& gamma, int t) {
    double nu = beta[0];
    for (std::size_t j = 0; j < eq.own_lags.size(); ++j) {
      const int idx = t - eq.own_lags[j];
      if (idx >= 0) nu += beta[j + 1] * own[idx];
    }
    for (std::size_t j = 0; j < eq.cross_lags.size(); ++j) {
      const int idx = t - eq.cross_lags[j];
      if (idx >= 0) nu += gamma[j] * cross[idx];
    }
    return nu;
  };

  constexpr double kExplosiveCap = 1e6;
  for (int t = 0; t < total; ++t) {
    const double nu1 =
        predictor(spec.eq1, t1, t2, params.beta1, params.gamma1, t);
    const double nu2 =
        predictor(spec.eq2, t2, t1, params.beta2, params.gamma2, t);
    const double mu1 = spec.eq1.variance.clamp_mean(spec.eq1.link.inverse(nu1));
    const double mu2 = spec.eq2.variance.clamp_mean(spec.eq2.link.inverse(nu2));
    if (!std::isfinite(mu1) || !std::isfinite(mu2) || mu1 > kExplosiveCap ||
        mu2 > kExplosiveCap)
      throw ExplosivePath("conditional mean overflow at t=" +
                          std::to_string(t + 1));

    y1[t] = sample_family(family1, mu1, params.phi1, rng);
    y2[t] = sample_family(family2, mu2, params.phi2, rng);
    t1[t] = spec.eq1.link.transform_obs(y1[t]);
    t2[t] = spec.eq2.link.transform_obs(y2[t]);
  }

  BivariateSeries out;
  out.y1.assign(y1.begin() + burn_in, y1.end());
  out.y2.assign(y2.begin() + burn_in, y2.end());
  out.domain1 = family_domain(family1);
  out.domain2 = family_domain(family2);
  return out;
}

}  // namespace mixtsql
