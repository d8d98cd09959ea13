#include "mixtsql/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mixtsql/diagnose.hpp"
#include "mixtsql/mcstudy.hpp"
#include "support/models.hpp"

using namespace mixtsql;

namespace {

std::pair<double, double> sample_moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, ss / n};
}

}  // namespace

TEST(BetaSampler, MomentsMatchTargets) {
  Rng rng(1);
  const double mu = 0.3, phi = 0.1;
  std::vector<double> draws(30000);
  for (double& d : draws) d = sample_beta_mean_dispersion(mu, phi, rng);
  const auto [mean, var] = sample_moments(draws);
  EXPECT_NEAR(mean, mu, 0.005);
  EXPECT_NEAR(var, phi * mu * (1.0 - mu), 0.10 * phi * mu * (1.0 - mu));
}

TEST(BetaSampler, HalfHalfIsSymmetricBetaTwoTwo) {
  // mu = 0.5, phi = 0.2 gives a + b = 1/phi - 1 = 4, i.e. Beta(2,2):
  // mean 1/2, variance (1/4) / 5 = 0.05.
  Rng rng(2);
  std::vector<double> draws(40000);
  for (double& d : draws) d = sample_beta_mean_dispersion(0.5, 0.2, rng);
  const auto [mean, var] = sample_moments(draws);
  EXPECT_NEAR(mean, 0.5, 0.005);
  EXPECT_NEAR(var, 0.05, 0.003);
}

TEST(BetaSampler, DomainGuards) {
  Rng rng(3);
  EXPECT_THROW(sample_beta_mean_dispersion(0.5, 1.0, rng), DomainViolation);
  EXPECT_THROW(sample_beta_mean_dispersion(0.5, 1.5, rng), DomainViolation);
  EXPECT_THROW(sample_beta_mean_dispersion(0.0, 0.2, rng), DomainViolation);
  EXPECT_THROW(sample_beta_mean_dispersion(1.0, 0.2, rng), DomainViolation);
}

TEST(DoublePoisson, UnitDispersionIsExactlyPoisson) {
  const double mu = 4.0;
  const DoublePoissonTable table(mu, 1.0);
  for (int k = 0; k <= 30; ++k) {
    const double poisson =
        std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
    EXPECT_NEAR(table.pmf(k), poisson, 1e-8) << "k=" << k;
  }
}

TEST(DoublePoisson, EmpiricalMomentsTrackTargets) {
  Rng rng(4);
  const double mu = 5.0, phi = 2.0;
  const DoublePoissonTable table(mu, phi);
  std::vector<double> draws(30000);
  for (double& d : draws) d = table.sample(rng);
  const auto [mean, var] = sample_moments(draws);
  EXPECT_NEAR(mean, mu, 0.05 * mu);
  EXPECT_NEAR(var / mean, phi, 0.10 * phi);
}

TEST(DoublePoisson, UnderdispersedCaseAndCdf) {
  const DoublePoissonTable table(6.0, 0.5);
  double mean = 0.0, second = 0.0, total = 0.0;
  for (int k = 0; k <= table.support_max(); ++k) {
    mean += k * table.pmf(k);
    second += static_cast<double>(k) * k * table.pmf(k);
    total += table.pmf(k);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(mean, 6.0, 0.1);
  EXPECT_NEAR(second - mean * mean, 0.5 * 6.0, 0.2);
  EXPECT_DOUBLE_EQ(table.cdf(-1.0), 0.0);
  EXPECT_NEAR(table.cdf(table.support_max()), 1.0, 1e-12);
  EXPECT_EQ(table.quantile(1e-12), 0);
  // Quantile inverts the CDF: smallest y with CDF(y) >= q.
  const int q90 = table.quantile(0.9);
  EXPECT_GE(table.cdf(q90), 0.9);
  if (q90 > 0) EXPECT_LT(table.cdf(q90 - 1), 0.9);
}

TEST(DoublePoisson, DomainGuards) {
  Rng rng(5);
  EXPECT_THROW(sample_double_poisson(0.0, 1.0, rng), DomainViolation);
  EXPECT_THROW(sample_double_poisson(4.0, 0.0, rng), DomainViolation);
}

TEST(BoundedAlternative, MomentMatchedButNotBeta) {
  Rng rng(6);
  const double mu = 0.38, phi = 0.1;
  std::vector<double> draws(40000);
  for (double& d : draws) d = sample_bounded_alternative(mu, phi, rng);
  const auto [mean, var] = sample_moments(draws);
  EXPECT_NEAR(mean, mu, 0.005);
  EXPECT_NEAR(var, phi * mu * (1.0 - mu), 0.10 * phi * mu * (1.0 - mu));

  // The mixture components sit strictly inside (0,1).
  const auto p = detail::bounded_alternative_params(mu, phi);
  EXPECT_GT(p.mu_lo, 0.0);
  EXPECT_LT(p.mu_hi, 1.0);
  EXPECT_GT(p.phi_component, 0.0);
  EXPECT_LT(p.phi_component, 1.0);
}

TEST(Trajectory, ZeroLagsGiveIidDrawsAtInterceptMeans) {
  ModelSpec spec;
  spec.eq1 = testmodels::bounded_eq({}, {});
  spec.eq2 = testmodels::count_eq({}, {});
  ParamVector p = ParamVector::zeros(spec);
  p.beta1 = {0.4};
  p.beta2 = {1.2};
  p.phi1 = 0.2;
  p.phi2 = 1.0;

  Rng rng(7);
  const BivariateSeries s =
      simulate_trajectory(spec, p, SamplingFamily::BetaMeanDispersion,
                          SamplingFamily::Poisson, 20000, 10, rng);
  const auto [m1, v1] = sample_moments(s.y1);
  const auto [m2, v2] = sample_moments(s.y2);
  const double mu1 = 1.0 / (1.0 + std::exp(-0.4));
  const double mu2 = std::exp(1.2);
  EXPECT_NEAR(m1, mu1, 0.01);
  EXPECT_NEAR(m2, mu2, 0.05);
  EXPECT_NEAR(v1, 0.2 * mu1 * (1.0 - mu1), 0.1 * 0.2 * mu1 * (1.0 - mu1));
  EXPECT_NEAR(v2, mu2, 0.1 * mu2);
}

TEST(Trajectory, FamilyKindMustMatchVarianceKind) {
  Rng rng(8);
  EXPECT_THROW(
      simulate_trajectory(testmodels::config1_spec(),
                          testmodels::config1_params(), SamplingFamily::Poisson,
                          SamplingFamily::Poisson, 50, 10, rng),
      FamilyDomainMismatch);
  EXPECT_THROW(simulate_trajectory(testmodels::config1_spec(),
                                   testmodels::config1_params(),
                                   SamplingFamily::BetaMeanDispersion,
                                   SamplingFamily::BetaMeanDispersion, 50, 10,
                                   rng),
               FamilyDomainMismatch);
}

TEST(Trajectory, ExplosiveRecursionIsReported) {
  ModelSpec spec;
  spec.eq1 = testmodels::bounded_eq({}, {});
  spec.eq2 = testmodels::count_eq({1}, {});
  ParamVector p = ParamVector::zeros(spec);
  p.beta1 = {0.0};
  p.beta2 = {2.0, 3.0};  // explosive in the log scale
  p.phi1 = 0.2;
  p.phi2 = 1.0;
  Rng rng(9);
  EXPECT_THROW(simulate_trajectory(spec, p, SamplingFamily::BetaMeanDispersion,
                                   SamplingFamily::Poisson, 200, 0, rng),
               ExplosivePath);
}

TEST(Trajectory, DeterministicGivenSeed) {
  Rng a(123), b(123);
  const BivariateSeries s1 = simulate_trajectory(
      testmodels::config1_spec(), testmodels::config1_params(),
      SamplingFamily::BetaMeanDispersion, SamplingFamily::Poisson, 200, 100, a);
  const BivariateSeries s2 = simulate_trajectory(
      testmodels::config1_spec(), testmodels::config1_params(),
      SamplingFamily::BetaMeanDispersion, SamplingFamily::Poisson, 200, 100, b);
  EXPECT_EQ(s1.y1, s2.y1);
  EXPECT_EQ(s1.y2, s2.y2);
}

TEST(Trajectory, Config1CrossCorrelations) {
  // Long-run values cross-checked against an independent re-implementation
  // of the recursion: cor(Y1_t, Y2_{t-1}) ~ -0.14, cor(Y1_{t-1}, Y2_t) ~ -0.42.
  Rng rng(10);
  const BivariateSeries s = simulate_trajectory(
      testmodels::config1_spec(), testmodels::config1_params(),
      SamplingFamily::BetaMeanDispersion, SamplingFamily::Poisson, 30000, 500,
      rng);
  const std::vector<double> cc = ccf(s.y1, s.y2, 2);
  EXPECT_NEAR(cc[2 - 1], -0.14, 0.04);  // h = -1
  EXPECT_NEAR(cc[2 + 1], -0.42, 0.04);  // h = +1
}

TEST(Trajectory, Config2CrossCorrelationsMatchTargets) {
  Rng rng(11);
  const BivariateSeries s = simulate_trajectory(
      testmodels::config2_spec(), testmodels::config2_params(),
      SamplingFamily::BetaMeanDispersion, SamplingFamily::Poisson, 60000, 500,
      rng);
  const std::vector<double> cc = ccf(s.y1, s.y2, 5);
  EXPECT_NEAR(cc[5 + 1], -0.35, 0.04);  // cor(Y1_{t-1}, Y2_t)
  EXPECT_NEAR(cc[5 + 4], 0.16, 0.04);   // cor(Y1_{t-4}, Y2_t)
}

TEST(Trajectory, StationaryConfigurationsDoNotExplode) {
  for (int which = 1; which <= 3; ++which) {
    ModelSpec spec;
    ParamVector p;
    SamplingFamily f1 = SamplingFamily::BetaMeanDispersion;
    if (which == 1) {
      spec = testmodels::config1_spec();
      p = testmodels::config1_params();
    } else if (which == 2) {
      spec = testmodels::config2_spec();
      p = testmodels::config2_params();
    } else {
      spec = testmodels::config3_spec();
      p = testmodels::config3_params();
      f1 = SamplingFamily::BoundedAlternative;
    }
    Rng rng(50 + which);
    EXPECT_NO_THROW(simulate_trajectory(spec, p, f1, SamplingFamily::Poisson,
                                        10000, 500, rng));
  }
}

TEST(McStudy, DeterministicAcrossWorkerCounts) {
  McStudyConfig cfg;
  cfg.model = testmodels::config1_spec();
  cfg.true_params = testmodels::config1_params();
  cfg.n = 100;
  cfg.reps = 12;
  cfg.family1 = SamplingFamily::BetaMeanDispersion;
  cfg.family2 = SamplingFamily::Poisson;
  cfg.base_seed = 77;

  setenv("MIXTSQL_THREADS", "1", 1);
  const McStudyReport serial = run_mc_study(cfg);
  setenv("MIXTSQL_THREADS", "3", 1);
  const McStudyReport parallel = run_mc_study(cfg);
  unsetenv("MIXTSQL_THREADS");

  ASSERT_EQ(serial.replications.size(), parallel.replications.size());
  for (std::size_t r = 0; r < serial.replications.size(); ++r) {
    ASSERT_EQ(serial.replications[r].ok, parallel.replications[r].ok);
    EXPECT_EQ(serial.replications[r].estimate,
              parallel.replications[r].estimate);
  }
  EXPECT_EQ(serial.mean_estimate, parallel.mean_estimate);
  EXPECT_EQ(serial.mc_sd, parallel.mc_sd);
}

TEST(McStudy, SingleReplicationFlagsUndefinedSd) {
  McStudyConfig cfg;
  cfg.model = testmodels::config1_spec();
  cfg.true_params = testmodels::config1_params();
  cfg.n = 100;
  cfg.reps = 1;
  cfg.family1 = SamplingFamily::BetaMeanDispersion;
  cfg.family2 = SamplingFamily::Poisson;
  cfg.base_seed = 5;
  const McStudyReport report = run_mc_study(cfg);
  EXPECT_TRUE(report.sd_undefined);
  EXPECT_EQ(report.failed, 0);
}

TEST(McStudy, EnlargedFitSpecMapsTrueValuesByName) {
  McStudyConfig cfg;
  cfg.model = testmodels::config2_spec();
  cfg.true_params = testmodels::config2_params();
  ModelSpec fit = testmodels::config2_spec();
  fit.eq1.cross_lags = {1, 2, 3, 4, 5, 6};
  fit.eq2.cross_lags = {1, 2, 3, 4, 5, 6};
  cfg.fit_model = fit;
  cfg.n = 150;
  cfg.reps = 2;
  cfg.family1 = SamplingFamily::BetaMeanDispersion;
  cfg.family2 = SamplingFamily::Poisson;
  cfg.base_seed = 11;

  const McStudyReport report = run_mc_study(cfg);
  const auto names = coefficient_names(fit);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j] == "gamma1_1") EXPECT_DOUBLE_EQ(report.true_values[j], -0.5);
    if (names[j] == "gamma4_1") EXPECT_DOUBLE_EQ(report.true_values[j], 0.3);
    if (names[j] == "gamma5_1") EXPECT_DOUBLE_EQ(report.true_values[j], 0.0);
    if (names[j] == "gamma1_2") EXPECT_DOUBLE_EQ(report.true_values[j], -0.2);
    if (names[j] == "gamma6_2") EXPECT_DOUBLE_EQ(report.true_values[j], 0.0);
  }
}
