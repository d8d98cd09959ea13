#include "mixtsql/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mixtsql;

namespace {

EquationSpec bounded_eq(std::vector<int> own, std::vector<int> cross) {
  EquationSpec eq;
  eq.link.kind = LinkKind::Logit;
  eq.variance.kind = VarianceKind::BernoulliLike;
  eq.own_lags = std::move(own);
  eq.cross_lags = std::move(cross);
  return eq;
}

EquationSpec count_eq(std::vector<int> own, std::vector<int> cross) {
  EquationSpec eq;
  eq.link.kind = LinkKind::Log;
  eq.link.transform = TransformKind::LogPlusOne;
  eq.variance.kind = VarianceKind::Linear;
  eq.own_lags = std::move(own);
  eq.cross_lags = std::move(cross);
  return eq;
}

BivariateSeries mixed_series(int n, unsigned seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  std::poisson_distribution<int> pois(5);
  BivariateSeries s;
  s.domain1 = SeriesDomain::UnitInterval;
  s.domain2 = SeriesDomain::NonnegativeCount;
  for (int i = 0; i < n; ++i) {
    s.y1.push_back(unif(rng));
    s.y2.push_back(pois(rng));
  }
  return s;
}

}  // namespace

TEST(ModelSpec, ReducedApplicationModelValidates) {
  // Weekly-style data: bounded margin with sparse own lags, count margin
  // with own lag 2 and cross lag 6.
  ModelSpec spec;
  spec.eq1 = bounded_eq({1, 2, 5, 6}, {});
  spec.eq2 = count_eq({2}, {6});

  const BivariateSeries data = mixed_series(112);
  const ModelContext ctx = validate_spec(spec, data);
  EXPECT_EQ(ctx.m, 6);
  EXPECT_EQ(ctx.n(), 112);
  EXPECT_EQ(ctx.terms(), 106);
  EXPECT_EQ(spec.num_params(), 8);
}

TEST(ModelSpec, LogitLinkOnCountDataRejected) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1}, {});
  spec.eq2 = bounded_eq({1}, {});  // logit link, but y2 is count data
  const BivariateSeries data = mixed_series(50);
  EXPECT_THROW(validate_spec(spec, data), IncompatibleLinkDomain);
}

TEST(ModelSpec, SeriesTooShort) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1}, {1});
  spec.eq2 = count_eq({1}, {1});
  EXPECT_THROW(validate_spec(spec, mixed_series(1)), SeriesTooShort);
  // n equal to the conditioning length leaves no usable terms.
  EXPECT_THROW(validate_spec(spec, mixed_series(spec.max_lag())),
               SeriesTooShort);
  // boundary: n must exceed m + number of free parameters
  EXPECT_THROW(validate_spec(spec, mixed_series(1 + spec.num_params())),
               SeriesTooShort);
  EXPECT_NO_THROW(validate_spec(spec, mixed_series(2 + spec.num_params())));
}

TEST(ModelSpec, InterceptOnlyIsAllowed) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({}, {});
  spec.eq2 = count_eq({}, {});
  const ModelContext ctx = validate_spec(spec, mixed_series(10));
  EXPECT_EQ(ctx.m, 0);
  EXPECT_EQ(ctx.spec.num_params(), 2);
}

TEST(ModelSpec, DuplicateOrNonpositiveLagsRejected) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1, 1}, {});
  spec.eq2 = count_eq({1}, {});
  EXPECT_THROW(validate_spec(spec, mixed_series(30)), InvalidSpec);
  spec.eq1 = bounded_eq({0}, {});
  EXPECT_THROW(validate_spec(spec, mixed_series(30)), InvalidSpec);
}

TEST(ModelSpec, LogPlusOneRequiresLogLink) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1}, {});
  spec.eq1.link.transform = TransformKind::LogPlusOne;
  spec.eq2 = count_eq({1}, {});
  EXPECT_THROW(validate_spec(spec, mixed_series(30)), InvalidSpec);
}

TEST(ModelSpec, DomainViolationsDetected) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1}, {});
  spec.eq2 = count_eq({1}, {});
  BivariateSeries data = mixed_series(30);
  data.y2[4] = -1.0;
  EXPECT_THROW(validate_spec(spec, data), DomainViolation);
  data = mixed_series(30);
  data.y2[4] = 2.5;  // not an integer
  EXPECT_THROW(validate_spec(spec, data), DomainViolation);
}

TEST(ModelSpec, ValidateIsIdempotent) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1, 3}, {2});
  spec.eq2 = count_eq({2}, {1});
  const BivariateSeries data = mixed_series(60);
  const ModelContext a = validate_spec(spec, data);
  const ModelContext b = validate_spec(spec, data);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.x1, b.x1);
  EXPECT_EQ(a.x2, b.x2);
  EXPECT_EQ(a.ty1, b.ty1);
}

TEST(ParamVector, FlattenUnflattenRoundTrip) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> lag(1, 6);

  for (int rep = 0; rep < 50; ++rep) {
    ModelSpec spec;
    spec.eq1 = bounded_eq({}, {});
    spec.eq2 = count_eq({}, {});
    auto random_lags = [&](int count) {
      std::vector<int> lags;
      while (static_cast<int>(lags.size()) < count) {
        int l = lag(rng);
        bool dup = false;
        for (int v : lags) dup |= (v == l);
        if (!dup) lags.push_back(l);
      }
      std::sort(lags.begin(), lags.end());
      return lags;
    };
    spec.eq1.own_lags = random_lags(rep % 3);
    spec.eq1.cross_lags = random_lags(rep % 2);
    spec.eq2.own_lags = random_lags((rep + 1) % 3);
    spec.eq2.cross_lags = random_lags((rep + 1) % 2);

    ParamVector p = ParamVector::zeros(spec);
    for (double& v : p.beta1) v = coef(rng);
    for (double& v : p.gamma1) v = coef(rng);
    for (double& v : p.beta2) v = coef(rng);
    for (double& v : p.gamma2) v = coef(rng);

    const Eigen::VectorXd flat = p.flatten(spec);
    const ParamVector q = ParamVector::unflatten(spec, flat);
    EXPECT_EQ(p.beta1, q.beta1);
    EXPECT_EQ(p.gamma1, q.gamma1);
    EXPECT_EQ(p.beta2, q.beta2);
    EXPECT_EQ(p.gamma2, q.gamma2);
    EXPECT_EQ(flat, q.flatten(spec));
  }
}

TEST(ParamVector, FlatteningOrderIsDocumentedOrder) {
  ModelSpec spec;
  spec.eq1 = bounded_eq({1, 3}, {2});
  spec.eq2 = count_eq({2}, {1, 4});

  ParamVector p = ParamVector::zeros(spec);
  p.beta1 = {10, 11, 13};
  p.gamma1 = {22};
  p.beta2 = {30, 32};
  p.gamma2 = {41, 44};
  const Eigen::VectorXd flat = p.flatten(spec);
  const std::vector<double> expected = {10, 11, 13, 22, 30, 32, 41, 44};
  ASSERT_EQ(flat.size(), static_cast<int>(expected.size()));
  for (int i = 0; i < flat.size(); ++i) EXPECT_DOUBLE_EQ(flat[i], expected[i]);

  const auto names = coefficient_names(spec);
  const std::vector<std::string> want = {"beta0_1", "beta1_1", "beta3_1",
                                         "gamma2_1", "beta0_2", "beta2_2",
                                         "gamma1_2", "gamma4_2"};
  EXPECT_EQ(names, want);
}
