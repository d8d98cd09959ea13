#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mixtsql/errors.hpp"

namespace mixtsql {

// Boundary guard for means/observations clamped into a variance function's
// positive domain.
inline constexpr double kDomainEps = 1e-6;
// Inverse links saturate their argument instead of overflowing, so line
// searches stay finite.
inline constexpr double kLogitArgCap = 35.0;
inline constexpr double kExpArgCap = 30.0;

enum class VarianceKind { Constant, Linear, BernoulliLike, Quadratic };
enum class LinkKind { Logit, Log, Identity };
enum class TransformKind { SameAsLink, LogPlusOne };
enum class SeriesDomain { UnitInterval, NonnegativeCount, PositiveReal, Real };

inline std::string to_string(VarianceKind k) {
  switch (k) {
    case VarianceKind::Constant: return "constant";
    case VarianceKind::Linear: return "linear";
    case VarianceKind::BernoulliLike: return "bernoulli";
    case VarianceKind::Quadratic: return "quadratic";
  }
  return "?";
}

inline std::string to_string(LinkKind k) {
  switch (k) {
    case LinkKind::Logit: return "logit";
    case LinkKind::Log: return "log";
    case LinkKind::Identity: return "identity";
  }
  return "?";
}

inline std::string to_string(SeriesDomain d) {
  switch (d) {
    case SeriesDomain::UnitInterval: return "unit";
    case SeriesDomain::NonnegativeCount: return "count";
    case SeriesDomain::PositiveReal: return "positive";
    case SeriesDomain::Real: return "real";
  }
  return "?";
}

inline VarianceKind parse_variance_kind(const std::string& s) {
  if (s == "constant") return VarianceKind::Constant;
  if (s == "linear") return VarianceKind::Linear;
  if (s == "bernoulli") return VarianceKind::BernoulliLike;
  if (s == "quadratic") return VarianceKind::Quadratic;
  throw InvalidConfig("unknown variance kind: " + s);
}

inline LinkKind parse_link_kind(const std::string& s) {
  if (s == "logit") return LinkKind::Logit;
  if (s == "log") return LinkKind::Log;
  if (s == "identity") return LinkKind::Identity;
  throw InvalidConfig("unknown link kind: " + s);
}

inline SeriesDomain parse_series_domain(const std::string& s) {
  if (s == "unit") return SeriesDomain::UnitInterval;
  if (s == "count") return SeriesDomain::NonnegativeCount;
  if (s == "positive") return SeriesDomain::PositiveReal;
  if (s == "real") return SeriesDomain::Real;
  throw InvalidConfig("unknown series domain: " + s);
}

/// Variance function V(mu); the conditional variance is phi * V(mu).
struct VarianceFunction {
  VarianceKind kind = VarianceKind::Constant;

  double value(double mu) const {
    switch (kind) {
      case VarianceKind::Constant: return 1.0;
      case VarianceKind::Linear: return mu;
      case VarianceKind::BernoulliLike: return mu * (1.0 - mu);
      case VarianceKind::Quadratic: return mu * mu;
    }
    return 1.0;
  }

  // Clamp a mean into the open domain on which V(mu) > 0.
  double clamp_mean(double mu, bool* clamped = nullptr) const {
    double out = mu;
    switch (kind) {
      case VarianceKind::Constant:
        break;
      case VarianceKind::Linear:
      case VarianceKind::Quadratic:
        out = std::max(mu, kDomainEps);
        break;
      case VarianceKind::BernoulliLike:
        out = std::clamp(mu, kDomainEps, 1.0 - kDomainEps);
        break;
    }
    if (clamped && out != mu) *clamped = true;
    return out;
  }
};

/// Link g plus the lag transform T that feeds the linear predictors.
/// T equals g except for count margins, where T(y) = log(y + 1).
struct LinkFunction {
  LinkKind kind = LinkKind::Identity;
  TransformKind transform = TransformKind::SameAsLink;

  double link(double mu) const {
    switch (kind) {
      case LinkKind::Logit: {
        const double x = std::clamp(mu, kDomainEps, 1.0 - kDomainEps);
        return std::log(x / (1.0 - x));
      }
      case LinkKind::Log:
        if (!(mu > 0.0)) throw DomainViolation("log link requires mu > 0");
        return std::log(mu);
      case LinkKind::Identity:
        return mu;
    }
    return mu;
  }

  // Saturating inverse link; NaN predictors are rejected.
  double inverse(double nu) const {
    if (std::isnan(nu)) throw NonFinitePredictor("NaN linear predictor");
    switch (kind) {
      case LinkKind::Logit: {
        const double a = std::clamp(nu, -kLogitArgCap, kLogitArgCap);
        return 1.0 / (1.0 + std::exp(-a));
      }
      case LinkKind::Log:
        return std::exp(std::min(nu, kExpArgCap));
      case LinkKind::Identity:
        return nu;
    }
    return nu;
  }

  double derivative(double mu) const {
    switch (kind) {
      case LinkKind::Logit: return 1.0 / (mu * (1.0 - mu));
      case LinkKind::Log: return 1.0 / mu;
      case LinkKind::Identity: return 1.0;
    }
    return 1.0;
  }

  // T(y): the transformed observation entering lagged terms.
  double transform_obs(double y) const {
    if (std::isnan(y)) throw DomainViolation("NaN observation");
    if (transform == TransformKind::LogPlusOne) {
      if (y < 0.0) throw DomainViolation("log(y+1) transform requires y >= 0");
      return std::log1p(y);
    }
    switch (kind) {
      case LinkKind::Logit:
        if (y < 0.0 || y > 1.0)
          throw DomainViolation("logit transform requires y in [0,1]");
        return link(y);
      case LinkKind::Log:
        if (!(y > 0.0))
          throw DomainViolation("log transform requires y > 0");
        return std::log(y);
      case LinkKind::Identity:
        return y;
    }
    return y;
  }
};

/// One margin of the bivariate model: link/transform, variance function and
/// the (possibly sparse) own/cross lag sets.
struct EquationSpec {
  LinkFunction link;
  VarianceFunction variance;
  std::vector<int> own_lags;    // lags of the equation's own series
  std::vector<int> cross_lags;  // lags of the other series

  int num_params() const {
    return 1 + static_cast<int>(own_lags.size() + cross_lags.size());
  }

  int max_lag() const {
    int m = 0;
    for (int l : own_lags) m = std::max(m, l);
    for (int l : cross_lags) m = std::max(m, l);
    return m;
  }
};

struct ModelSpec {
  EquationSpec eq1;  // bounded/continuous margin in the applications
  EquationSpec eq2;  // count margin in the applications

  // m: conditioning length, the maximum over all lags of both equations.
  int max_lag() const { return std::max(eq1.max_lag(), eq2.max_lag()); }
  int num_params() const { return eq1.num_params() + eq2.num_params(); }
};

/// theta = (theta1, theta2) plus dispersions. Flattening order is fixed:
/// (beta0_1, beta_1 own lags ascending, gamma_1 cross lags ascending,
///  beta0_2, beta_2 own lags ascending, gamma_2 cross lags ascending).
/// Dispersions are nuisance parameters carried alongside, never optimized.
struct ParamVector {
  std::vector<double> beta1;   // intercept + one per eq1.own_lags
  std::vector<double> gamma1;  // one per eq1.cross_lags
  std::vector<double> beta2;   // intercept + one per eq2.own_lags
  std::vector<double> gamma2;  // one per eq2.cross_lags
  double phi1 = 1.0;
  double phi2 = 1.0;

  static ParamVector zeros(const ModelSpec& spec) {
    ParamVector p;
    p.beta1.assign(spec.eq1.own_lags.size() + 1, 0.0);
    p.gamma1.assign(spec.eq1.cross_lags.size(), 0.0);
    p.beta2.assign(spec.eq2.own_lags.size() + 1, 0.0);
    p.gamma2.assign(spec.eq2.cross_lags.size(), 0.0);
    return p;
  }

  bool conforms(const ModelSpec& spec) const {
    return beta1.size() == spec.eq1.own_lags.size() + 1 &&
           gamma1.size() == spec.eq1.cross_lags.size() &&
           beta2.size() == spec.eq2.own_lags.size() + 1 &&
           gamma2.size() == spec.eq2.cross_lags.size();
  }

  Eigen::VectorXd flatten(const ModelSpec& spec) const {
    if (!conforms(spec))
      throw InvalidSpec("parameter vector does not conform to model spec");
    Eigen::VectorXd v(spec.num_params());
    Eigen::Index i = 0;
    for (double x : beta1) v[i++] = x;
    for (double x : gamma1) v[i++] = x;
    for (double x : beta2) v[i++] = x;
    for (double x : gamma2) v[i++] = x;
    return v;
  }

  static ParamVector unflatten(const ModelSpec& spec, const Eigen::VectorXd& v,
                               double phi1 = 1.0, double phi2 = 1.0) {
    if (v.size() != spec.num_params())
      throw InvalidSpec("flattened vector has wrong length for model spec");
    ParamVector p;
    Eigen::Index i = 0;
    p.beta1.resize(spec.eq1.own_lags.size() + 1);
    for (double& x : p.beta1) x = v[i++];
    p.gamma1.resize(spec.eq1.cross_lags.size());
    for (double& x : p.gamma1) x = v[i++];
    p.beta2.resize(spec.eq2.own_lags.size() + 1);
    for (double& x : p.beta2) x = v[i++];
    p.gamma2.resize(spec.eq2.cross_lags.size());
    for (double& x : p.gamma2) x = v[i++];
    p.phi1 = phi1;
    p.phi2 = phi2;
    return p;
  }
};

// Names for the flattened coordinates, e.g. "beta0_1", "beta2_1", "gamma6_2".
inline std::vector<std::string> coefficient_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  names.reserve(spec.num_params());
  names.push_back("beta0_1");
  for (int l : spec.eq1.own_lags) names.push_back("beta" + std::to_string(l) + "_1");
  for (int l : spec.eq1.cross_lags) names.push_back("gamma" + std::to_string(l) + "_1");
  names.push_back("beta0_2");
  for (int l : spec.eq2.own_lags) names.push_back("beta" + std::to_string(l) + "_2");
  for (int l : spec.eq2.cross_lags) names.push_back("gamma" + std::to_string(l) + "_2");
  return names;
}

/// Two aligned observation sequences with per-series domain metadata.
struct BivariateSeries {
  std::vector<double> y1;
  std::vector<double> y2;
  SeriesDomain domain1 = SeriesDomain::Real;
  SeriesDomain domain2 = SeriesDomain::Real;
  std::vector<std::string> labels;  // optional time labels

  std::size_t size() const { return y1.size(); }

  BivariateSeries head(std::size_t n) const {
    BivariateSeries s;
    s.y1.assign(y1.begin(), y1.begin() + n);
    s.y2.assign(y2.begin(), y2.begin() + n);
    s.domain1 = domain1;
    s.domain2 = domain2;
    if (labels.size() >= n) s.labels.assign(labels.begin(), labels.begin() + n);
    return s;
  }
};

namespace detail {

inline bool in_domain(double y, SeriesDomain d) {
  if (std::isnan(y) || std::isinf(y)) return false;
  switch (d) {
    case SeriesDomain::UnitInterval: return y >= 0.0 && y <= 1.0;
    case SeriesDomain::NonnegativeCount:
      return y >= 0.0 && y == std::floor(y);
    case SeriesDomain::PositiveReal: return y > 0.0;
    case SeriesDomain::Real: return true;
  }
  return true;
}

inline void check_lag_set(const std::vector<int>& lags, const char* label) {
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < 1)
      throw InvalidSpec(std::string(label) + ": lags must be >= 1");
    if (i > 0 && lags[i] <= lags[i - 1])
      throw InvalidSpec(std::string(label) +
                        ": lags must be strictly ascending, no duplicates");
  }
}

inline bool link_compatible(LinkKind link, SeriesDomain d) {
  switch (link) {
    case LinkKind::Logit:
      return d == SeriesDomain::UnitInterval;
    case LinkKind::Log:
      return d == SeriesDomain::PositiveReal ||
             d == SeriesDomain::NonnegativeCount ||
             d == SeriesDomain::UnitInterval;
    case LinkKind::Identity:
      return true;
  }
  return false;
}

}  // namespace detail

/// A validated binding of a ModelSpec to data. Precomputes the transformed
/// series and the theta-independent design rows for both equations.
struct ModelContext {
  ModelSpec spec;
  BivariateSeries data;
  int m = 0;  // conditioning length; likelihood terms run over t = m+1..n
  std::vector<double> ty1, ty2;  // transformed series, full length
  Eigen::MatrixXd x1, x2;        // design rows for t = m+1..n
  bool transform_clamped = false;

  int n() const { return static_cast<int>(data.size()); }
  int terms() const { return n() - m; }

  // Same spec/data with a larger conditioning window (used by the Granger
  // test so restricted and unrestricted fits share the same terms).
  ModelContext with_conditioning(int m_override) const;
};

namespace detail {

inline std::vector<double> transform_full(const std::vector<double>& y,
                                          const LinkFunction& link,
                                          bool* clamped) {
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (link.kind == LinkKind::Logit &&
        (y[i] <= kDomainEps || y[i] >= 1.0 - kDomainEps) && y[i] >= 0.0 &&
        y[i] <= 1.0 && clamped)
      *clamped = true;
    out[i] = link.transform_obs(y[i]);
  }
  return out;
}

// Design matrix for one equation: rows t = m+1..n (1-based), columns
// (1, own transformed lags ascending, cross transformed lags ascending).
inline Eigen::MatrixXd build_design(const EquationSpec& eq,
                                    const std::vector<double>& t_own,
                                    const std::vector<double>& t_cross, int m,
                                    int n) {
  const int rows = n - m;
  Eigen::MatrixXd x(rows, eq.num_params());
  for (int i = 0; i < rows; ++i) {
    const int t = m + i;  // 0-based index of time t = m+1+i in 1-based terms
    int c = 0;
    x(i, c++) = 1.0;
    for (int l : eq.own_lags) x(i, c++) = t_own[t - l];
    for (int l : eq.cross_lags) x(i, c++) = t_cross[t - l];
  }
  return x;
}

}  // namespace detail

/// Bind spec to data: checks lag sets, link/domain compatibility, series
/// lengths and element domains; computes m and the design matrices.
inline ModelContext validate_spec(const ModelSpec& spec,
                                  const BivariateSeries& data,
                                  std::optional<int> conditioning = {}) {
  detail::check_lag_set(spec.eq1.own_lags, "eq1.own_lags");
  detail::check_lag_set(spec.eq1.cross_lags, "eq1.cross_lags");
  detail::check_lag_set(spec.eq2.own_lags, "eq2.own_lags");
  detail::check_lag_set(spec.eq2.cross_lags, "eq2.cross_lags");

  for (const EquationSpec* eq : {&spec.eq1, &spec.eq2}) {
    if (eq->link.transform == TransformKind::LogPlusOne &&
        eq->link.kind != LinkKind::Log)
      throw InvalidSpec("log(y+1) transform is only valid with the log link");
  }

  if (data.y1.size() != data.y2.size())
    throw InvalidSpec("series y1 and y2 must have equal length");

  if (!detail::link_compatible(spec.eq1.link.kind, data.domain1))
    throw IncompatibleLinkDomain("eq1 link incompatible with y1 domain " +
                                 to_string(data.domain1));
  if (!detail::link_compatible(spec.eq2.link.kind, data.domain2))
    throw IncompatibleLinkDomain("eq2 link incompatible with y2 domain " +
                                 to_string(data.domain2));

  for (std::size_t i = 0; i < data.y1.size(); ++i) {
    if (!detail::in_domain(data.y1[i], data.domain1))
      throw DomainViolation("y1[" + std::to_string(i) + "] outside domain " +
                            to_string(data.domain1));
    if (!detail::in_domain(data.y2[i], data.domain2))
      throw DomainViolation("y2[" + std::to_string(i) + "] outside domain " +
                            to_string(data.domain2));
  }

  ModelContext ctx;
  ctx.spec = spec;
  ctx.data = data;
  ctx.m = conditioning.value_or(spec.max_lag());
  if (ctx.m < spec.max_lag())
    throw InvalidSpec("conditioning window shorter than the maximum lag");

  const int n = static_cast<int>(data.size());
  if (n <= ctx.m + spec.num_params())
    throw SeriesTooShort("need n > m + number of free parameters (n=" +
                         std::to_string(n) + ", m=" + std::to_string(ctx.m) +
                         ", params=" + std::to_string(spec.num_params()) + ")");

  ctx.ty1 = detail::transform_full(data.y1, spec.eq1.link, &ctx.transform_clamped);
  ctx.ty2 = detail::transform_full(data.y2, spec.eq2.link, &ctx.transform_clamped);
  ctx.x1 = detail::build_design(spec.eq1, ctx.ty1, ctx.ty2, ctx.m, n);
  ctx.x2 = detail::build_design(spec.eq2, ctx.ty2, ctx.ty1, ctx.m, n);
  return ctx;
}

inline ModelContext ModelContext::with_conditioning(int m_override) const {
  return validate_spec(spec, data, m_override);
}

}  // namespace mixtsql
