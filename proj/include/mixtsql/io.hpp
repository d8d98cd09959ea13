#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mixtsql/causality.hpp"
#include "mixtsql/estimate.hpp"
#include "mixtsql/forecast.hpp"
#include "mixtsql/mcstudy.hpp"
#include "mixtsql/model.hpp"

namespace mixtsql {

using Json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "0.1.0";

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const Json& config) {
  std::ostringstream hex;
  hex << std::hex << fnv1a64(config.dump());
  return hex.str();
}

// ---------------------------------------------------------------------------
// Model spec / parameter JSON round trip
// ---------------------------------------------------------------------------

inline Json equation_to_json(const EquationSpec& eq) {
  Json j;
  j["link"] = to_string(eq.link.kind);
  j["transform"] =
      eq.link.transform == TransformKind::LogPlusOne ? "log1p" : "same";
  j["variance"] = to_string(eq.variance.kind);
  j["own_lags"] = eq.own_lags;
  j["cross_lags"] = eq.cross_lags;
  return j;
}

inline EquationSpec equation_from_json(const Json& j) {
  EquationSpec eq;
  eq.link.kind = parse_link_kind(j.at("link").get<std::string>());
  const std::string tf = j.value("transform", "same");
  if (tf == "log1p")
    eq.link.transform = TransformKind::LogPlusOne;
  else if (tf == "same")
    eq.link.transform = TransformKind::SameAsLink;
  else
    throw InvalidConfig("unknown transform: " + tf);
  eq.variance.kind = parse_variance_kind(j.at("variance").get<std::string>());
  eq.own_lags = j.value("own_lags", std::vector<int>{});
  eq.cross_lags = j.value("cross_lags", std::vector<int>{});
  return eq;
}

inline Json model_to_json(const ModelSpec& spec) {
  return Json{{"eq1", equation_to_json(spec.eq1)},
              {"eq2", equation_to_json(spec.eq2)}};
}

inline ModelSpec model_from_json(const Json& j) {
  ModelSpec spec;
  spec.eq1 = equation_from_json(j.at("eq1"));
  spec.eq2 = equation_from_json(j.at("eq2"));
  return spec;
}

inline Json params_to_json(const ParamVector& p) {
  return Json{{"beta1", p.beta1},   {"gamma1", p.gamma1},
              {"beta2", p.beta2},   {"gamma2", p.gamma2},
              {"phi1", p.phi1},     {"phi2", p.phi2}};
}

inline ParamVector params_from_json(const Json& j) {
  ParamVector p;
  p.beta1 = j.at("beta1").get<std::vector<double>>();
  p.gamma1 = j.value("gamma1", std::vector<double>{});
  p.beta2 = j.at("beta2").get<std::vector<double>>();
  p.gamma2 = j.value("gamma2", std::vector<double>{});
  p.phi1 = j.value("phi1", 1.0);
  p.phi2 = j.value("phi2", 1.0);
  return p;
}

// ---------------------------------------------------------------------------
// CSV ingestion and serialization
// ---------------------------------------------------------------------------

struct CsvOptions {
  std::string date_col = "date";
  std::string y1_col = "y1";
  std::string y2_col = "y2";
  // Min-max standardize y1 to [0,1] and flip: x -> 1 - standardized(x).
  bool standardize_y1 = false;
  // Aggregate daily rows into weeks: mean for continuous columns, sum for
  // counts. Uses 7-day windows when the date column parses as YYYY-MM-DD,
  // consecutive 7-row blocks otherwise. Trailing partial weeks are dropped.
  bool aggregate_weekly = false;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_number(const std::string& s, int row) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("row " + std::to_string(row) + ": bad number '" + s + "'");
  return v;
}

// Days since civil epoch for YYYY-MM-DD labels; -1 when not a date.
inline long parse_date_days(const std::string& s) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &d) != 3) return -1;
  if (m < 1 || m > 12 || d < 1 || d > 31) return -1;
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

}  // namespace detail

inline BivariateSeries ingest_csv(std::istream& in, SeriesDomain d1,
                                  SeriesDomain d2, const CsvOptions& opts = {}) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = detail::split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError("empty input");

  int idx_date = -1, idx_y1 = -1, idx_y2 = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == opts.date_col) idx_date = static_cast<int>(i);
    if (header[i] == opts.y1_col) idx_y1 = static_cast<int>(i);
    if (header[i] == opts.y2_col) idx_y2 = static_cast<int>(i);
  }
  if (idx_y1 < 0) throw MissingColumn("column '" + opts.y1_col + "' not found");
  if (idx_y2 < 0) throw MissingColumn("column '" + opts.y2_col + "' not found");

  BivariateSeries s;
  s.domain1 = d1;
  s.domain2 = d2;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) <=
        std::max(idx_y1, std::max(idx_y2, idx_date)))
      throw ParseError("row " + std::to_string(row) + ": too few columns");
    s.y1.push_back(detail::parse_number(cells[idx_y1], row));
    s.y2.push_back(detail::parse_number(cells[idx_y2], row));
    s.labels.push_back(idx_date >= 0 ? cells[idx_date]
                                     : std::to_string(row - 1));
  }
  if (s.y1.empty()) throw ParseError("no data rows");

  if (opts.standardize_y1) {
    double lo = s.y1[0], hi = s.y1[0];
    for (double v : s.y1) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw ConstantSeries("cannot standardize a constant column");
    for (double& v : s.y1) v = 1.0 - (v - lo) / (hi - lo);
    s.domain1 = SeriesDomain::UnitInterval;
  }

  if (opts.aggregate_weekly) {
    // Group index per row: 7-day calendar windows when dates parse,
    // else consecutive blocks of seven rows.
    std::vector<long> group(s.y1.size());
    long first_day = detail::parse_date_days(s.labels.empty() ? "" : s.labels[0]);
    bool dated = first_day >= 0;
    for (std::size_t i = 0; dated && i < s.labels.size(); ++i)
      dated = detail::parse_date_days(s.labels[i]) >= 0;
    for (std::size_t i = 0; i < group.size(); ++i)
      group[i] = dated ? (detail::parse_date_days(s.labels[i]) - first_day) / 7
                       : static_cast<long>(i) / 7;

    BivariateSeries weekly;
    weekly.domain1 = s.domain1;
    weekly.domain2 = s.domain2;
    std::size_t i = 0;
    while (i < group.size()) {
      std::size_t j = i;
      while (j < group.size() && group[j] == group[i]) ++j;
      if (j - i == 7) {  // complete weeks only
        double a1 = 0.0, a2 = 0.0;
        for (std::size_t k = i; k < j; ++k) {
          a1 += s.y1[k];
          a2 += s.y2[k];
        }
        weekly.y1.push_back(s.domain1 == SeriesDomain::NonnegativeCount
                                ? a1
                                : a1 / 7.0);
        weekly.y2.push_back(s.domain2 == SeriesDomain::NonnegativeCount
                                ? a2
                                : a2 / 7.0);
        weekly.labels.push_back(s.labels[i]);
      }
      i = j;
    }
    if (weekly.y1.empty())
      throw ParseError("weekly aggregation left no complete weeks");
    s = std::move(weekly);
  }

  for (std::size_t i = 0; i < s.y1.size(); ++i) {
    if (!detail::in_domain(s.y1[i], s.domain1))
      throw DomainViolation("row " + std::to_string(i + 1) + ": y1=" +
                            format_double(s.y1[i]) + " outside domain " +
                            to_string(s.domain1));
    if (!detail::in_domain(s.y2[i], s.domain2))
      throw DomainViolation("row " + std::to_string(i + 1) + ": y2=" +
                            format_double(s.y2[i]) + " outside domain " +
                            to_string(s.domain2));
  }
  return s;
}

inline BivariateSeries ingest_csv_file(const std::string& path, SeriesDomain d1,
                                       SeriesDomain d2,
                                       const CsvOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file: " + path);
  return ingest_csv(in, d1, d2, opts);
}

// Self-describing artifact stamp written as CSV comment lines.
inline void write_csv_stamp(std::ostream& out, const Json& config,
                            std::uint64_t seed) {
  out << "# mixtsql " << kArtifactVersion << " seed=" << seed
      << " config_hash=" << config_hash(config) << "\n";
  out << "# config " << config.dump() << "\n";
}

inline void write_series_csv(std::ostream& out, const BivariateSeries& s,
                             const Json& config, std::uint64_t seed) {
  write_csv_stamp(out, config, seed);
  out << "date,y1,y2\n";
  for (std::size_t i = 0; i < s.y1.size(); ++i) {
    out << (i < s.labels.size() ? s.labels[i] : std::to_string(i + 1)) << ","
        << format_double(s.y1[i]) << "," << format_double(s.y2[i]) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

inline Json fit_to_json(const FitResult& fit) {
  Json j;
  const auto names = coefficient_names(fit.spec);
  const Eigen::VectorXd est = fit.theta.flatten(fit.spec);
  Json coefs = Json::array();
  for (std::size_t i = 0; i < names.size(); ++i) {
    coefs.push_back(Json{{"name", names[i]},
                         {"estimate", est[static_cast<int>(i)]},
                         {"se", fit.se[static_cast<int>(i)]},
                         {"ci", {fit.ci[i][0], fit.ci[i][1]}}});
  }
  j["coefficients"] = coefs;
  j["phi1"] = fit.theta.phi1;
  j["phi2"] = fit.theta.phi2;
  j["qll"] = fit.qll;
  j["conditioning"] = fit.conditioning;
  j["dispersion_degenerate"] = fit.dispersion_degenerate;
  j["clamping"] = fit.clamping;
  const char* status = fit.convergence.status == OptimStatus::Converged
                           ? "converged"
                           : (fit.convergence.status == OptimStatus::MaxIterations
                                  ? "max-iterations"
                                  : "line-search-failed");
  j["convergence"] = Json{{"iterations", fit.convergence.iterations},
                          {"grad_norm", fit.convergence.grad_norm},
                          {"status", status}};
  return j;
}

inline Json granger_to_json(const GrangerTestResult& res) {
  Json j;
  j["qlr"] = res.qlr;
  j["df"] = res.df;
  j["p_value"] = res.p_value;
  j["phi2_used"] = res.phi2_used;
  j["unrestricted"] = fit_to_json(res.unrestricted);
  j["restricted"] = fit_to_json(res.restricted);
  return j;
}

inline void write_mc_study_csv(std::ostream& out, const McStudyReport& report,
                               const Json& config, std::uint64_t seed) {
  write_csv_stamp(out, config, seed);
  out << "rep,coef,true_value,estimate,se_theory,se_boot,ci_excludes_zero\n";
  const int d = static_cast<int>(report.coef_names.size());
  for (const auto& rec : report.replications) {
    if (!rec.ok) continue;
    for (int jx = 0; jx < d; ++jx) {
      out << rec.rep << "," << report.coef_names[jx] << ","
          << format_double(report.true_values[jx]) << ","
          << format_double(rec.estimate[jx]) << ","
          << format_double(rec.se_theory[jx]) << ",";
      if (rec.se_boot.size() == d) out << format_double(rec.se_boot[jx]);
      out << "," << (rec.ci_excludes_zero[jx] ? 1 : 0) << "\n";
    }
  }
}

inline Json mc_study_summary_json(const McStudyReport& report) {
  Json j;
  j["coefficients"] = Json::array();
  for (std::size_t i = 0; i < report.coef_names.size(); ++i) {
    const int jx = static_cast<int>(i);
    Json c{{"name", report.coef_names[i]},
           {"true_value", report.true_values[jx]},
           {"mean_estimate", report.mean_estimate[jx]},
           {"bias", report.bias[jx]},
           {"mc_sd", report.mc_sd[jx]},
           {"mean_se_theory", report.mean_se_theory[jx]},
           {"detection_rate", report.detection_rate[jx]}};
    if (report.mean_se_boot.size() == report.mean_estimate.size())
      c["mean_se_boot"] = report.mean_se_boot[jx];
    j["coefficients"].push_back(c);
  }
  j["replications"] = static_cast<int>(report.replications.size());
  j["failed"] = report.failed;
  j["sd_undefined"] = report.sd_undefined;
  return j;
}

inline void write_forecast_csv(std::ostream& out, const ForecastRun& run,
                               const Json& config, std::uint64_t seed) {
  write_csv_stamp(out, config, seed);
  out << "t,observed,point_forecast,pi_low,pi_high,rmfe,refit_failed\n";
  for (std::size_t i = 0; i < run.points.size(); ++i) {
    const auto& p = run.points[i];
    out << p.t << "," << format_double(p.observed) << ","
        << format_double(p.point) << "," << format_double(p.pi_low) << ","
        << format_double(p.pi_high) << "," << format_double(run.rmfe_path[i])
        << "," << (p.refit_failed ? 1 : 0) << "\n";
  }
}

inline Json forecast_summary_json(const ForecastRun& run) {
  Json j;
  j["initial_train"] = run.initial_train;
  j["steps"] = static_cast<int>(run.points.size());
  j["failed_refits"] = run.failed_refits;
  j["final_rmfe"] = run.rmfe_path.empty() ? 0.0 : run.rmfe_path.back();
  int covered = 0;
  for (const auto& p : run.points)
    covered += (p.observed >= p.pi_low && p.observed <= p.pi_high);
  j["pi_coverage"] =
      run.points.empty()
          ? 0.0
          : static_cast<double>(covered) / static_cast<double>(run.points.size());
  return j;
}

}  // namespace mixtsql
