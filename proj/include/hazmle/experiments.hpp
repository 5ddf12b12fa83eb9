#pragma once

// Seeded simulation experiments around the estimator: consistency sweeps,
// pointwise rate and touchpoint-gap sweeps with log-log slope fits, and a
// confidence-interval coverage study.  Every replication derives its own
// random stream from (seed, size index, replication index), so results are
// bit-reproducible regardless of execution order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmle/asymptotics.hpp"
#include "hazmle/envelope.hpp"
#include "hazmle/hazard.hpp"
#include "hazmle/hs_distribution.hpp"
#include "hazmle/lifetime_sample.hpp"
#include "hazmle/random.hpp"
#include "hazmle/solver.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

struct ExperimentSpec {
  std::string kind;  // consistency | rate | touchpoints | coverage
  bool truth_is_hs = true;
  double hs_scale = 1.0;  // A
  double hs_shape = 0.0;  // b
  std::string hazard_path;
  std::optional<PiecewiseLinearHazard> truth_hazard;
  std::vector<long long> sizes;
  int replications = 1;
  double x0 = 0;
  bool has_x0 = false;
  std::uint64_t seed = 1;
  // Optional tuning.
  double delta = -1;   // consistency: margin of the evaluation band
  double alpha = 0.05; // coverage: CI level
  double window = -1;  // coverage: curvature window (default derived from n)
  double table_half_width = 6.0;
  double table_step = 0.01;
  int table_replications = 500;
  std::string output;

  void validate() const {
    if (kind != "consistency" && kind != "rate" && kind != "touchpoints" &&
        kind != "coverage") {
      throw std::invalid_argument("unknown experiment kind '" + kind + "'");
    }
    if (sizes.empty()) throw std::invalid_argument("no sample sizes given");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < 1) throw std::invalid_argument("sample sizes must be >= 1");
      if (i > 0 && sizes[i] <= sizes[i - 1]) {
        throw std::invalid_argument("sample sizes must be increasing");
      }
    }
    if (replications < 1) {
      throw std::invalid_argument("replications must be >= 1");
    }
    if (kind != "consistency" && !has_x0) {
      throw std::invalid_argument("experiment kind '" + kind +
                                  "' requires x0");
    }
    if (!(alpha > 0) || !(alpha < 1)) {
      throw std::invalid_argument("alpha must lie in (0, 1)");
    }
    if (!truth_is_hs && !truth_hazard.has_value()) {
      throw std::invalid_argument("hazard truth was not loaded");
    }
  }

  double domain_end() const {
    return truth_is_hs ? hs_scale : truth_hazard->domain_end();
  }

  double true_hazard(double x) const {
    return truth_is_hs ? HsDistribution(hs_scale, hs_shape).hazard(x)
                       : truth_hazard->eval(x);
  }

  double true_hazard_derivative(double x) const {
    return truth_is_hs
               ? HsDistribution(hs_scale, hs_shape).hazard_derivative(x)
               : truth_hazard->right_derivative(x);
  }

  LifetimeSample draw(long long n, std::uint64_t rep_seed) const {
    // Deduplicate on the (measure-zero) chance of equal doubles so one
    // collision cannot invalidate a long sweep.
    if (truth_is_hs) {
      return HsDistribution(hs_scale, hs_shape)
          .sample(static_cast<std::size_t>(n), rep_seed, /*detie=*/true);
    }
    return sample_from_hazard(*truth_hazard, static_cast<std::size_t>(n),
                              rep_seed, /*detie=*/true);
  }
};

struct SummaryRow {
  long long n = 0;
  double median = 0, q1 = 0, q3 = 0;
  int failures = 0;
};

struct ExperimentSummary {
  std::string kind;
  std::vector<SummaryRow> rows;        // primary metric
  std::vector<SummaryRow> deriv_rows;  // rate: slope-error metric
  std::vector<SummaryRow> gap_rows;    // rate/touchpoints: knot-gap metric
  double slope = std::numeric_limits<double>::quiet_NaN();
  double slope_se = std::numeric_limits<double>::quiet_NaN();
  double deriv_slope = std::numeric_limits<double>::quiet_NaN();
  double deriv_slope_se = std::numeric_limits<double>::quiet_NaN();
  double gap_slope = std::numeric_limits<double>::quiet_NaN();
  double gap_slope_se = std::numeric_limits<double>::quiet_NaN();
  double coverage = std::numeric_limits<double>::quiet_NaN();
  int total_failures = 0;
  bool passed = false;
  std::string note;
};

// ---------------------------------------------------------------------------
// Spec file: `key value...` lines, '#' comments.

inline ExperimentSpec parse_experiment_spec(std::istream& is) {
  ExperimentSpec spec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto body = strip_comment(line);
    if (body.empty()) continue;
    auto fields = split_ws(body);
    std::string key(fields[0]);
    auto need = [&](std::size_t k) {
      if (fields.size() < k + 1) {
        throw ParseError("line " + std::to_string(lineno) + ": key '" + key +
                         "' needs " + std::to_string(k) + " value(s)");
      }
    };
    try {
      if (key == "kind") {
        need(1);
        spec.kind = std::string(fields[1]);
      } else if (key == "truth") {
        need(1);
        std::string what(fields[1]);
        if (what == "hs") {
          need(3);
          spec.truth_is_hs = true;
          spec.hs_scale = require_double(fields[2]);
          spec.hs_shape = require_double(fields[3]);
        } else if (what == "hazard") {
          need(2);
          spec.truth_is_hs = false;
          spec.hazard_path = std::string(fields[2]);
        } else {
          throw ParseError("truth must be 'hs A b' or 'hazard FILE'");
        }
      } else if (key == "sizes") {
        need(1);
        spec.sizes.clear();
        for (std::size_t i = 1; i < fields.size(); ++i) {
          spec.sizes.push_back(require_int(fields[i]));
        }
      } else if (key == "replications") {
        need(1);
        spec.replications = static_cast<int>(require_int(fields[1]));
      } else if (key == "x0") {
        need(1);
        spec.x0 = require_double(fields[1]);
        spec.has_x0 = true;
      } else if (key == "seed") {
        need(1);
        spec.seed = static_cast<std::uint64_t>(require_int(fields[1]));
      } else if (key == "delta") {
        need(1);
        spec.delta = require_double(fields[1]);
      } else if (key == "alpha") {
        need(1);
        spec.alpha = require_double(fields[1]);
      } else if (key == "window") {
        need(1);
        spec.window = require_double(fields[1]);
      } else if (key == "table_half_width") {
        need(1);
        spec.table_half_width = require_double(fields[1]);
      } else if (key == "table_step") {
        need(1);
        spec.table_step = require_double(fields[1]);
      } else if (key == "table_replications") {
        need(1);
        spec.table_replications = static_cast<int>(require_int(fields[1]));
      } else if (key == "output") {
        need(1);
        spec.output = std::string(fields[1]);
      } else {
        throw ParseError("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return spec;
}

namespace detail {

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
};

// OLS of log(median) on log(n).
inline SlopeFit loglog_slope(const std::vector<SummaryRow>& rows) {
  const std::size_t m = rows.size();
  if (m < 2) {
    throw std::invalid_argument(
        "log-log regression needs at least two sample sizes");
  }
  double sx = 0, sy = 0;
  std::vector<double> xs(m), ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    xs[i] = std::log(static_cast<double>(rows[i].n));
    ys[i] = std::log(rows[i].median);
    sx += xs[i];
    sy += ys[i];
  }
  double xbar = sx / m, ybar = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  if (m > 2) {
    double rss = 0;
    double intercept = ybar - fit.slope * xbar;
    for (std::size_t i = 0; i < m; ++i) {
      double r = ys[i] - intercept - fit.slope * xs[i];
      rss += r * r;
    }
    fit.se = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

inline SummaryRow summarize(long long n, std::vector<double> values,
                            int failures, int replications) {
  if (failures * 20 > replications) {
    throw std::runtime_error("more than 5% of replications failed at n = " +
                             std::to_string(n));
  }
  if (values.empty()) {
    throw std::runtime_error("no successful replications at n = " +
                             std::to_string(n));
  }
  std::sort(values.begin(), values.end());
  SummaryRow row;
  row.n = n;
  row.failures = failures;
  row.median = quantile_type7(values, 0.5);
  row.q1 = quantile_type7(values, 0.25);
  row.q3 = quantile_type7(values, 0.75);
  return row;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Consistency: median over replications of the sup-error on a central band.

inline ExperimentSummary run_consistency(const ExperimentSpec& spec) {
  spec.validate();
  double t0 = spec.domain_end();
  if (!std::isfinite(t0)) {
    throw std::invalid_argument(
        "consistency experiment requires a truth with finite support");
  }
  double delta = spec.delta > 0 ? spec.delta : 0.1 * t0;
  double lo = delta, hi = t0 - delta;
  if (!(lo < hi)) throw std::invalid_argument("evaluation band is empty");

  ExperimentSummary out;
  out.kind = spec.kind;
  const int grid_n = 512;
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    long long n = spec.sizes[si];
    std::vector<double> sups;
    int failures = 0;
    for (int rep = 0; rep < spec.replications; ++rep) {
      std::uint64_t rs = derive_seed(spec.seed, si, static_cast<std::uint64_t>(rep));
      LifetimeSample sample = spec.draw(n, rs);
      double sup = 0;
      try {
        FitResult fit_res = fit(sample);
        auto err_at = [&](double x) {
          return std::fabs(fit_res.hazard.eval(x) - spec.true_hazard(x));
        };
        for (int gktr = 0; gktr < grid_n; ++gktr) {
          double x = lo + (hi - lo) * gktr / (grid_n - 1);
          sup = std::max(sup, err_at(x));
        }
        for (double b : fit_res.hazard.breakpoints()) {
          if (b >= lo && b <= hi) sup = std::max(sup, err_at(b));
        }
        // The estimate is +inf at and beyond the largest observation; when
        // that point falls inside the band the sup is genuinely infinite and
        // enters the replication set as such (the median absorbs it).
        sups.push_back(sup);
      } catch (const FitFailure&) {
        ++failures;
      }
    }
    out.rows.push_back(detail::summarize(n, std::move(sups), failures,
                                         spec.replications));
    out.total_failures += failures;
  }
  out.passed = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (!(out.rows[i].median < out.rows[i - 1].median)) {
      out.passed = false;
      out.note = "sup-error medians are not strictly decreasing";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pointwise sweep shared by the rate and touchpoint experiments: every fit
// records the value error, the slope error, and the gap between the knots
// bracketing x0.

inline ExperimentSummary run_pointwise(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.sizes.size() < 2) {
    throw std::invalid_argument(
        "log-log regression needs at least two sample sizes");
  }
  double h0 = spec.true_hazard(spec.x0);
  double h0p = spec.true_hazard_derivative(spec.x0);

  ExperimentSummary out;
  out.kind = spec.kind;
  int flagged = 0;
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    long long n = spec.sizes[si];
    std::vector<double> errs, derrs, gaps;
    int failures = 0;
    for (int rep = 0; rep < spec.replications; ++rep) {
      std::uint64_t rs = derive_seed(spec.seed, si, static_cast<std::uint64_t>(rep));
      LifetimeSample sample = spec.draw(n, rs);
      try {
        FitResult fit_res = fit(sample);
        if (spec.x0 >= sample.max_value()) {
          ++failures;
          continue;
        }
        errs.push_back(std::fabs(fit_res.hazard.eval(spec.x0) - h0));
        derrs.push_back(
            std::fabs(fit_res.hazard.right_derivative(spec.x0) - h0p));
        double klo = 0, khi = fit_res.hazard.domain_end();
        bool has_lo = false, has_hi = false;
        for (double b : fit_res.hazard.breakpoints()) {
          if (b <= spec.x0) {
            klo = b;
            has_lo = true;
          } else if (!has_hi) {
            khi = b;
            has_hi = true;
          }
        }
        if (!has_lo || !has_hi) ++flagged;
        gaps.push_back(khi - klo);
      } catch (const FitFailure&) {
        ++failures;
      }
    }
    out.rows.push_back(detail::summarize(n, errs, failures, spec.replications));
    out.deriv_rows.push_back(
        detail::summarize(n, derrs, failures, spec.replications));
    out.gap_rows.push_back(
        detail::summarize(n, gaps, failures, spec.replications));
    out.total_failures += failures;
  }
  auto f1 = detail::loglog_slope(out.rows);
  auto f2 = detail::loglog_slope(out.deriv_rows);
  auto f3 = detail::loglog_slope(out.gap_rows);
  out.slope = f1.slope;
  out.slope_se = f1.se;
  out.deriv_slope = f2.slope;
  out.deriv_slope_se = f2.se;
  out.gap_slope = f3.slope;
  out.gap_slope_se = f3.se;
  if (flagged > 0) {
    out.note = std::to_string(flagged) +
               " replication(s) used a domain endpoint as a bracketing knot";
  }
  if (spec.kind == "touchpoints") {
    out.passed = out.gap_slope >= -0.3 && out.gap_slope <= -0.1;
    if (!out.passed) out.note = "gap slope outside [-0.3, -0.1]";
  } else {
    bool v = out.slope >= -0.5 && out.slope <= -0.3;
    bool d = out.deriv_slope >= -0.3 && out.deriv_slope <= -0.1;
    out.passed = v && d;
    if (!v) out.note = "value-error slope outside [-0.5, -0.3]";
    if (!d) out.note += std::string(out.note.empty() ? "" : "; ") +
                        "slope-error slope outside [-0.3, -0.1]";
  }
  return out;
}

inline ExperimentSummary run_rate(const ExperimentSpec& spec) {
  return run_pointwise(spec);
}

inline ExperimentSummary run_touchpoints(const ExperimentSpec& spec) {
  return run_pointwise(spec);
}

// ---------------------------------------------------------------------------
// Coverage of the value confidence interval with fully plugged-in constants.

inline ExperimentSummary run_coverage(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.sizes.size() != 1) {
    throw std::invalid_argument("coverage experiment uses exactly one size");
  }
  long long n = spec.sizes[0];
  double truth = spec.true_hazard(spec.x0);

  EnvelopeConfig ecfg;
  ecfg.half_width = spec.table_half_width;
  ecfg.step = spec.table_step;
  ecfg.replications = spec.table_replications;
  ecfg.levels = {spec.alpha / 2, 0.5, 1 - spec.alpha / 2};
  ecfg.seed = derive_seed(spec.seed, 1000, 0);
  QuantileTable table = quantile_table(ecfg);

  double base_window = spec.window > 0 ? spec.window
                                       : default_curvature_window(n);
  int covered = 0, succeeded = 0, failures = 0;
  std::vector<double> widths;
  for (int rep = 0; rep < spec.replications; ++rep) {
    std::uint64_t rs = derive_seed(spec.seed, 0, static_cast<std::uint64_t>(rep));
    LifetimeSample sample = spec.draw(n, rs);
    try {
      FitResult fit_res = fit(sample);
      if (spec.x0 >= sample.max_value()) {
        ++failures;
        continue;
      }
      const PiecewiseLinearHazard& h = fit_res.hazard;
      // Clamp the curvature window inside the fitted domain, then widen on
      // ill-posed (too few segments) or nonconvex local fits.
      auto clamp_window = [&](double w) {
        double cap = 0.9 * std::min(spec.x0, h.domain_end() - spec.x0);
        return std::min(w, cap);
      };
      double window = clamp_window(base_window);
      double curv = 0;
      bool have_curv = false;
      for (int attempt = 0; attempt < 4; ++attempt) {
        try {
          curv = curvature_estimate(h, spec.x0, window);
          if (curv > 0) {
            have_curv = true;
            break;
          }
        } catch (const IllPosedError&) {
        }
        double widened = clamp_window(window * 1.5);
        if (widened <= window) break;
        window = widened;
      }
      if (!have_curv) {
        ++failures;
        continue;
      }
      LocalParams p;
      p.x0 = spec.x0;
      p.h = h.eval(spec.x0);
      p.hp = h.right_derivative(spec.x0);
      p.hpp = curv;
      p.S = std::exp(-h.cumhaz(spec.x0));
      ConfidenceIntervals ci = confidence_interval(
          p.h, p.hp, p, n, table, spec.alpha);
      ++succeeded;
      widths.push_back(ci.h_upper - ci.h_lower);
      if (truth >= ci.h_lower && truth <= ci.h_upper) ++covered;
    } catch (const FitFailure&) {
      ++failures;
    }
  }
  ExperimentSummary out;
  out.kind = spec.kind;
  out.total_failures = failures;
  out.rows.push_back(detail::summarize(n, widths, failures, spec.replications));
  out.coverage = succeeded > 0
                     ? static_cast<double>(covered) / succeeded
                     : std::numeric_limits<double>::quiet_NaN();
  out.passed = std::fabs(out.coverage - (1 - spec.alpha)) <= 0.04;
  if (!out.passed) {
    out.note = "empirical coverage " + format_double(out.coverage) +
               " differs from target by more than 4 points";
  }
  return out;
}

inline ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.kind == "consistency") return run_consistency(spec);
  if (spec.kind == "rate") return run_rate(spec);
  if (spec.kind == "touchpoints") return run_touchpoints(spec);
  return run_coverage(spec);
}

// ---------------------------------------------------------------------------
// Output: '#' metadata echo, then a delimited table.

inline void write_summary(std::ostream& os, const ExperimentSpec& spec,
                          const ExperimentSummary& sum) {
  os << "# experiment " << sum.kind << "\n";
  if (spec.truth_is_hs) {
    os << "# truth hs " << format_double(spec.hs_scale) << " "
       << format_double(spec.hs_shape) << "\n";
  } else {
    os << "# truth hazard " << spec.hazard_path << "\n";
  }
  os << "# sizes";
  for (long long n : spec.sizes) os << " " << n;
  os << "\n";
  os << "# replications " << spec.replications << "\n";
  if (spec.has_x0) os << "# x0 " << format_double(spec.x0) << "\n";
  os << "# seed " << spec.seed << "\n";
  if (std::isfinite(sum.slope)) {
    os << "# slope " << format_double(sum.slope) << "\n";
    os << "# slope_se " << format_double(sum.slope_se) << "\n";
  }
  if (std::isfinite(sum.deriv_slope)) {
    os << "# deriv_slope " << format_double(sum.deriv_slope) << "\n";
    os << "# deriv_slope_se " << format_double(sum.deriv_slope_se) << "\n";
  }
  if (std::isfinite(sum.gap_slope)) {
    os << "# gap_slope " << format_double(sum.gap_slope) << "\n";
    os << "# gap_slope_se " << format_double(sum.gap_slope_se) << "\n";
  }
  if (std::isfinite(sum.coverage)) {
    os << "# coverage " << format_double(sum.coverage) << "\n";
    os << "# alpha " << format_double(spec.alpha) << "\n";
  }
  os << "# failures " << sum.total_failures << "\n";
  os << "# passed " << (sum.passed ? "true" : "false") << "\n";
  if (!sum.note.empty()) os << "# note " << sum.note << "\n";

  bool pointwise = !sum.deriv_rows.empty();
  if (sum.kind == "consistency") {
    os << "n,sup_err_median,sup_err_q1,sup_err_q3,failures\n";
  } else if (sum.kind == "coverage") {
    os << "n,width_median,width_q1,width_q3,failures\n";
  } else if (pointwise) {
    os << "n,err_median,err_q1,err_q3,deriv_median,deriv_q1,deriv_q3,"
          "gap_median,gap_q1,gap_q3,failures\n";
  }
  for (std::size_t i = 0; i < sum.rows.size(); ++i) {
    const SummaryRow& r = sum.rows[i];
    os << r.n << "," << format_double(r.median) << "," << format_double(r.q1)
       << "," << format_double(r.q3);
    if (pointwise && i < sum.deriv_rows.size() && i < sum.gap_rows.size()) {
      const SummaryRow& d = sum.deriv_rows[i];
      const SummaryRow& g = sum.gap_rows[i];
      os << "," << format_double(d.median) << "," << format_double(d.q1)
         << "," << format_double(d.q3) << "," << format_double(g.median)
         << "," << format_double(g.q1) << "," << format_double(g.q3);
    }
    os << "," << r.failures << "\n";
  }
}

}  // namespace hazmle
