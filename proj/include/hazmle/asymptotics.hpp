#pragma once

// Local limit theory around a point x0 where the true hazard is strictly
// positive with strictly positive curvature:
//   * the plug-in constants c1, c2 scaling the limit law of the estimator
//     and of its derivative,
//   * confidence intervals built from simulated envelope quantiles,
//   * local quadratic curvature estimation from a fitted hazard,
//   * the two-tangent local flattening h_eps used for minimax lower bounds,
//     its Hellinger separation rate, and the lower-bound constants.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hazmle/envelope.hpp"
#include "hazmle/hazard.hpp"
#include "hazmle/quadrature.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

// Local description of the truth at x0: value, slope, curvature of the
// hazard, and survival probability.
struct LocalParams {
  double x0 = 0;
  double h = 0;    // hazard value, > 0
  double hp = 0;   // hazard slope
  double hpp = 0;  // hazard curvature, > 0
  double S = 0;    // survival probability, in (0, 1]

  void validate() const {
    if (!(x0 > 0) || !std::isfinite(x0) || !(h > 0) || !std::isfinite(h) ||
        !std::isfinite(hp) || !(hpp > 0) || !std::isfinite(hpp) || !(S > 0) ||
        !(S <= 1)) {
      throw std::invalid_argument(
          "local parameters require x0 > 0, h > 0, hpp > 0, 0 < S <= 1");
    }
  }
};

struct LimitConstants {
  double c1 = 0;  // scales the value error at rate n^{-2/5}
  double c2 = 0;  // scales the slope error at rate n^{-1/5}
};

inline LimitConstants limit_constants(const LocalParams& p) {
  p.validate();
  LimitConstants c;
  c.c1 = std::pow(p.h * p.h * p.hpp / (24.0 * p.S * p.S), 0.2);
  c.c2 = std::pow(p.h * p.hpp * p.hpp * p.hpp / (24.0 * 24.0 * 24.0 * p.S),
                  0.2);
  return c;
}

// Lower-bound constants for the two pointwise functionals (value at rate
// n^{2/5}, slope at rate n^{1/5}).
struct MinimaxBounds {
  double t1 = 0;
  double t2 = 0;
};

inline MinimaxBounds minimax_bounds(const LocalParams& p) {
  p.validate();
  MinimaxBounds b;
  const double e = std::exp(1.0);
  b.t1 = 0.25 * std::pow(p.h * std::sqrt(p.hpp) / (p.S * e * 8.0 * std::sqrt(2.0)),
                         0.4);
  b.t2 = 0.25 * std::pow((1.0 / (4.0 * e)) * p.h * p.hpp * p.hpp * p.hpp /
                             (2.0 * p.S),
                         0.2);
  return b;
}

// ---------------------------------------------------------------------------
// Confidence intervals.

struct ConfidenceIntervals {
  double x0 = 0;
  double alpha = 0;
  long long n = 0;
  double h_estimate = 0, h_lower = 0, h_upper = 0;
  double slope_estimate = 0, slope_lower = 0, slope_upper = 0;
  double c1 = 0, c2 = 0;
  // Plug-ins recorded for auditability.
  double curvature = 0;
  double survival = 0;
  double window = 0;
  // Quantile table provenance.
  double table_half_width = 0, table_step = 0;
  int table_replications = 0;
  std::uint64_t table_seed = 0;
};

inline ConfidenceIntervals confidence_interval(double estimate_at_x0,
                                               double slope_at_x0,
                                               const LocalParams& p,
                                               long long n,
                                               const QuantileTable& table,
                                               double alpha) {
  p.validate();
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  if (!(alpha > 0) || !(alpha < 1)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
  if (table.levels.empty()) {
    throw std::invalid_argument("quantile table is empty");
  }
  LimitConstants c = limit_constants(p);
  double q2_lo = table_quantile(table, alpha / 2, false);
  double q2_hi = table_quantile(table, 1 - alpha / 2, false);
  double q3_lo = table_quantile(table, alpha / 2, true);
  double q3_hi = table_quantile(table, 1 - alpha / 2, true);
  double r2 = std::pow(static_cast<double>(n), -0.4);
  double r1 = std::pow(static_cast<double>(n), -0.2);
  ConfidenceIntervals ci;
  ci.x0 = p.x0;
  ci.alpha = alpha;
  ci.n = n;
  ci.h_estimate = estimate_at_x0;
  ci.h_lower = estimate_at_x0 - r2 * c.c1 * q2_hi;
  ci.h_upper = estimate_at_x0 - r2 * c.c1 * q2_lo;
  ci.slope_estimate = slope_at_x0;
  ci.slope_lower = slope_at_x0 - r1 * c.c2 * q3_hi;
  ci.slope_upper = slope_at_x0 - r1 * c.c2 * q3_lo;
  ci.c1 = c.c1;
  ci.c2 = c.c2;
  ci.curvature = p.hpp;
  ci.survival = p.S;
  ci.table_half_width = table.half_width;
  ci.table_step = table.step;
  ci.table_replications = table.replications;
  ci.table_seed = table.seed;
  return ci;
}

inline void write_confidence_intervals(std::ostream& os,
                                       const ConfidenceIntervals& ci) {
  os << "# confidence intervals\n";
  os << "x0 " << format_double(ci.x0) << "\n";
  os << "alpha " << format_double(ci.alpha) << "\n";
  os << "n " << ci.n << "\n";
  os << "h_estimate " << format_double(ci.h_estimate) << "\n";
  os << "h_lower " << format_double(ci.h_lower) << "\n";
  os << "h_upper " << format_double(ci.h_upper) << "\n";
  os << "slope_estimate " << format_double(ci.slope_estimate) << "\n";
  os << "slope_lower " << format_double(ci.slope_lower) << "\n";
  os << "slope_upper " << format_double(ci.slope_upper) << "\n";
  os << "c1 " << format_double(ci.c1) << "\n";
  os << "c2 " << format_double(ci.c2) << "\n";
  os << "curvature " << format_double(ci.curvature) << "\n";
  os << "survival " << format_double(ci.survival) << "\n";
  os << "window " << format_double(ci.window) << "\n";
  os << "table_half_width " << format_double(ci.table_half_width) << "\n";
  os << "table_step " << format_double(ci.table_step) << "\n";
  os << "table_replications " << ci.table_replications << "\n";
  os << "table_seed " << ci.table_seed << "\n";
}

// ---------------------------------------------------------------------------
// Curvature estimation.

// Least-squares quadratic through (xs, ys); returns the coefficients of
// c0 + c1 u + c2 u^2 in the centered/scaled coordinate u = (x - center)/scale.
namespace detail {
inline Eigen::Vector3d quadratic_ls(const std::vector<double>& xs,
                                    const std::vector<double>& ys,
                                    double center, double scale) {
  if (xs.size() != ys.size() || xs.size() < 3) {
    throw std::invalid_argument("quadratic fit needs at least three points");
  }
  Eigen::MatrixXd B(xs.size(), 3);
  Eigen::VectorXd rhs(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double u = (xs[i] - center) / scale;
    B(i, 0) = 1;
    B(i, 1) = u;
    B(i, 2) = u * u;
    rhs(i) = ys[i];
  }
  return B.householderQr().solve(rhs);
}
}  // namespace detail

// Second derivative of the least-squares quadratic through the points.
inline double quadratic_curvature(const std::vector<double>& xs,
                                  const std::vector<double>& ys) {
  double lo = *std::min_element(xs.begin(), xs.end());
  double hi = *std::max_element(xs.begin(), xs.end());
  if (!(hi > lo)) throw std::invalid_argument("degenerate abscissae");
  double center = 0.5 * (lo + hi), scale = 0.5 * (hi - lo);
  Eigen::Vector3d coef = detail::quadratic_ls(xs, ys, center, scale);
  return 2.0 * coef(2) / (scale * scale);
}

inline double default_curvature_window(long long n) {
  return 2.0 * std::pow(static_cast<double>(n), -1.0 / 7.0);
}

// Curvature of the fitted hazard near x0 by a local quadratic fit on a
// dense grid over [x0 - window, x0 + window].
inline double curvature_estimate(const PiecewiseLinearHazard& h, double x0,
                                 double window) {
  if (!(window > 0) || !std::isfinite(window)) {
    throw std::invalid_argument("window must be positive");
  }
  double lo = x0 - window, hi = x0 + window;
  if (!(lo >= 0) || !(hi < h.domain_end())) {
    throw std::invalid_argument("window must lie inside the hazard's domain");
  }
  int segments = 1;
  for (double b : h.breakpoints()) {
    if (b > lo && b < hi) ++segments;
  }
  if (segments < 3) {
    throw IllPosedError(
        "curvature window covers fewer than three hazard segments");
  }
  const int grid = 257;
  std::vector<double> xs(grid), ys(grid);
  for (int i = 0; i < grid; ++i) {
    xs[i] = lo + (hi - lo) * i / (grid - 1);
    ys[i] = h.eval(xs[i]);
  }
  return quadratic_curvature(xs, ys);
}

// ---------------------------------------------------------------------------
// Minimax perturbation calculus.

// A smooth hazard presented by value, derivative, and cumulative integral.
struct SmoothHazard {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> cumulative;
};

// The local flattening of a convex hazard: tangent at x0 - eps*c on
// [x0 - eps*c, x0 - eps], tangent at x0 + eps on [x0 - eps, x0 + eps], the
// original hazard elsewhere.  c is chosen so the two tangent pieces meet
// continuously at x0 - eps; the perturbed hazard is convex with its single
// kink there.
class MinimaxPerturbation {
 public:
  MinimaxPerturbation(SmoothHazard base, double x0, double eps, double c_eps)
      : base_(std::move(base)), x0_(x0), eps_(eps), c_(c_eps) {
    t1_ = x0 - eps * c_;
    t2_ = x0 - eps;
    t3_ = x0 + eps;
    v1_ = base_.value(t1_);
    s1_ = base_.derivative(t1_);
    v3_ = base_.value(t3_);
    s3_ = base_.derivative(t3_);
    H1_ = base_.cumulative(t1_);
    // Closed-form cumulative increments of the two linear pieces.
    double w12 = t2_ - t1_;
    H2_ = H1_ + v1_ * w12 + 0.5 * s1_ * w12 * w12;
    double a2 = v3_ + s3_ * (t2_ - t3_);  // piece-2 value at t2
    double w23 = t3_ - t2_;
    H3_ = H2_ + a2 * w23 + 0.5 * s3_ * w23 * w23;
    H3base_ = base_.cumulative(t3_);
  }

  double x0() const { return x0_; }
  double eps() const { return eps_; }
  double c_eps() const { return c_; }
  double kink() const { return t2_; }
  double support_lo() const { return t1_; }
  double support_hi() const { return t3_; }

  double hazard(double z) const {
    if (z < t1_ || z > t3_) return base_.value(z);
    if (z <= t2_) return v1_ + s1_ * (z - t1_);
    return v3_ + s3_ * (z - t3_);
  }

  double hazard_derivative(double z) const {
    if (z < t1_ || z > t3_) return base_.derivative(z);
    return z <= t2_ ? s1_ : s3_;
  }

  double cumulative(double z) const {
    if (z <= t1_) return base_.cumulative(z);
    if (z <= t2_) {
      double w = z - t1_;
      return H1_ + v1_ * w + 0.5 * s1_ * w * w;
    }
    if (z <= t3_) {
      double a2 = v3_ + s3_ * (t2_ - t3_);
      double w = z - t2_;
      return H2_ + a2 * w + 0.5 * s3_ * w * w;
    }
    return H3_ + (base_.cumulative(z) - H3base_);
  }

  double density(double z) const {
    return std::exp(-cumulative(z)) * hazard(z);
  }

  double base_density(double z) const {
    return std::exp(-base_.cumulative(z)) * base_.value(z);
  }

  // Signed value gap at x0 (the flattening lowers the hazard there by
  // half the curvature times eps^2, to leading order).
  double t1_gap() const { return hazard(x0_) - base_.value(x0_); }
  // Signed slope gap at x0 (raised by curvature times eps).
  double t2_gap() const { return s3_ - base_.derivative(x0_); }

  const SmoothHazard& base() const { return base_; }

 private:
  SmoothHazard base_;
  double x0_, eps_, c_;
  double t1_, t2_, t3_;
  double v1_, s1_, v3_, s3_;
  double H1_, H2_, H3_, H3base_;
};

// Mismatch of the two tangent pieces at x0 - eps as a function of c; the
// junction scale c_eps is its root in c > 1.
namespace detail {
inline double junction_mismatch(const SmoothHazard& h0, double x0, double eps,
                                double c) {
  double a = x0 - eps * c;
  return h0.value(a) + eps * (c - 1.0) * h0.derivative(a) -
         (h0.value(x0 + eps) - 2.0 * eps * h0.derivative(x0 + eps));
}
}  // namespace detail

inline MinimaxPerturbation minimax_perturbation(const SmoothHazard& h0,
                                                double x0, double eps,
                                                double domain_lo = 0.0) {
  if (!(eps > 0) || !std::isfinite(eps)) {
    throw std::invalid_argument("eps must be positive");
  }
  auto psi = [&](double c) {
    return detail::junction_mismatch(h0, x0, eps, c);
  };
  double lo = 1.0;
  if (!(x0 - eps > domain_lo)) {
    throw std::invalid_argument("perturbation interval leaves the domain");
  }
  double hi = 2.0;
  bool bracketed = false;
  for (int i = 0; i < 60; ++i) {
    if (!(x0 - eps * hi > domain_lo)) break;
    if (psi(hi) < 0) {
      bracketed = true;
      break;
    }
    lo = hi;
    hi *= 1.25;
  }
  if (!bracketed) {
    throw std::runtime_error(
        "could not bracket the junction scale c_eps inside the domain");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    if (psi(mid) < 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  double c = 0.5 * (lo + hi);
  return MinimaxPerturbation(h0, x0, eps, c);
}

// Squared Hellinger distance (1/2) int (sqrt f - sqrt g)^2 over [lo, hi],
// with explicit split points for kinks of either density.
inline double hellinger_sq(const std::function<double(double)>& f,
                           const std::function<double(double)>& g, double lo,
                           double hi, double quad_tol,
                           std::vector<double> splits = {}) {
  auto integrand = [&](double z) {
    double fv = std::max(f(z), 0.0);
    double gv = std::max(g(z), 0.0);
    double d = std::sqrt(fv) - std::sqrt(gv);
    return 0.5 * d * d;
  };
  return integrate(integrand, lo, hi, quad_tol, std::move(splits));
}

// Chi-square divergence over eighth: (1/8) int (f-g)^2 / g, locally
// equivalent to the squared Hellinger distance for small perturbations.
inline double chisq_over8(const std::function<double(double)>& f,
                          const std::function<double(double)>& g, double lo,
                          double hi, double quad_tol,
                          std::vector<double> splits = {}) {
  auto integrand = [&](double z) {
    double gv = g(z);
    if (gv <= 0) return 0.0;
    double d = f(z) - gv;
    return 0.125 * d * d / gv;
  };
  return integrate(integrand, lo, hi, quad_tol, std::move(splits));
}

// The Hellinger separation rate constant: H^2(f_eps, f0) = nu0 eps^5 (1+o(1)).
inline double hellinger_rate_constant(const LocalParams& p) {
  p.validate();
  return 0.4 * p.hpp * p.hpp * p.S / p.h;
}

}  // namespace hazmle
