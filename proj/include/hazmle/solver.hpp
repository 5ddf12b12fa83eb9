#pragma once

// Maximum likelihood estimation of a convex hazard from i.i.d. lifetimes.
//
// The criterion is phi(h) = (1/n) sum_i H(X_(i)) - (1/n) sum_{i<n} log h(X_(i))
// minimized over nonnegative convex h on [0, X_(n)); the largest observation
// contributes no log term because the fitted model places infinite hazard at
// the end of the observed range.  Minimizers are piecewise linear, so phi is
// optimized over nonnegative combinations of a constant, downward hinges
// (tau - t)_+ and upward hinges (t - eta)_+.
//
// Algorithm: support reduction.  Keep a small active set of basis functions,
// solve the smooth inner problem over their weights by damped Newton with
// nonnegativity pivoting, relocate hinge knots to the closed-form stationary
// points of their directional-derivative slack, then scan all candidate
// directions (observations, dyadic midpoints, and per-gap stationary points)
// and admit the most negative violator.  Every integral involved is a
// piecewise polynomial in closed form, and the Newton systems are assembled
// from prefix sums in O(active^2) after an O(n) pass.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmle/characterization.hpp"
#include "hazmle/hazard.hpp"
#include "hazmle/lifetime_sample.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

struct SolverConfig {
  double dd_tol = 1e-8;          // scan tolerance for directional derivatives
  double eq_tol = 1e-8;          // mass-balance residual tolerance
  int max_outer = 500;           // cap on support-changing iterations
  int candidate_refinement = 1;  // dyadic midpoint levels in the scan grid
};

struct FitResult {
  PiecewiseLinearHazard hazard;
  double criterion = 0;
  int iterations = 0;
  double max_violation = 0;  // magnitude of the worst final-scan violation
  CharacterizationReport report;
};

class FitFailure : public std::runtime_error {
 public:
  FitFailure(const std::string& what, FitResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

// ---------------------------------------------------------------------------
// Public functionals.

// The likelihood criterion; +inf when the hazard vanishes at an observation
// that carries a log term.
inline double criterion(const PiecewiseLinearHazard& h,
                        const LifetimeSample& sample) {
  if (h.domain_end() < sample.max_value()) {
    throw std::invalid_argument("hazard domain does not cover the sample");
  }
  const auto& xs = sample.values();
  const std::size_t n = xs.size();
  long double cum = 0;
  for (double x : xs) cum += h.cumhaz(x);
  long double lg = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double hv = h.eval(xs[i]);
    if (hv <= 0) return kInf;
    lg += std::log(static_cast<long double>(hv));
  }
  return static_cast<double>(cum / n - lg / n);
}

struct Direction {
  enum class Kind { constant, dec_hinge, inc_hinge, self };
  Kind kind = Kind::constant;
  double loc = 0;

  static Direction constant() { return {Kind::constant, 0}; }
  static Direction dec_hinge(double x) { return {Kind::dec_hinge, x}; }
  static Direction inc_hinge(double x) { return {Kind::inc_hinge, x}; }
  static Direction self() { return {Kind::self, 0}; }
};

// Derivative of the criterion at h in a feasible perturbation direction:
// the constant, a hinge pinned at loc, or h itself.  Nonnegative values at
// every direction certify optimality; the self direction must vanish.
inline double directional_derivative(const PiecewiseLinearHazard& h,
                                     const LifetimeSample& sample,
                                     const Direction& dir) {
  if (h.domain_end() < sample.max_value()) {
    throw std::invalid_argument("hazard domain does not cover the sample");
  }
  const auto& xs = sample.values();
  const std::size_t n = xs.size();
  const std::size_t m = n - 1;
  auto invh = [&](std::size_t i) { return 1.0 / h.eval(xs[i]); };
  switch (dir.kind) {
    case Direction::Kind::constant: {
      long double acc = 0;
      for (std::size_t i = 0; i < m; ++i) acc += invh(i);
      return sample.total_survival_integral() -
             static_cast<double>(acc / static_cast<long double>(n));
    }
    case Direction::Kind::dec_hinge: {
      if (!(dir.loc >= 0)) throw std::domain_error("hinge location must be >= 0");
      long double acc = 0;
      for (std::size_t i = 0; i < m && xs[i] < dir.loc; ++i) {
        acc += (dir.loc - xs[i]) * static_cast<long double>(invh(i));
      }
      return sample.survival_double_integral(dir.loc, IntegralDirection::forward) -
             static_cast<double>(acc / static_cast<long double>(n));
    }
    case Direction::Kind::inc_hinge: {
      if (!(dir.loc >= 0)) throw std::domain_error("hinge location must be >= 0");
      long double acc = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (xs[i] > dir.loc) {
          acc += (xs[i] - dir.loc) * static_cast<long double>(invh(i));
        }
      }
      return sample.survival_double_integral(dir.loc, IntegralDirection::backward) -
             static_cast<double>(acc / static_cast<long double>(n));
    }
    case Direction::Kind::self: {
      long double cum = 0;
      for (double x : xs) cum += h.cumhaz(x);
      return static_cast<double>(cum / static_cast<long double>(n)) -
             (static_cast<double>(m) / static_cast<double>(n));
    }
  }
  throw std::logic_error("unreachable");
}

// Pointwise envelope on the estimate: 1/int_0^x S_n + 1/int_x^inf S_n.
inline double upper_bound(const LifetimeSample& sample, double x) {
  if (!(x > 0) || !(x < sample.max_value())) {
    throw std::domain_error(
        "upper bound requires 0 < x < largest observation");
  }
  double a = sample.survival_integral(x);
  double abar = sample.total_survival_integral() - a;
  return 1.0 / a + 1.0 / abar;
}

// ---------------------------------------------------------------------------
// Solver internals.

namespace detail {

// Eigenvalue cutoff (relative to a unit diagonal) below which a direction of
// the reduced Hessian is treated as degenerate: curvature steps project it
// out, and the exchange step moves along it one direction at a time.  Hinge
// columns can be exactly collinear at the observations, and a near-duplicate
// hinge pair (a spike) contributes an eigenvalue around the squared relative
// separation of the pair, so the degenerate band must reach well above the
// roundoff floor.
inline constexpr double kEigFloor = 1e-6;

#ifdef HAZMLE_TRACE
inline bool g_trace = false;
#endif

enum class BasisKind { constant, dec, inc };

struct Basis {
  BasisKind kind;
  double loc;  // unused for the constant
};

class SupportSolver {
 public:
  SupportSolver(const LifetimeSample& sample, const SolverConfig& cfg)
      : s_(sample), cfg_(cfg), xs_(sample.values()), n_(xs_.size()),
        m_(n_ - 1) {
    if (!(cfg.dd_tol > 0) || !(cfg.eq_tol > 0) || cfg.max_outer < 1 ||
        cfg.candidate_refinement < 0 || cfg.candidate_refinement > 12) {
      throw std::invalid_argument("invalid solver configuration");
    }
    hv_.resize(m_);
    q0_.assign(m_ + 1, 0);
    q1_.assign(m_ + 1, 0);
    p0_.assign(m_ + 1, 0);
    p1_.assign(m_ + 1, 0);
    p2_.assign(m_ + 1, 0);
    // Knot-stationarity gate: the location residual bounds the knot rows of
    // the optimality certificate, so it is held to the same tolerance as the
    // scan slack.  Polishing still aims an order of magnitude lower.
    loc_tol_ = cfg.dd_tol * std::max(1.0, s_.total_survival_integral());
  }

  void init_default() {
    long double sum = 0;
    for (double x : xs_) sum += x;
    add_basis({BasisKind::constant, 0},
              static_cast<double>(m_) / static_cast<double>(sum));
  }

  void init_from(const PiecewiseLinearHazard& h) {
    if (h.intercept() > 0) add_basis({BasisKind::constant, 0}, h.intercept());
    for (const Knot& k : h.dec_knots()) add_basis({BasisKind::dec, k.loc}, k.weight);
    for (const Knot& k : h.inc_knots()) add_basis({BasisKind::inc, k.loc}, k.weight);
    rebuild();
    for (std::size_t i = 0; i < m_; ++i) {
      if (hv_[i] <= 0) {
        throw std::invalid_argument(
            "initial hazard vanishes at an interior observation");
      }
    }
  }

  // Runs the outer loop; returns true on a certified stop, false when the
  // iteration budget ran out or progress stalled.
  bool run(int& iters_out, double& violation_out) {
    int stall = 0;
    for (int outer = 1; outer <= cfg_.max_outer; ++outer) {
      iters_out = outer;
      inner_solve();
      polish(outer > 4 ? 3 : 1);
      inner_solve();  // re-tighten after the looser polishing passes
      ScanHit hit = scan();
      double self_res = self_residual();
      double locres = location_residual();
      if (hit.min_slack >= -cfg_.dd_tol && std::fabs(self_res) <= cfg_.eq_tol &&
          locres <= loc_tol_) {
        // Converged; record the certificate-grade violation magnitude.
        violation_out = std::max(0.0, -hit.min_slack);
        return true;
      }
      if (hit.min_slack >= -cfg_.dd_tol) {
        // Support is right but knots/weights need more polishing.
        polish(60);
        inner_solve();
        ScanHit again = scan();
        double res2 = location_residual();
        if (again.min_slack >= -cfg_.dd_tol &&
            std::fabs(self_residual()) <= cfg_.eq_tol && res2 <= loc_tol_) {
          violation_out = std::max(0.0, -again.min_slack);
          return true;
        }
        hit = again;
        if (hit.min_slack >= -cfg_.dd_tol) {
          // Polishing alone cannot reach the target; avoid spinning.
          if (++stall >= 3) {
            violation_out = std::max(
                {0.0, -hit.min_slack, res2, std::fabs(self_residual())});
            return false;
          }
          continue;
        }
      }
      if (duplicate_of_active(hit)) {
        if (++stall >= 3) {
          violation_out = std::max(0.0, -hit.min_slack);
          return false;
        }
        continue;
      }
      stall = 0;
      add_basis({hit.kind, hit.loc}, 0.0);
    }
    ScanHit hit = scan();
    violation_out = std::max(0.0, -hit.min_slack);
    return false;
  }

  PiecewiseLinearHazard canonical_hazard() const {
    // The working combination is already a nonnegative sum of a constant,
    // downward hinges and upward hinges; the canonical form additionally
    // requires every downward knot to sit at or below every upward knot.
    // The slope profile is nondecreasing (every kink jump is a positive
    // weight), so it crosses zero once: jumps wholly inside the negative
    // part become downward knots with their exact weights, jumps inside the
    // positive part upward knots, and only the jump straddling the crossing
    // is split using the local slope.  The slope is summed afresh at every
    // kink over just the hinges active there, never as a running total: a
    // running sum would pass through the huge short hinges the estimate uses
    // near tiny observations, and the bits their cancellation drops would
    // contaminate every later weight.  Leftover noise in a local slope is
    // snapped to zero so it cannot mint spurious knots; the intercept is
    // anchored by evaluating the working combination at the bottom of the
    // profile, where the certificate is most sensitive.
    // Upward knots are interior kinks only: a working downward hinge ending
    // exactly at the largest observation leaves a kink there, but the hinge
    // (t - end)+ is identically zero on the estimate's domain, so emitting it
    // would add a knot that changes nothing yet carries certificate rows.
    long double a0 = 0;
    struct Kink {
      double loc;
      long double jump;
    };
    std::vector<Kink> raw;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      const Basis& b = basis_[k];
      if (!(w_[k] > 0)) continue;
      if (b.kind == BasisKind::constant) {
        a0 += static_cast<long double>(w_[k]);
      } else if (b.kind == BasisKind::dec || b.loc > 0) {
        raw.push_back({b.loc, static_cast<long double>(w_[k])});
      }
    }
    std::sort(raw.begin(), raw.end(),
              [](const Kink& a, const Kink& b) { return a.loc < b.loc; });
    std::vector<Kink> kinks;
    for (const Kink& k : raw) {
      if (!kinks.empty() && kinks.back().loc == k.loc) {
        kinks.back().jump += k.jump;
      } else {
        kinks.push_back(k);
      }
    }
    const long double noise = 64 * std::numeric_limits<long double>::epsilon();
    // Slope of the working combination immediately left (at_left) or right of
    // t, with matched up/down magnitudes snapped to zero.
    auto local_slope = [&](double t, bool at_left) {
      long double up = 0, down = 0;
      for (std::size_t k = 0; k < basis_.size(); ++k) {
        const Basis& b = basis_[k];
        if (!(w_[k] > 0)) continue;
        if (b.kind == BasisKind::dec) {
          if (at_left ? b.loc >= t : b.loc > t) down += w_[k];
        } else if (b.kind == BasisKind::inc) {
          if (at_left ? b.loc < t : b.loc <= t) up += w_[k];
        }
      }
      long double s = up - down;
      if (std::fabs(s) <= noise * (up + down)) s = 0;
      return s;
    };
    std::vector<Knot> dec, inc;
    const double edge = xs_.back();
    long double s = local_slope(0.0, false);
    if (s > 0) inc.push_back({0.0, static_cast<double>(s)});
    bool crossed = s >= 0;
    double t_star = 0;
    for (const Kink& k : kinks) {
      const long double before = local_slope(k.loc, true);
      const long double after = local_slope(k.loc, false);
      const bool interior = k.loc < edge;
      if (after <= 0) {
        dec.push_back({k.loc, static_cast<double>(k.jump)});
      } else if (before >= 0) {
        if (interior) inc.push_back({k.loc, static_cast<double>(k.jump)});
      } else {
        dec.push_back({k.loc, static_cast<double>(-before)});
        if (interior) inc.push_back({k.loc, static_cast<double>(after)});
      }
      if (!crossed) {
        t_star = k.loc;
        crossed = after >= 0;
      }
    }
    long double bottom = a0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      const Basis& b = basis_[k];
      if (!(w_[k] > 0) || b.kind == BasisKind::constant) continue;
      long double wgt = w_[k];
      if (b.kind == BasisKind::dec && b.loc > t_star) {
        bottom += wgt * (static_cast<long double>(b.loc) - t_star);
      } else if (b.kind == BasisKind::inc && b.loc < t_star) {
        bottom += wgt * (static_cast<long double>(t_star) - b.loc);
      }
    }
    double intercept = std::max(0.0, static_cast<double>(bottom));
    return PiecewiseLinearHazard(intercept, std::move(dec), std::move(inc),
                                 s_.max_value());
  }

 private:
  struct ScanHit {
    double min_slack = kInf;
    BasisKind kind = BasisKind::constant;
    double loc = 0;
  };

  // --- basis bookkeeping ----------------------------------------------------

  // Every basis function is linear on its support range of reduced
  // observations: g(x) = alpha + beta x on [lo, hi).
  struct Span {
    double alpha, beta;
    std::size_t lo, hi;
  };

  Span span_of(const Basis& b) const {
    switch (b.kind) {
      case BasisKind::constant:
        return {1.0, 0.0, 0, m_};
      case BasisKind::dec:
        return {b.loc, -1.0, 0, idx(b.loc)};
      case BasisKind::inc:
        return {-b.loc, 1.0, idx(b.loc), m_};
    }
    throw std::logic_error("unreachable");
  }

  // #reduced observations <= x.
  std::size_t idx(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(xs_.begin(), xs_.begin() + m_, x) - xs_.begin());
  }

  double linear_coef(const Basis& b) const {
    switch (b.kind) {
      case BasisKind::constant:
        return s_.total_survival_integral();
      case BasisKind::dec:
        return s_.survival_double_integral(b.loc, IntegralDirection::forward);
      case BasisKind::inc:
        return s_.survival_double_integral(b.loc, IntegralDirection::backward);
    }
    throw std::logic_error("unreachable");
  }

  void add_basis(const Basis& b, double weight) {
    basis_.push_back(b);
    w_.push_back(weight);
    c_.push_back(linear_coef(b));
    fresh_ = false;
  }

  void remove_zero_weights(double grad_floor) {
    // Drop coordinates pinned at zero whose gradient does not pull them in.
    std::size_t j = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      bool drop = (w_[k] == 0.0) && (k < grad_.size() ? grad_[k] >= grad_floor
                                                      : true);
      if (!drop) {
        basis_[j] = basis_[k];
        w_[j] = w_[k];
        c_[j] = c_[k];
        if (k < grad_.size()) grad_[j] = grad_[k];
        ++j;
      }
    }
    basis_.resize(j);
    w_.resize(j);
    c_.resize(j);
    if (grad_.size() > j) grad_.resize(j);
  }

  // --- state refresh ---------------------------------------------------------

  void rebuild() {
    std::fill(hv_.begin(), hv_.end(), 0.0);
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (w_[k] == 0) continue;
      Span sp = span_of(basis_[k]);
      for (std::size_t i = sp.lo; i < sp.hi; ++i) {
        hv_[i] += w_[k] * (sp.alpha + sp.beta * xs_[i]);
      }
    }
    long double a0 = 0, a1 = 0, b0 = 0, b1 = 0, b2 = 0;
    const long double invn = 1.0L / static_cast<long double>(n_);
    for (std::size_t i = 0; i < m_; ++i) {
      long double inv = 1.0L / static_cast<long double>(hv_[i]);
      long double inv2 = inv * inv;
      a0 += inv;
      a1 += xs_[i] * inv;
      b0 += inv2;
      b1 += xs_[i] * inv2;
      b2 += xs_[i] * static_cast<long double>(xs_[i]) * inv2;
      q0_[i + 1] = static_cast<double>(a0 * invn);
      q1_[i + 1] = static_cast<double>(a1 * invn);
      p0_[i + 1] = static_cast<double>(b0 * invn);
      p1_[i + 1] = static_cast<double>(b1 * invn);
      p2_[i + 1] = static_cast<double>(b2 * invn);
    }
    fresh_ = true;
  }

  long double phi_of_ld(const std::vector<double>& hv) const {
    long double lg = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (hv[i] <= 0) return std::numeric_limits<long double>::infinity();
      lg += std::log(static_cast<long double>(hv[i]));
    }
    long double lin = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) lin += (long double)c_[k] * w_[k];
    return lin - lg / static_cast<long double>(n_);
  }

  double phi_of(const std::vector<double>& hv) const {
    return static_cast<double>(phi_of_ld(hv));
  }

  std::vector<double> hv_for(const std::vector<double>& w) const {
    std::vector<double> hv(m_, 0.0);
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (w[k] == 0) continue;
      Span sp = span_of(basis_[k]);
      for (std::size_t i = sp.lo; i < sp.hi; ++i) {
        hv[i] += w[k] * (sp.alpha + sp.beta * xs_[i]);
      }
    }
    return hv;
  }

  long double phi_with_ld(const std::vector<double>& w) const {
    std::vector<double> hv = hv_for(w);
    long double lg = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (hv[i] <= 0) return std::numeric_limits<long double>::infinity();
      lg += std::log(static_cast<long double>(hv[i]));
    }
    long double lin = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) lin += (long double)c_[k] * w[k];
    return lin - lg / static_cast<long double>(n_);
  }

  double phi_with(const std::vector<double>& w) const {
    return static_cast<double>(phi_with_ld(w));
  }

  void compute_grad() {
    grad_.resize(basis_.size());
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      Span sp = span_of(basis_[k]);
      double lhs = sp.alpha * (q0_[sp.hi] - q0_[sp.lo]) +
                   sp.beta * (q1_[sp.hi] - q1_[sp.lo]);
      grad_[k] = c_[k] - lhs;
    }
  }

  Eigen::MatrixXd hessian() const {
    const std::size_t K = basis_.size();
    Eigen::MatrixXd H(K, K);
    std::vector<Span> sp(K);
    for (std::size_t k = 0; k < K; ++k) sp[k] = span_of(basis_[k]);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t l = k; l < K; ++l) {
        std::size_t lo = std::max(sp[k].lo, sp[l].lo);
        std::size_t hi = std::min(sp[k].hi, sp[l].hi);
        double v = 0;
        if (lo < hi) {
          double P0 = p0_[hi] - p0_[lo];
          double P1 = p1_[hi] - p1_[lo];
          double P2 = p2_[hi] - p2_[lo];
          v = sp[k].alpha * sp[l].alpha * P0 +
              (sp[k].alpha * sp[l].beta + sp[l].alpha * sp[k].beta) * P1 +
              sp[k].beta * sp[l].beta * P2;
        }
        H(k, l) = v;
        H(l, k) = v;
      }
    }
    return H;
  }

  // --- inner problem: weights for a fixed support -----------------------------

  // Worst first-order violation of the current iterate: |grad| on interior
  // coordinates, only the pull into the cone on coordinates pinned at zero.
  // Magnitude of the steeper one-sided slope of the current working
  // combination at t.  A first-order defect at t propagates into the
  // certificate's cumulative rows multiplied by this slope, so violations
  // are measured in slope-amplified units throughout.
  double slope_amplification(double t) const {
    long double up_l = 0, down_l = 0, up_r = 0, down_r = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      const Basis& b = basis_[k];
      if (!(w_[k] > 0)) continue;
      if (b.kind == BasisKind::dec) {
        if (b.loc >= t) down_l += w_[k];
        if (b.loc > t) down_r += w_[k];
      } else if (b.kind == BasisKind::inc) {
        if (b.loc < t) up_l += w_[k];
        if (b.loc <= t) up_r += w_[k];
      }
    }
    long double s = std::max(std::fabs(up_l - down_l), std::fabs(up_r - down_r));
    return std::max(1.0, static_cast<double>(s));
  }

  // Dimensionless first-order score of the current iterate; the inner loop
  // is converged at score <= 1.  Three requirements are folded in, each
  // normalized by its own budget so that none is needlessly tight:
  //  - plain gradients at 1e-13: cheap for Newton and keeps every direction
  //    honest on the raw scale;
  //  - slope-amplified gradients two decades under the scan gate, so the
  //    inner gate nests inside it and the outer loop never rediscovers an
  //    active direction the inner loop refuses to tighten;
  //  - coefficient-weighted active gradients at 1e-10: the mass-balance
  //    residual equals the weighted sum of active gradients, so a huge short
  //    hinge (weight ~1e6 or more near a tiny observation) must hold a
  //    proportionally smaller gradient.
  // The amplified and weighted products are well scaled -- slope (or weight)
  // times local curvature stays bounded by the total mass -- so their
  // attainable floor does not degrade with spiky estimates.
  double kkt_score() const {
    const double scale = std::max(1.0, s_.total_survival_integral());
    const double ptol = 1e-13 * scale;
    const double atol = 1e-2 * cfg_.dd_tol * scale;
    const double mtol = 1e-10 * scale;
    double v = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      double g = w_[k] == 0 ? std::max(0.0, -grad_[k]) : std::fabs(grad_[k]);
      if (g == 0) continue;
      double amp = basis_[k].kind == BasisKind::constant || basis_[k].loc <= 0
                       ? 1.0
                       : slope_amplification(basis_[k].loc);
      v = std::max(v, g / ptol);
      v = std::max(v, g * amp / atol);
      if (w_[k] > 0) v = std::max(v, g * w_[k] / mtol);
    }
    return v;
  }

  // Moves along d from the current weights; returns true when a step was
  // committed (w_, the tables, and phi are then up to date).  Near the
  // optimum the objective decrements drown in rounding noise, so the first
  // acceptance test is gradient contraction of the full projected step; the
  // backtracking test compares long-double objective values with one ulp of
  // forgiveness.
  bool line_search(const Eigen::VectorXd& d, double gd, long double& phi,
                   double score) {
    const std::size_t K = basis_.size();
    double amax = kInf;
    for (std::size_t k = 0; k < K; ++k) {
      if (d(k) < 0 && w_[k] > 0) amax = std::min(amax, w_[k] / -d(k));
    }
    std::vector<double> trial(K);
    auto fill_trial = [&](double alpha) {
      for (std::size_t k = 0; k < K; ++k) {
        double v = w_[k] + alpha * d(k);
        if (v < 0) v = 0;
        if (alpha == amax && d(k) < 0 && v < 1e-18 * std::fabs(d(k))) v = 0;
        trial[k] = v;
      }
    };
    double alpha = std::min(1.0, amax);
    // Full-step acceptance by score contraction.  The backtracking test
    // below compares objective values whose hazard tables accumulate in
    // doubles, so every trial carries rounding noise around
    // 1e-16*(1+|phi|) -- many decades above one long-double ulp.  A step
    // whose true decrement sits under that noise cannot be validated by
    // comparing objectives; the score is recomputed from freshly rebuilt
    // tables, so halving it is evidence of real progress that no objective
    // comparison can see.
    auto contraction_accept = [&]() {
      fill_trial(std::min(1.0, amax));
      std::vector<double> saved = w_;
      w_ = trial;
      rebuild();
      compute_grad();
      if (kkt_score() <= 0.5 * score) {
        phi = phi_of_ld(hv_);
        return true;
      }
      w_ = std::move(saved);
      rebuild();
      compute_grad();
      return false;
    };
    const double noise = 1e-16 * (1 + std::fabs(static_cast<double>(phi)));
    // When the whole predicted decrease drowns in evaluation noise, the
    // backtracking loop can only ever accept no-op steps (weights moving
    // by less than one ulp) on a lucky rounding; the step lives or dies by
    // contraction alone.
    if (!(gd < -3 * noise)) return contraction_accept();
    // Near convergence the full step is almost always right: test it first
    // and skip the noise-bound backtracking entirely when it contracts.
    if (score <= 1e4 && contraction_accept()) return true;
    while (alpha > 1e-14) {
      fill_trial(alpha);
      long double tphi = phi_with_ld(trial);
#ifdef HAZMLE_TRACE
      if (g_trace && alpha > 1e-3) {
        std::printf("      ls try alpha=%.3e dphi=%+.6Le thr=%+.6Le\n", alpha,
                    tphi - phi,
                    1e-4L * static_cast<long double>(alpha * gd) +
                        1e-19L * (1 + std::fabs(static_cast<double>(phi))));
      }
#endif
      if (tphi <= phi + 1e-4L * static_cast<long double>(alpha * gd) +
                      1e-19L * (1 + std::fabs(static_cast<double>(phi)))) {
#ifdef HAZMLE_TRACE
        if (g_trace) {
          std::printf("      ls accept alpha=%.6e amax=%.6e dphi=%+.6Le\n",
                      alpha, amax, tphi - phi);
        }
#endif
        w_ = trial;
        phi = tphi;
        rebuild();
        return true;
      }
      alpha *= 0.5;
    }
    // Rescue for high scores: when every backtracked step was rejected by
    // objective noise, fall back to the same contraction test (the cheap
    // path above already ran it for low scores).
    if (score > 1e4 && contraction_accept()) return true;
    if (!fresh_) rebuild();
    return false;
  }

  // Loose passes (used while polishing, where the weights are refit many
  // times per cycle) stop at a much higher score; the caller re-runs a tight
  // pass before scanning.
  void inner_solve(double stop_score = 1.0) {
    // A relocation pass can leave a hinge stranded past the outermost
    // observation it used to cover.  Its weight is then pure penalty with an
    // identically zero curvature row, which no step below can reduce, so
    // clear it before iterating.
    cull_uncovered_hinges();
    if (!fresh_) rebuild();
    long double phi = phi_of_ld(hv_);
    for (int iter = 0; iter < 200; ++iter) {
      if (!fresh_) rebuild();
      compute_grad();
      remove_zero_weights(0.0);
      if (basis_.empty()) throw std::logic_error("active set became empty");
      compute_grad();
      double gmax = kkt_score();
#ifdef HAZMLE_TRACE
      if (g_trace) {
        std::printf("  it=%d phi=%.21Lg kkt=%.3e K=%zu\n", iter, phi, gmax,
                    basis_.size());
        for (std::size_t k = 0; k < basis_.size(); ++k) {
          if (basis_[k].loc > 9e-6 && basis_[k].loc < 9.1e-6) {
            std::printf("      [%zu] loc=%.17g w=%.17g g=%+.6e\n", k,
                        basis_[k].loc, w_[k], grad_[k]);
          }
        }
      }
#endif
      if (gmax <= stop_score) break;

      const std::size_t K = basis_.size();
      Eigen::MatrixXd H = hessian();
      Eigen::VectorXd g(K);
      for (std::size_t k = 0; k < K; ++k) g(k) = grad_[k];

      // Equilibrate a principal submatrix to unit diagonal: curvatures of a
      // short spike hinge and of a domain-wide hinge differ by many orders
      // of magnitude, and on the raw matrix any factorization either fails
      // or needs a ridge large enough to spoil the step.
      std::vector<int> idxs;
      Eigen::MatrixXd Hf, Hs;
      Eigen::VectorXd gf, scale, gs;
      auto equilibrated = [&]() {
        Hf.resize(idxs.size(), idxs.size());
        gf.resize(idxs.size());
        scale.resize(idxs.size());
        for (std::size_t a = 0; a < idxs.size(); ++a) {
          gf(a) = g(idxs[a]);
          for (std::size_t b = 0; b < idxs.size(); ++b) {
            Hf(a, b) = H(idxs[a], idxs[b]);
          }
          scale(a) = Hf(a, a) > 0 ? 1.0 / std::sqrt(Hf(a, a)) : 1.0;
        }
        Hs = scale.asDiagonal() * Hf * scale.asDiagonal();
        gs = scale.asDiagonal() * gf;
      };

      bool stepped = false;

      // Exchange step.  Along a degenerate direction the curvature solve is
      // useless (an exactly collinear set of hinge columns freezes the
      // log-likelihood and moves the objective linearly; a near-collinear
      // spike pair leaves curvature too weak to trust a full system solve),
      // so move along the single most profitable such direction: to its own
      // one-dimensional Newton point when it has usable curvature, bounded
      // by the pivot where the first weight reaches zero.
      for (std::size_t k = 0; k < K; ++k) {
        if (w_[k] == 0 && grad_[k] >= 0) continue;
        idxs.push_back(static_cast<int>(k));
      }
      if (idxs.size() > 1) {
        equilibrated();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
        if (es.info() == Eigen::Success && es.eigenvalues()(0) < kEigFloor) {
          const double gnoise = 1e-16 * std::max(1.0, s_.total_survival_integral());
          double best = 0;
          Eigen::VectorXd bd;
          for (Eigen::Index i = 0; i < es.eigenvalues().size() &&
                                   es.eigenvalues()(i) < kEigFloor;
               ++i) {
            Eigen::VectorXd nu = scale.asDiagonal() * es.eigenvectors().col(i);
            double gnu = gf.dot(nu);
            if (gnu > 0) {
              nu = -nu;
              gnu = -gnu;
            }
            // A near-null eigenvector of a spike pair carries components the
            // size of the equilibration scale (millions), so roundoff in the
            // assembled gradients synthesizes a small spurious descent along
            // every degenerate direction; the directional slope must clear
            // that noise before the direction counts as profitable, or the
            // exchange step chases roundoff forever and starves the curvature
            // step of its iterations.
#ifdef HAZMLE_TRACE
            if (g_trace) {
              std::printf("    xdir i=%ld lam=%.3e gnu=%.3e gate=%.3e\n",
                          static_cast<long>(i), es.eigenvalues()(i), gnu,
                          gnoise * nu.lpNorm<1>());
            }
#endif
            if (!(gnu < -gnoise * nu.lpNorm<1>())) continue;
            double astep = kInf;
            for (std::size_t a = 0; a < idxs.size(); ++a) {
              if (nu(a) < 0) astep = std::min(astep, w_[idxs[a]] / -nu(a));
            }
            const double curv = nu.dot(Hf * nu);
            if (curv > 0) astep = std::min(astep, -gnu / curv);
            if (!(astep > 0) || !std::isfinite(astep)) continue;
            // A direction whose whole profitable range (often a pivot capped
            // at a hair's width of remaining weight) gains less than the
            // objective's evaluation noise cannot be validated by any line
            // search; stepping there churns forever without progress.
            const double gain =
                astep * gnu + 0.5 * astep * astep * std::max(curv, 0.0);
            if (!(gain <
                  -4e-16 * (1 + std::fabs(static_cast<double>(phi))))) {
              continue;
            }
            if (gain < best) {
              best = gain;
              bd = astep * nu;
            }
          }
          if (best < 0) {
            Eigen::VectorXd d = Eigen::VectorXd::Zero(K);
            for (std::size_t a = 0; a < idxs.size(); ++a) d(idxs[a]) = bd(a);
            stepped = line_search(d, best, phi, gmax);
#ifdef HAZMLE_TRACE
            if (g_trace) {
              std::printf("    exch best=%.3e stepped=%d\n", best,
                          stepped ? 1 : 0);
            }
#endif
          }
        }
      }

      if (!stepped) {
        std::vector<char> free_set(K, 1);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(K);
        for (int pass = 0; pass < static_cast<int>(K) + 1; ++pass) {
          idxs.clear();
          for (std::size_t k = 0; k < K; ++k)
            if (free_set[k]) idxs.push_back(static_cast<int>(k));
          if (idxs.empty()) break;
          equilibrated();
          // Solve on the well-conditioned eigenspace only.  A factorization
          // with a ridge amplifies numerically singular directions into
          // garbage steps of size 1/ridge; projecting them out keeps the
          // step meaningful, and any profitable motion along them belongs
          // to the exchange step above.
          Eigen::VectorXd df;
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hs);
          if (es.info() == Eigen::Success) {
            Eigen::VectorXd dfs = Eigen::VectorXd::Zero(gs.size());
            for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
              if (es.eigenvalues()(i) > kEigFloor) {
                dfs -= (es.eigenvectors().col(i).dot(gs) /
                        es.eigenvalues()(i)) *
                       es.eigenvectors().col(i);
              }
            }
            df = scale.asDiagonal() * dfs;
          } else {
            df = -gf;
          }
          d.setZero();
          for (std::size_t a = 0; a < idxs.size(); ++a) d(idxs[a]) = df(a);
          // Coordinates at the bound must not move outward.
          bool removed = false;
          for (std::size_t k = 0; k < K; ++k) {
            if (free_set[k] && w_[k] == 0 && d(k) <= 0) {
              free_set[k] = 0;
              removed = true;
            }
          }
          if (!removed) break;
        }
        double gd = g.dot(d);
        stepped = (gd < 0) && line_search(d, gd, phi, gmax);
#ifdef HAZMLE_TRACE
        if (g_trace) {
          std::printf("    newton gd=%.3e |d|=%.3e stepped=%d d:", gd,
                      d.norm(), stepped ? 1 : 0);
          for (Eigen::Index k = 0; k < d.size(); ++k)
            std::printf(" %+.2e", d(k));
          std::printf("\n");
        }
#endif
      }
      if (!stepped) {
        // The (possibly blocked) Newton step made no progress; fall back to
        // the feasible steepest-descent direction before giving up, so that
        // a newly entered coordinate with negative gradient always moves.
        Eigen::VectorXd ds = Eigen::VectorXd::Zero(K);
        for (std::size_t k = 0; k < K; ++k) {
          if (w_[k] == 0 && grad_[k] >= 0) continue;
          ds(k) = -grad_[k];
        }
        double gds = g.dot(ds);
#ifdef HAZMLE_TRACE
        if (g_trace) std::printf("    steepest gds=%.3e\n", gds);
#endif
        if (!(gds < 0)) break;
        if (!line_search(ds, gds, phi, gmax)) break;
      }
    }
    if (!fresh_) rebuild();
    compute_grad();
    remove_zero_weights(-kInf);
  }

  // --- knot relocation ---------------------------------------------------------

  void merge_duplicates() {
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      for (std::size_t l = k + 1; l < basis_.size();) {
        if (basis_[l].kind == basis_[k].kind &&
            basis_[l].loc == basis_[k].loc) {
          w_[k] += w_[l];
          basis_.erase(basis_.begin() + l);
          w_.erase(w_.begin() + l);
          c_.erase(c_.begin() + l);
        } else {
          ++l;
        }
      }
    }
    fresh_ = false;
  }

  // A hinge whose support covers no reduced observation contributes only its
  // penalty term to the criterion, never any likelihood, so zeroing its
  // weight can only improve the objective.  Such hinges appear transiently
  // when a relocation step pushes a knot past the first (or last) reduced
  // observation.
  void cull_uncovered_hinges() {
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (w_[k] == 0) continue;
      if ((basis_[k].kind == BasisKind::dec && idx(basis_[k].loc) == 0) ||
          (basis_[k].kind == BasisKind::inc && idx(basis_[k].loc) >= m_)) {
        w_[k] = 0;
        fresh_ = false;
      }
    }
  }

  // Refine weights and hinge locations jointly with damped Newton steps on
  // the criterion.  The derivative rows of the certificate vanish exactly
  // when every hinge sits at a stationary location of the criterion, and the
  // knots are strongly coupled (a near-vertical spike is a hinge pair that
  // must move in lockstep), so coordinate-wise relocation stalls far above
  // the attainable accuracy while the joint step does not.  One cycle = one
  // Newton step with a long-double Armijo backtrack on the full state.
  void polish(int max_cycles) {
    const double end = xs_.back();
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      if (!fresh_) rebuild();
      cull_uncovered_hinges();
      remove_zero_weights(-kInf);
      if (!fresh_) rebuild();
      compute_grad();

      const std::size_t K = basis_.size();
      std::vector<std::size_t> locvar;  // basis index of each location variable
      for (std::size_t k = 0; k < K; ++k) {
        if (basis_[k].kind != BasisKind::constant && w_[k] > 0) {
          locvar.push_back(k);
        }
      }
      const std::size_t J = locvar.size();
      if (J == 0) return;
      const std::size_t V = K + J;

      // Stationarity residual r of each hinge location, its indicator range
      // [ilo, ihi) of reduced observations inside the hinge's support, and
      // the sign with which the hinge height responds to a location move.
      std::vector<double> r(J), sgn(J);
      std::vector<std::size_t> ilo(J), ihi(J);
      double locres = 0;
      for (std::size_t j = 0; j < J; ++j) {
        const Basis& b = basis_[locvar[j]];
        const double a = s_.survival_integral(b.loc);
        const std::size_t ib = idx(b.loc);
        if (b.kind == BasisKind::dec) {
          r[j] = a - q0_[ib];
          sgn[j] = 1.0;
          ilo[j] = 0;
          ihi[j] = ib;
        } else {
          r[j] = (q0_[m_] - q0_[ib]) - (s_.total_survival_integral() - a);
          sgn[j] = -1.0;
          ilo[j] = ib;
          ihi[j] = m_;
        }
        locres = std::max(
            locres, std::fabs(r[j]) * std::max(1.0, hazard_at(b.loc)));
      }
      if (locres <= 0.1 * loc_tol_) return;

      Eigen::VectorXd G(V);
      Eigen::MatrixXd M(V, V);
      for (std::size_t k = 0; k < K; ++k) G(k) = grad_[k];
      M.topLeftCorner(K, K) = hessian();
      for (std::size_t j = 0; j < J; ++j) {
        const std::size_t b = locvar[j];
        G(K + j) = w_[b] * r[j];
        for (std::size_t k = 0; k < K; ++k) {
          const Span sp = span_of(basis_[k]);
          const std::size_t lo = std::max(sp.lo, ilo[j]);
          const std::size_t hi = std::min(sp.hi, ihi[j]);
          double v = (k == b) ? r[j] : 0.0;
          if (lo < hi) {
            v += sgn[j] * w_[b] *
                 (sp.alpha * (p0_[hi] - p0_[lo]) +
                  sp.beta * (p1_[hi] - p1_[lo]));
          }
          M(k, K + j) = v;
          M(K + j, k) = v;
        }
        for (std::size_t jj = 0; jj <= j; ++jj) {
          const std::size_t bb = locvar[jj];
          const std::size_t lo = std::max(ilo[j], ilo[jj]);
          const std::size_t hi = std::min(ihi[j], ihi[jj]);
          double v = 0;
          if (lo < hi) {
            v = sgn[j] * sgn[jj] * w_[b] * w_[bb] * (p0_[hi] - p0_[lo]);
          }
          if (j == jj) v += w_[b] * (1.0 - s_.ecdf(basis_[b].loc));
          M(K + j, K + jj) = v;
          M(K + jj, K + j) = v;
        }
      }

      Eigen::VectorXd scale(V);
      for (std::size_t v = 0; v < V; ++v) {
        const double mvv = M(v, v);
        scale(v) = mvv > 0 ? 1.0 / std::sqrt(mvv) : 1.0;
      }
      const Eigen::MatrixXd Ms = scale.asDiagonal() * M * scale.asDiagonal();
      const Eigen::VectorXd Gs = scale.asDiagonal() * G;
      // The joint system is only positive semi-definite (collinear hinge
      // columns, weight/location trade-offs), so solve on the
      // well-conditioned eigenspace and project the rest out.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ms);
      if (es.info() != Eigen::Success) return;
      Eigen::VectorXd dsc = Eigen::VectorXd::Zero(V);
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) > kEigFloor) {
          dsc -= (es.eigenvectors().col(i).dot(Gs) / es.eigenvalues()(i)) *
                 es.eigenvectors().col(i);
        }
      }
      const Eigen::VectorXd d = scale.asDiagonal() * dsc;
      const double gd = G.dot(d);
      if (!(gd < 0)) return;

      const std::vector<Basis> sb = basis_;
      const std::vector<double> sw = w_, sc = c_;
      const long double phi0 = phi_of_ld(hv_);
      double alpha = 1.0;
      bool accepted = false;
      while (alpha > 1e-14) {
        for (std::size_t k = 0; k < K; ++k) {
          const double wv = sw[k] + alpha * d(k);
          w_[k] = wv > 0 ? wv : 0.0;
        }
        for (std::size_t j = 0; j < J; ++j) {
          const std::size_t k = locvar[j];
          double loc = sb[k].loc + alpha * d(K + j);
          if (basis_[k].kind == BasisKind::dec) {
            loc = std::clamp(loc, std::numeric_limits<double>::min(), end);
          } else {
            loc = std::clamp(loc, 0.0, end);
          }
          basis_[k].loc = loc;
          c_[k] = linear_coef(basis_[k]);
        }
        fresh_ = false;
        rebuild();
        const long double tphi = phi_of_ld(hv_);
        if (tphi <= phi0 + 1e-4L * static_cast<long double>(alpha) * gd +
                        1e-19L * (1 + std::fabs(static_cast<double>(phi0)))) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        basis_ = sb;
        w_ = sw;
        c_ = sc;
        fresh_ = false;
        rebuild();
        return;
      }
      merge_duplicates();
      if (!fresh_) rebuild();
    }
  }

  // Fitted hazard value at an arbitrary point of the domain.
  double hazard_at(double x) const {
    long double v = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (w_[k] == 0) continue;
      const Basis& b = basis_[k];
      if (b.kind == BasisKind::constant) {
        v += w_[k];
      } else if (b.kind == BasisKind::dec) {
        if (x < b.loc) v += static_cast<long double>(w_[k]) * (b.loc - x);
      } else {
        if (x > b.loc) v += static_cast<long double>(w_[k]) * (x - b.loc);
      }
    }
    return static_cast<double>(v);
  }

  // Worst knot-location stationarity residual, in cumulative-certificate
  // units: the cumulative residual at a knot equals the hazard value there
  // times the derivative residual (plus slope-weighted terms the gradient
  // budgets already bound), so a knot sitting where the fitted hazard is
  // large must hold a proportionally smaller derivative residual.
  double location_residual() {
    if (!fresh_) rebuild();
    double worst = 0;
    for (const Basis& b : basis_) {
      if (b.kind == BasisKind::constant) continue;
      double a = s_.survival_integral(b.loc);
      double q = q0_[idx(b.loc)];
      double r;
      if (b.kind == BasisKind::dec) {
        r = a - q;
      } else {
        r = (q0_[m_] - q) - (s_.total_survival_integral() - a);
      }
      worst = std::max(worst, std::fabs(r) * std::max(1.0, hazard_at(b.loc)));
    }
    return worst;
  }

  double self_residual() const {
    long double lin = 0;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      lin += static_cast<long double>(c_[k]) * w_[k];
    }
    return static_cast<double>(lin - static_cast<long double>(m_) /
                                         static_cast<long double>(n_));
  }

  // --- candidate scan ----------------------------------------------------------

  double D_slack(double x) const {
    std::size_t i = idx(x);
    return s_.survival_double_integral(x, IntegralDirection::forward) -
           (x * q0_[i] - q1_[i]);
  }

  double E_slack(double x) const {
    std::size_t i = idx(x);
    return s_.survival_double_integral(x, IntegralDirection::backward) -
           ((q1_[m_] - q1_[i]) - x * (q0_[m_] - q0_[i]));
  }

  ScanHit scan() {
    if (!fresh_) rebuild();
    ScanHit hit;
    // Negative slacks are weighed by the local slope of the iterate before
    // comparison: a dip sitting under a steep spike contaminates the
    // cumulative certificate rows in proportion to that slope, so it must be
    // driven proportionally further down than a dip in a flat stretch.
    // A hinge pinned at zero never becomes a knot of the canonical estimate
    // (an upward hinge there only adds slope), so no cumulative certificate
    // row amplifies its slack; it is held to the plain tolerance.
    auto consider = [&](BasisKind kind, double loc, double slack) {
      if (slack < 0 && loc > 0) slack *= slope_amplification(loc);
      if (slack < hit.min_slack) hit = {slack, kind, loc};
    };

    bool const_active = false;
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      if (basis_[k].kind == BasisKind::constant && w_[k] > 0) const_active = true;
    }
    // The constant direction feeds the certificate's mass bound directly,
    // with no cumulative row behind it, so its slack is never amplified.
    double cslack = s_.total_survival_integral() - q0_[m_];
    if (!const_active && cslack < hit.min_slack) {
      hit = {cslack, BasisKind::constant, 0};
    }

    auto visit = [&](double x) {
      consider(BasisKind::dec, x, D_slack(x));
      consider(BasisKind::inc, x, E_slack(x));
    };
    visit(0.0);
    double lo = 0;
    const int pieces = 1 << cfg_.candidate_refinement;
    for (std::size_t g = 0; g < n_; ++g) {
      double hi = xs_[g];
      for (int p = 1; p < pieces; ++p) visit(lo + (hi - lo) * p / pieces);
      double slope = 1.0 - static_cast<double>(g) / static_cast<double>(n_);
      if (slope > 0) {
        double alo = s_.survival_integral(lo);
        double xd = lo + (q0_[idx(lo)] - alo) / slope;
        if (xd > lo && xd < hi) consider(BasisKind::dec, xd, D_slack(xd));
        double r0 = q0_[m_] - q0_[idx(lo)];
        double xe = lo + (s_.total_survival_integral() - r0 - alo) / slope;
        if (xe > lo && xe < hi) consider(BasisKind::inc, xe, E_slack(xe));
      }
      visit(hi);
      lo = hi;
    }
    return hit;
  }

  bool duplicate_of_active(const ScanHit& hit) const {
    for (const Basis& b : basis_) {
      if (b.kind == hit.kind &&
          std::fabs(b.loc - hit.loc) <= 1e-15 * (1.0 + std::fabs(hit.loc))) {
        return true;
      }
    }
    if (hit.kind == BasisKind::constant) {
      for (const Basis& b : basis_) {
        if (b.kind == BasisKind::constant) return true;
      }
    }
    return false;
  }

  const LifetimeSample& s_;
  SolverConfig cfg_;
  const std::vector<double>& xs_;
  std::size_t n_, m_;
  double loc_tol_ = 1e-10;

  std::vector<Basis> basis_;
  std::vector<double> w_, c_, grad_;
  std::vector<double> hv_;
  std::vector<double> q0_, q1_, p0_, p1_, p2_;
  bool fresh_ = false;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Fitting entry points.

inline FitResult fit(const LifetimeSample& sample, const SolverConfig& cfg,
                     const PiecewiseLinearHazard* initial) {
  if (sample.size() == 1) {
    // A single observation carries no log term: the criterion is minimized
    // by the zero hazard on [0, X_(1)).
    PiecewiseLinearHazard h(0.0, {}, {}, sample.max_value());
    FitResult r{h, criterion(h, sample), 0, 0.0, check(h, sample)};
    return r;
  }
  detail::SupportSolver solver(sample, cfg);
  if (initial) {
    solver.init_from(*initial);
  } else {
    solver.init_default();
  }
  int iters = 0;
  double violation = 0;
  bool ok = solver.run(iters, violation);
  PiecewiseLinearHazard h = solver.canonical_hazard();
  FitResult r{h, criterion(h, sample), iters, violation, check(h, sample)};
  if (!ok) {
    throw FitFailure(
        "solver stopped before reaching tolerances (worst violation " +
            format_double(violation) + " after " + std::to_string(iters) +
            " iterations)",
        std::move(r));
  }
  return r;
}

inline FitResult fit(const LifetimeSample& sample,
                     const SolverConfig& cfg = SolverConfig()) {
  return fit(sample, cfg, nullptr);
}

inline FitResult fit(const LifetimeSample& sample, const SolverConfig& cfg,
                     const PiecewiseLinearHazard& initial) {
  return fit(sample, cfg, &initial);
}

}  // namespace hazmle
