#pragma once

// Simulation of the canonical process Y(t) = int_0^t W(s) ds + t^4 on a
// finite symmetric window and computation of its envelope: the function I
// above Y whose second derivative is the convex minimizer of the quadratic
// functional (1/2) int g^2 - int g dX with X = Y' = W + 4 t^3.
//
// Discretization: the regression target at a grid node combines a central
// difference of the Brownian path with the exact deterministic curvature
// (12 t^2 for the canonical drift), so a noiseless path is reproduced
// exactly.  The convex fit g is a nonnegative combination of interior
// hinges plus a free affine part, solved by active-set nonnegative least
// squares with Gram matrices assembled from suffix sums.  The envelope is
// then I = Y + m where m is the dual certificate
//   m(x) = step * sum_i w_i (g_i - z_i) (t_i - x)_+ ,
// which vanishes at both window ends (affine orthogonality), is nonnegative
// on the grid at the optimum, and is zero at every active knot.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmle/random.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

struct PathGrid {
  double half_width = 0;
  double step = 0;
  std::vector<double> times;            // symmetric grid -c ... c
  std::vector<double> w;                // two-sided Brownian values, w[center] = 0
  std::vector<double> y;                // int_0^t w + drift, trapezoid outward
  std::vector<double> drift_curvature;  // exact second derivative of the drift

  std::size_t center() const { return (times.size() - 1) / 2; }

  // The grid of b * Y(a t): same node indices, rescaled coordinates.
  PathGrid scaled(double a, double b) const {
    if (!(a > 0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw std::invalid_argument("invalid rescaling parameters");
    }
    PathGrid out;
    out.half_width = half_width / a;
    out.step = step / a;
    out.times.reserve(times.size());
    out.w.reserve(times.size());
    out.y.reserve(times.size());
    out.drift_curvature.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      out.times.push_back(times[i] / a);
      out.w.push_back(a * b * w[i]);
      out.y.push_back(b * y[i]);
      out.drift_curvature.push_back(a * a * b * drift_curvature[i]);
    }
    return out;
  }
};

namespace detail {

inline std::size_t grid_points(double c, double step) {
  if (!(c > 0) || !(step > 0) || !std::isfinite(c) || !std::isfinite(step)) {
    throw std::invalid_argument("window half-width and step must be positive");
  }
  double ratio = c / step;
  double rounded = std::nearbyint(ratio);
  if (rounded < 2 || std::fabs(ratio - rounded) > 1e-9 * rounded) {
    throw std::invalid_argument("step must divide the window half-width");
  }
  return static_cast<std::size_t>(rounded);
}

inline PathGrid assemble_path(double c, double step,
                              const std::vector<double>& right_incr,
                              const std::vector<double>& left_incr) {
  const std::size_t N = right_incr.size();
  const std::size_t M = 2 * N + 1;
  PathGrid g;
  g.half_width = c;
  g.step = step;
  g.times.resize(M);
  g.w.resize(M);
  g.y.resize(M);
  g.drift_curvature.resize(M);
  const std::size_t mid = N;
  for (std::size_t i = 0; i < M; ++i) {
    double t = (static_cast<double>(i) - static_cast<double>(mid)) * step;
    g.times[i] = t;
    g.drift_curvature[i] = 12.0 * t * t;
  }
  g.w[mid] = 0;
  for (std::size_t k = 1; k <= N; ++k) {
    g.w[mid + k] = g.w[mid + k - 1] + right_incr[k - 1];
    g.w[mid - k] = g.w[mid - k + 1] + left_incr[k - 1];
  }
  // Trapezoidal accumulation of int_0^t w outward from 0, plus exact t^4.
  std::vector<long double> acc(M, 0.0L);
  for (std::size_t k = 1; k <= N; ++k) {
    acc[mid + k] = acc[mid + k - 1] +
                   0.5L * step * (g.w[mid + k - 1] + g.w[mid + k]);
    acc[mid - k] = acc[mid - k + 1] -
                   0.5L * step * (g.w[mid - k + 1] + g.w[mid - k]);
  }
  for (std::size_t i = 0; i < M; ++i) {
    double t = g.times[i];
    g.y[i] = static_cast<double>(acc[i]) + t * t * t * t;
  }
  return g;
}

}  // namespace detail

// Brownian increments are drawn moving outward, alternating right then left,
// so that with a fixed seed a wider window extends a narrower one.
inline PathGrid simulate_path(double c, double step, std::uint64_t seed) {
  const std::size_t N = detail::grid_points(c, step);
  RandomStream rs(seed);
  double sd = std::sqrt(step);
  std::vector<double> right(N), left(N);
  for (std::size_t k = 0; k < N; ++k) {
    right[k] = sd * rs.normal();
    left[k] = sd * rs.normal();
  }
  return detail::assemble_path(c, step, right, left);
}

// All increments forced to zero: Y(t) = t^4 exactly on the grid.
inline PathGrid zero_noise_path(double c, double step) {
  const std::size_t N = detail::grid_points(c, step);
  std::vector<double> zero(N, 0.0);
  return detail::assemble_path(c, step, zero, zero);
}

struct EnvelopeFit {
  std::vector<double> times;
  std::vector<double> i;        // envelope values on the grid
  std::vector<double> iprime;   // central differences of i
  std::vector<double> g;        // I'' on the grid: convex sequence
  std::vector<double> i3;       // I''' per interval: slopes of g
  std::vector<double> gap;      // i - y = dual certificate m, >= 0 at optimum
  std::vector<double> active_knots;
  double i2_zero = 0;           // g at t = 0
  double i3_zero = 0;           // central slope of g at t = 0
  double min_gap = 0;           // min of i - y over the grid
  double min_curvature = 0;     // min second difference of g
  double complementarity = 0;   // sum over knots of gap * jump of I'''
  double dual_min = 0;          // worst dual value over candidate hinges
  double tol = 0;
  bool passed = false;
};

class EnvelopeFailure : public std::runtime_error {
 public:
  EnvelopeFailure(const std::string& what, EnvelopeFit last)
      : std::runtime_error(what), last_(std::move(last)) {}
  const EnvelopeFit& last() const { return last_; }

 private:
  EnvelopeFit last_;
};

namespace detail {

// Weighted least squares of the target over {1, t, interior hinges}:
// Lawson-Hanson active set with the affine pair always free.
class ConvexRegression {
 public:
  ConvexRegression(const std::vector<double>& t, const std::vector<double>& z,
                   const std::vector<double>& w)
      : t_(t), z_(z), w_(w), M_(t.size()) {
    s0_.assign(M_ + 1, 0);
    s1_.assign(M_ + 1, 0);
    s2_.assign(M_ + 1, 0);
    z0_.assign(M_ + 1, 0);
    z1_.assign(M_ + 1, 0);
    long double a0 = 0, a1 = 0, a2 = 0, b0 = 0, b1 = 0;
    for (std::size_t j = M_; j-- > 0;) {
      a0 += w_[j];
      a1 += w_[j] * t_[j];
      a2 += w_[j] * t_[j] * static_cast<long double>(t_[j]);
      b0 += w_[j] * z_[j];
      b1 += w_[j] * t_[j] * static_cast<long double>(z_[j]);
      s0_[j] = a0;
      s1_[j] = a1;
      s2_[j] = a2;
      z0_[j] = b0;
      z1_[j] = b1;
    }
    double zscale = 0;
    for (double v : z) zscale = std::max(zscale, std::fabs(v));
    dual_tol_ = 1e-11 * std::max(1.0, zscale);
  }

  // Returns false when the iteration cap was hit before dual feasibility.
  bool solve() {
    // A target that is already a convex sequence is its own fit.
    if (target_convex()) {
      fit_exactly();
      return true;
    }
    std::vector<std::size_t> J;  // active hinge nodes, sorted
    std::vector<double> cJ;      // their coefficients
    a_ = b_ = 0;
    const std::size_t cap = 3 * M_ + 10;
    for (std::size_t iter = 0; iter < cap; ++iter) {
      restore_feasibility(J, cJ);
      // Pricing: most negative dual over inactive interior hinges.
      compute_g(J, cJ);
      std::vector<char> active(M_, 0);
      for (std::size_t j : J) active[j] = 1;
      long double sr = 0, srt = 0;
      double best = 0;
      std::size_t best_j = M_;
      std::vector<long double> SR(M_ + 1, 0), SRT(M_ + 1, 0);
      for (std::size_t j = M_; j-- > 0;) {
        long double r = static_cast<long double>(g_[j]) - z_[j];
        sr += w_[j] * r;
        srt += w_[j] * r * t_[j];
        SR[j] = sr;
        SRT[j] = srt;
      }
      for (std::size_t j = 1; j + 1 < M_; ++j) {
        if (active[j]) continue;
        double d = static_cast<double>(SRT[j] - t_[j] * SR[j]);
        if (d < best) {
          best = d;
          best_j = j;
        }
      }
      if (best_j == M_ || best >= -dual_tol_) {
        finalize(J, cJ);
        return true;
      }
      auto pos = std::lower_bound(J.begin(), J.end(), best_j);
      cJ.insert(cJ.begin() + (pos - J.begin()), 0.0);
      J.insert(pos, best_j);
    }
    finalize(J, cJ);
    return false;
  }

  const std::vector<double>& g() const { return g_; }
  const std::vector<std::size_t>& knots() const { return knots_; }
  const std::vector<double>& knot_weights() const { return knot_w_; }

 private:
  bool target_convex() const {
    for (std::size_t j = 1; j + 1 < M_; ++j) {
      if (z_[j + 1] - 2 * z_[j] + z_[j - 1] < 0) return false;
    }
    return true;
  }

  void fit_exactly() {
    g_ = z_;
    knots_.clear();
    knot_w_.clear();
    double step = t_[1] - t_[0];
    for (std::size_t j = 1; j + 1 < M_; ++j) {
      double c = (z_[j + 1] - 2 * z_[j] + z_[j - 1]) / step;
      if (c > 0) {
        knots_.push_back(j);
        knot_w_.push_back(c);
      }
    }
  }

  // Classic nonnegative-least-squares inner phase: solve the equality
  // problem on the active set; while any hinge coefficient is negative,
  // step from the last feasible point to the boundary, drop the blocking
  // variable, and re-solve.
  void restore_feasibility(std::vector<std::size_t>& J,
                           std::vector<double>& cJ) {
    for (std::size_t guard = 0; guard <= J.size() + 2; ++guard) {
      Eigen::VectorXd sol = normal_solve(J);
      std::size_t blk = J.size();
      double alpha = kInf;
      for (std::size_t k = 0; k < J.size(); ++k) {
        if (sol(2 + k) < 0) {
          double a = cJ[k] / (cJ[k] - sol(2 + k));
          if (a < alpha) {
            alpha = a;
            blk = k;
          }
        }
      }
      if (blk == J.size()) {
        a_ = sol(0);
        b_ = sol(1);
        for (std::size_t k = 0; k < J.size(); ++k) cJ[k] = sol(2 + k);
        return;
      }
      for (std::size_t k = 0; k < J.size(); ++k) {
        cJ[k] += alpha * (sol(2 + k) - cJ[k]);
      }
      cJ[blk] = 0;
      std::vector<std::size_t> J2;
      std::vector<double> c2;
      for (std::size_t k = 0; k < J.size(); ++k) {
        if (cJ[k] > 0) {
          J2.push_back(J[k]);
          c2.push_back(cJ[k]);
        }
      }
      J.swap(J2);
      cJ.swap(c2);
    }
  }

  Eigen::VectorXd normal_solve(const std::vector<std::size_t>& J) const {
    const std::size_t K = 2 + J.size();
    Eigen::MatrixXd G(K, K);
    Eigen::VectorXd rhs(K);
    auto hinge_dot = [&](std::size_t j, std::size_t k) {
      std::size_t m = std::max(j, k);
      return static_cast<double>(s2_[m] - (t_[j] + t_[k]) * s1_[m] +
                                 static_cast<long double>(t_[j]) * t_[k] *
                                     s0_[m]);
    };
    G(0, 0) = static_cast<double>(s0_[0]);
    G(0, 1) = G(1, 0) = static_cast<double>(s1_[0]);
    G(1, 1) = static_cast<double>(s2_[0]);
    rhs(0) = static_cast<double>(z0_[0]);
    rhs(1) = static_cast<double>(z1_[0]);
    for (std::size_t k = 0; k < J.size(); ++k) {
      std::size_t j = J[k];
      G(0, 2 + k) = G(2 + k, 0) = static_cast<double>(s1_[j] - t_[j] * s0_[j]);
      G(1, 2 + k) = G(2 + k, 1) = static_cast<double>(s2_[j] - t_[j] * s1_[j]);
      rhs(2 + k) = static_cast<double>(z1_[j] - t_[j] * z0_[j]);
      for (std::size_t l = 0; l <= k; ++l) {
        double v = hinge_dot(J[l], j);
        G(2 + k, 2 + l) = v;
        G(2 + l, 2 + k) = v;
      }
    }
    double ridge = 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd Gr = G;
      if (ridge > 0) Gr.diagonal().array() += ridge;
      Eigen::LLT<Eigen::MatrixXd> llt(Gr);
      if (llt.info() == Eigen::Success) return llt.solve(rhs);
      ridge = (ridge == 0) ? 1e-12 * (1 + G.trace() / K) : ridge * 100;
    }
    return G.colPivHouseholderQr().solve(rhs);
  }

  void compute_g(const std::vector<std::size_t>& J,
                 const std::vector<double>& cJ) {
    g_.assign(M_, 0.0);
    double sum_c = 0, sum_ct = 0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < M_; ++i) {
      while (next < J.size() && J[next] <= i) {
        sum_c += cJ[next];
        sum_ct += cJ[next] * t_[J[next]];
        ++next;
      }
      g_[i] = a_ + b_ * t_[i] + sum_c * t_[i] - sum_ct;
    }
  }

  void finalize(std::vector<std::size_t>& J, std::vector<double>& cJ) {
    // One accuracy pass on the settled support: weighted Householder QR on
    // the full design matrix, kept only if it preserves feasibility.
    Eigen::MatrixXd B(M_, 2 + J.size());
    Eigen::VectorXd rhs(M_);
    for (std::size_t i = 0; i < M_; ++i) {
      double sw = std::sqrt(w_[i]);
      B(i, 0) = sw;
      B(i, 1) = sw * t_[i];
      for (std::size_t k = 0; k < J.size(); ++k) {
        double h = t_[i] - t_[J[k]];
        B(i, 2 + k) = sw * (h > 0 ? h : 0.0);
      }
      rhs(i) = sw * z_[i];
    }
    Eigen::VectorXd sol = B.householderQr().solve(rhs);
    bool ok = true;
    for (std::size_t k = 0; k < J.size(); ++k) {
      if (sol(2 + k) < 0) ok = false;
    }
    if (ok) {
      a_ = sol(0);
      b_ = sol(1);
      for (std::size_t k = 0; k < J.size(); ++k) cJ[k] = sol(2 + k);
    }
    compute_g(J, cJ);
    knots_.clear();
    knot_w_.clear();
    for (std::size_t k = 0; k < J.size(); ++k) {
      if (cJ[k] > 0) {
        knots_.push_back(J[k]);
        knot_w_.push_back(cJ[k]);
      }
    }
  }

  const std::vector<double>& t_;
  const std::vector<double>& z_;
  const std::vector<double>& w_;
  std::size_t M_;
  std::vector<long double> s0_, s1_, s2_, z0_, z1_;
  double dual_tol_ = 1e-11;
  double a_ = 0, b_ = 0;
  std::vector<double> g_;
  std::vector<std::size_t> knots_;
  std::vector<double> knot_w_;
};

}  // namespace detail

inline EnvelopeFit compute_envelope(const PathGrid& path, double tol = 1e-8) {
  const std::size_t M = path.times.size();
  if (M < 5 || path.w.size() != M || path.y.size() != M ||
      path.drift_curvature.size() != M) {
    throw std::invalid_argument("path grid is incomplete");
  }
  if (!(tol > 0) || !std::isfinite(tol)) {
    throw std::invalid_argument("tolerance must be positive");
  }
  const double step = path.step;
  // Regression target: central difference of the Brownian part plus the
  // exact deterministic curvature; one-sided at the two window ends.
  std::vector<double> z(M), wgt(M, 1.0);
  for (std::size_t i = 0; i < M; ++i) {
    double dw;
    if (i == 0) {
      dw = (path.w[1] - path.w[0]) / step;
    } else if (i + 1 == M) {
      dw = (path.w[M - 1] - path.w[M - 2]) / step;
    } else {
      dw = (path.w[i + 1] - path.w[i - 1]) / (2 * step);
    }
    z[i] = dw + path.drift_curvature[i];
  }
  wgt.front() = 0.5;
  wgt.back() = 0.5;

  detail::ConvexRegression reg(path.times, z, wgt);
  bool converged = reg.solve();

  EnvelopeFit fit;
  fit.times = path.times;
  fit.g = reg.g();
  fit.tol = tol;

  // Dual certificate m_i = step * sum_{l >= i} w_l r_l (t_l - t_i).
  std::vector<long double> SR(M + 1, 0), SRT(M + 1, 0);
  for (std::size_t j = M; j-- > 0;) {
    long double r = static_cast<long double>(fit.g[j]) - z[j];
    SR[j] = SR[j + 1] + wgt[j] * r;
    SRT[j] = SRT[j + 1] + wgt[j] * r * path.times[j];
  }
  fit.gap.resize(M);
  fit.i.resize(M);
  double min_gap = kInf;
  for (std::size_t i = 0; i < M; ++i) {
    double m = step * static_cast<double>(SRT[i] - path.times[i] * SR[i]);
    fit.gap[i] = m;
    fit.i[i] = path.y[i] + m;
    min_gap = std::min(min_gap, m);
  }
  fit.min_gap = min_gap;

  fit.iprime.resize(M);
  for (std::size_t i = 0; i < M; ++i) {
    if (i == 0) {
      fit.iprime[i] = (fit.i[1] - fit.i[0]) / step;
    } else if (i + 1 == M) {
      fit.iprime[i] = (fit.i[M - 1] - fit.i[M - 2]) / step;
    } else {
      fit.iprime[i] = (fit.i[i + 1] - fit.i[i - 1]) / (2 * step);
    }
  }
  fit.i3.resize(M - 1);
  for (std::size_t i = 0; i + 1 < M; ++i) {
    fit.i3[i] = (fit.g[i + 1] - fit.g[i]) / step;
  }
  double min_curv = kInf;
  for (std::size_t i = 1; i + 1 < M; ++i) {
    min_curv = std::min(min_curv, fit.g[i + 1] - 2 * fit.g[i] + fit.g[i - 1]);
  }
  fit.min_curvature = min_curv;

  long double comp = 0;
  for (std::size_t k = 0; k < reg.knots().size(); ++k) {
    std::size_t j = reg.knots()[k];
    fit.active_knots.push_back(path.times[j]);
    comp += static_cast<long double>(fit.gap[j]) * reg.knot_weights()[k];
  }
  fit.complementarity = static_cast<double>(comp);

  double dual_min = 0;
  for (std::size_t j = 1; j + 1 < M; ++j) {
    dual_min = std::min(dual_min, fit.gap[j]);
  }
  fit.dual_min = dual_min / step;

  std::size_t c = path.center();
  fit.i2_zero = fit.g[c];
  fit.i3_zero = (fit.g[c + 1] - fit.g[c - 1]) / (2 * step);

  double iscale = 0;
  for (double v : fit.i) iscale = std::max(iscale, std::fabs(v));
  fit.passed = converged && fit.min_gap >= -tol && fit.min_curvature >= -tol &&
               std::fabs(fit.complementarity) <= tol * std::max(1.0, iscale);
  if (!converged) {
    throw EnvelopeFailure("envelope active-set solve did not converge",
                          std::move(fit));
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Monte Carlo quantiles of the central derivatives.

struct EnvelopeConfig {
  double half_width = 6.0;
  double step = 0.01;
  int replications = 1000;
  std::vector<double> levels;
  std::uint64_t seed = 1;
  bool zero_noise = false;
};

struct QuantileTable {
  double half_width = 0;
  double step = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<double> levels;
  std::vector<double> i2_quantiles;
  std::vector<double> i3_quantiles;
  std::vector<double> i2_samples;  // kept for resampling diagnostics
  std::vector<double> i3_samples;
  int failures = 0;
};

inline QuantileTable quantile_table(const EnvelopeConfig& cfg) {
  if (cfg.replications < 1) {
    throw std::invalid_argument("replications must be at least 1");
  }
  if (cfg.levels.empty()) {
    throw std::invalid_argument("at least one quantile level is required");
  }
  for (double p : cfg.levels) {
    if (!(p > 0) || !(p < 1)) {
      throw std::invalid_argument("quantile levels must lie in (0, 1)");
    }
  }
  QuantileTable tab;
  tab.half_width = cfg.half_width;
  tab.step = cfg.step;
  tab.replications = cfg.replications;
  tab.seed = cfg.seed;
  tab.levels = cfg.levels;
  tab.i2_samples.assign(cfg.replications, 0.0);
  tab.i3_samples.assign(cfg.replications, 0.0);
  std::vector<char> failed(cfg.replications, 0);
  for (int rep = 0; rep < cfg.replications; ++rep) {
    PathGrid path =
        cfg.zero_noise
            ? zero_noise_path(cfg.half_width, cfg.step)
            : simulate_path(cfg.half_width, cfg.step,
                            derive_seed(cfg.seed, 0, static_cast<std::uint64_t>(rep)));
    try {
      EnvelopeFit fit = compute_envelope(path);
      if (!fit.passed) {
        failed[rep] = 1;
        continue;
      }
      tab.i2_samples[rep] = fit.i2_zero;
      tab.i3_samples[rep] = fit.i3_zero;
    } catch (const EnvelopeFailure&) {
      failed[rep] = 1;
    }
  }
  std::vector<double> i2, i3;
  for (int rep = 0; rep < cfg.replications; ++rep) {
    if (failed[rep]) {
      ++tab.failures;
    } else {
      i2.push_back(tab.i2_samples[rep]);
      i3.push_back(tab.i3_samples[rep]);
    }
  }
  if (tab.failures * 100 > cfg.replications) {
    throw std::runtime_error(
        "more than 1% of envelope replications failed (" +
        std::to_string(tab.failures) + " of " +
        std::to_string(cfg.replications) + ")");
  }
  std::sort(i2.begin(), i2.end());
  std::sort(i3.begin(), i3.end());
  for (double p : cfg.levels) {
    tab.i2_quantiles.push_back(quantile_type7(i2, p));
    tab.i3_quantiles.push_back(quantile_type7(i3, p));
  }
  return tab;
}

inline void write_quantile_table(std::ostream& os, const QuantileTable& tab) {
  os << "# envelope quantile table\n";
  os << "# half_width " << format_double(tab.half_width) << "\n";
  os << "# step " << format_double(tab.step) << "\n";
  os << "# replications " << tab.replications << "\n";
  os << "# seed " << tab.seed << "\n";
  os << "level,I2_quantile,I3_quantile\n";
  for (std::size_t k = 0; k < tab.levels.size(); ++k) {
    os << format_double(tab.levels[k]) << ","
       << format_double(tab.i2_quantiles[k]) << ","
       << format_double(tab.i3_quantiles[k]) << "\n";
  }
}

inline std::string quantile_table_to_string(const QuantileTable& tab) {
  std::ostringstream os;
  write_quantile_table(os, tab);
  return os.str();
}

inline QuantileTable read_quantile_table(std::istream& is) {
  QuantileTable tab;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t(trim(line));
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string meta(t.substr(1));
      auto fields = split_ws(meta);
      if (fields.size() == 2) {
        if (fields[0] == "half_width") tab.half_width = require_double(fields[1]);
        if (fields[0] == "step") tab.step = require_double(fields[1]);
        if (fields[0] == "replications") {
          tab.replications = static_cast<int>(require_int(fields[1]));
        }
        if (fields[0] == "seed") {
          tab.seed = static_cast<std::uint64_t>(require_int(fields[1]));
        }
      }
      continue;
    }
    if (!header_seen) {
      if (t != "level,I2_quantile,I3_quantile") {
        throw ParseError("line " + std::to_string(lineno) +
                         ": expected quantile table header row");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = t.find(',', pos);
      cells.push_back(t.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() != 3) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected three comma-separated values");
    }
    try {
      tab.levels.push_back(require_double(trim(cells[0])));
      tab.i2_quantiles.push_back(require_double(trim(cells[1])));
      tab.i3_quantiles.push_back(require_double(trim(cells[2])));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header_seen) throw ParseError("missing quantile table header row");
  if (tab.levels.empty()) throw ParseError("quantile table has no rows");
  return tab;
}

// Looks up the quantile for an exact level (within rounding slack).
inline double table_quantile(const QuantileTable& tab, double level,
                             bool third_derivative) {
  for (std::size_t k = 0; k < tab.levels.size(); ++k) {
    if (std::fabs(tab.levels[k] - level) <= 1e-9) {
      return third_derivative ? tab.i3_quantiles[k] : tab.i2_quantiles[k];
    }
  }
  throw std::invalid_argument("quantile level " + format_double(level) +
                              " not present in the table");
}

}  // namespace hazmle
