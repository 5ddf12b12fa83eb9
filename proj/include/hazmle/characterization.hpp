#pragma once

// Exact optimality certificate for a fitted convex hazard.  A candidate h is
// the minimizer of the modified likelihood criterion iff a family of
// integral inequalities against the empirical measure holds, with equality
// at the knots.  Everything here is computed in closed form from (h, sample)
// alone so it can certify a solver output without trusting solver internals.
//
// Notation used throughout (all exact, no quadrature):
//   A(x)      = int_0^x S_n,     Abar(x) = int_x^inf S_n
//   D(x)      = int_0^x int_0^t S_n ds dt - int_0^x (x-t)/h(t) dFr_n(t)
//   E(x)      = int_x^inf int_t^inf S_n ds dt - int_x^inf (t-x)/h(t) dFr_n(t)
// where Fr_n is the empirical measure with the largest observation's mass
// removed (the fitted model places infinite hazard there).  Optimality is
// D >= 0 and E >= 0 everywhere with equality at the respective knots, a
// global mass-balance identity, and derived derivative/measure conditions.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hazmle/hazard.hpp"
#include "hazmle/lifetime_sample.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

struct CharacterizationReport {
  // Most negative slack of the two hinge-direction inequality families over
  // the scan set (observations, knots, and per-gap stationary points).
  double ineq22_min_slack = 0;
  double ineq23_min_slack = 0;
  // Slack of the constant-direction inequality.
  double ineq24_slack = 0;
  // Mass balance: mean fitted cumulative hazard minus (n-1)/n.
  double eq25_residual = 0;
  // D at decreasing-side knots, E at increasing-side knots (must vanish).
  std::vector<double> eq22_at_taus;
  std::vector<double> eq23_at_etas;
  // int_0^p h S_n dt - F_n(p) at every knot p.
  std::vector<double> eq26_residuals;
  // Derivative equalities at the knots: A - Q at taus, Abar - R at etas.
  std::vector<double> eq27_residuals;
  std::vector<double> eq28_residuals;
  // Extended equalities that hold only for strictly positive hazards:
  // D at the first increasing knot, E at the last decreasing knot, then the
  // derivative equalities restated at every knot.
  std::vector<double> ext_residuals;
  bool strictly_positive = false;
  double tol = 0;
  bool passed = false;

  // Largest violation across every recorded condition (0 when clean).
  double worst() const {
    double w = std::max({0.0, -ineq22_min_slack, -ineq23_min_slack,
                         -ineq24_slack, std::fabs(eq25_residual)});
    auto upd = [&w](const std::vector<double>& v) {
      for (double r : v) w = std::max(w, std::fabs(r));
    };
    upd(eq22_at_taus);
    upd(eq23_at_etas);
    upd(eq26_residuals);
    upd(eq27_residuals);
    upd(eq28_residuals);
    upd(ext_residuals);
    return w;
  }
};

// Knot locations of the estimate; these are exactly the points where the
// certificate's inequalities must be tight.
inline std::vector<double> touchpoints(const PiecewiseLinearHazard& h) {
  return h.breakpoints();
}

namespace detail {

// Prefix machinery over the reduced sample (largest observation dropped)
// for the 1/h integrals, plus closed-form survival integrals.
class CertScanner {
 public:
  CertScanner(const PiecewiseLinearHazard& h, const LifetimeSample& s)
      : s_(s), xs_(s.values()), n_(s.size()), m_(s.size() - 1) {
    q0_.assign(m_ + 1, 0);
    q1_.assign(m_ + 1, 0);
    long double a0 = 0, a1 = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double inv = 1.0 / h.eval(xs_[i]);
      a0 += inv;
      a1 += xs_[i] * static_cast<long double>(inv);
      q0_[i + 1] = static_cast<double>(a0 / static_cast<long double>(n_));
      q1_[i + 1] = static_cast<double>(a1 / static_cast<long double>(n_));
    }
  }

  // #reduced observations <= x.
  std::size_t idx(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(xs_.begin(), xs_.begin() + m_, x) - xs_.begin());
  }

  double D(double x) const {
    std::size_t i = idx(x);
    double lhs = x * q0_[i] - q1_[i];
    return s_.survival_double_integral(x, IntegralDirection::forward) - lhs;
  }

  double E(double x) const {
    std::size_t i = idx(x);
    double lhs = (q1_[m_] - q1_[i]) - x * (q0_[m_] - q0_[i]);
    return s_.survival_double_integral(x, IntegralDirection::backward) - lhs;
  }

  // d/dx D = A(x) - Q0(x);  d/dx E = R0(x) - Abar(x).
  double Dprime(double x) const { return s_.survival_integral(x) - q0_[idx(x)]; }
  double Eprime(double x) const {
    return (q0_[m_] - q0_[idx(x)]) -
           (s_.total_survival_integral() - s_.survival_integral(x));
  }

  double const_slack() const {
    return s_.total_survival_integral() - q0_[m_];
  }

  // Scans observations, supplied extra points, dyadic gap midpoints and the
  // per-gap stationary points of f (whose derivative is linear with slope
  // S_n inside each gap), returning the minimum.
  template <typename F, typename FStat>
  double scan_min(const std::vector<double>& extra, int refinement, F f,
                  FStat stationary) const {
    double best = kInf;
    auto eat = [&](double x) { best = std::min(best, f(x)); };
    eat(0.0);
    for (std::size_t i = 0; i < n_; ++i) eat(xs_[i]);
    for (double x : extra) eat(x);
    double lo = 0;
    for (std::size_t g = 0; g <= n_ - 1; ++g) {
      double hi = xs_[g];
      int pieces = 1 << std::max(0, refinement);
      for (int p = 1; p < pieces; ++p) {
        eat(lo + (hi - lo) * p / pieces);
      }
      double xstar;
      if (stationary(lo, hi, g, xstar) && xstar > lo && xstar < hi) eat(xstar);
      lo = hi;
    }
    return best;
  }

  // Stationary point of D in gap g = (lo, hi): solve A(x) = Q0 inside.
  bool d_stationary(double lo, double hi, std::size_t g, double& out) const {
    (void)hi;
    double slope = 1.0 - static_cast<double>(g) / static_cast<double>(n_);
    if (slope <= 0) return false;
    double q = q0_[idx(lo)];
    out = lo + (q - s_.survival_integral(lo)) / slope;
    return true;
  }

  // Stationary point of E in gap g: solve Abar(x) = R0 inside.
  bool e_stationary(double lo, double hi, std::size_t g, double& out) const {
    (void)hi;
    double slope = 1.0 - static_cast<double>(g) / static_cast<double>(n_);
    if (slope <= 0) return false;
    double r0 = q0_[m_] - q0_[idx(lo)];
    double target = s_.total_survival_integral() - r0;
    out = lo + (target - s_.survival_integral(lo)) / slope;
    return true;
  }

 private:
  const LifetimeSample& s_;
  const std::vector<double>& xs_;
  std::size_t n_;
  std::size_t m_;
  std::vector<double> q0_;  // (1/n) sum 1/h over reduced obs <= index
  std::vector<double> q1_;  // (1/n) sum x/h
};

// Exact int_0^p h(t) S_n(t) dt: S_n is constant between observations, so the
// integral splits into segments evaluated with the hazard's exact cumhaz.
inline double hazard_survival_integral(const PiecewiseLinearHazard& h,
                                       const LifetimeSample& s, double p) {
  std::vector<double> pts;
  pts.push_back(0);
  for (double b : h.breakpoints())
    if (b > 0 && b < p) pts.push_back(b);
  for (double x : s.values())
    if (x > 0 && x < p) pts.push_back(x);
  pts.push_back(p);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double acc = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double Sn = 1.0 - s.ecdf(pts[i]);
    acc += Sn * (h.cumhaz(pts[i + 1]) - h.cumhaz(pts[i]));
  }
  return acc;
}

}  // namespace detail

// Verifies the full optimality characterization of h for the given sample.
// Inequality slacks must exceed -tol and equality residuals must stay within
// tol for the report to pass.  Tolerances are absolute; the certificate's
// quantities are O(1) for data on a |O(1)| scale.
inline CharacterizationReport check(const PiecewiseLinearHazard& h,
                                    const LifetimeSample& sample,
                                    double tol = 1e-6,
                                    int refinement = 1) {
  if (!std::isfinite(tol) || tol <= 0) {
    throw std::invalid_argument("certificate tolerance must be positive");
  }
  if (h.domain_end() < sample.max_value()) {
    throw std::invalid_argument(
        "hazard domain does not cover the sample (domain end " +
        format_double(h.domain_end()) + " < max observation " +
        format_double(sample.max_value()) + ")");
  }

  CharacterizationReport rep;
  rep.tol = tol;
  const std::size_t n = sample.size();

  detail::CertScanner scan(h, sample);
  std::vector<double> knots = h.breakpoints();

  rep.ineq22_min_slack = scan.scan_min(
      knots, refinement, [&](double x) { return scan.D(x); },
      [&](double lo, double hi, std::size_t g, double& out) {
        return scan.d_stationary(lo, hi, g, out);
      });
  rep.ineq23_min_slack = scan.scan_min(
      knots, refinement, [&](double x) { return scan.E(x); },
      [&](double lo, double hi, std::size_t g, double& out) {
        return scan.e_stationary(lo, hi, g, out);
      });
  rep.ineq24_slack = scan.const_slack();

  long double mh = 0;
  for (double x : sample.values()) mh += h.cumhaz(x);
  rep.eq25_residual = static_cast<double>(
      mh / static_cast<long double>(n) -
      (1.0L - 1.0L / static_cast<long double>(n)));

  for (const Knot& k : h.dec_knots()) {
    rep.eq22_at_taus.push_back(scan.D(k.loc));
    rep.eq27_residuals.push_back(scan.Dprime(k.loc));
  }
  for (const Knot& k : h.inc_knots()) {
    rep.eq23_at_etas.push_back(scan.E(k.loc));
    rep.eq28_residuals.push_back(scan.Eprime(k.loc));
  }
  for (double p : knots) {
    rep.eq26_residuals.push_back(
        detail::hazard_survival_integral(h, sample, p) - sample.ecdf(p));
  }

  rep.strictly_positive = h.strictly_positive(sample.max_value());
  if (rep.strictly_positive) {
    if (!h.inc_knots().empty()) {
      rep.ext_residuals.push_back(scan.D(h.inc_knots().front().loc));
    }
    if (!h.dec_knots().empty()) {
      rep.ext_residuals.push_back(scan.E(h.dec_knots().back().loc));
    }
    for (const Knot& k : h.dec_knots()) {
      rep.ext_residuals.push_back(scan.Dprime(k.loc));
    }
    for (const Knot& k : h.inc_knots()) {
      rep.ext_residuals.push_back(scan.Eprime(k.loc));
    }
  }

  rep.passed = rep.worst() <= tol;
  return rep;
}

inline void write_report(const CharacterizationReport& r, std::ostream& os) {
  auto vec = [&os](const char* key, const std::vector<double>& v) {
    os << key << " " << v.size();
    for (double x : v) os << " " << format_double(x);
    os << "\n";
  };
  os << "# optimality certificate\n";
  os << "passed " << (r.passed ? 1 : 0) << "\n";
  os << "tol " << format_double(r.tol) << "\n";
  os << "strictly_positive " << (r.strictly_positive ? 1 : 0) << "\n";
  os << "worst " << format_double(r.worst()) << "\n";
  os << "ineq22_min_slack " << format_double(r.ineq22_min_slack) << "\n";
  os << "ineq23_min_slack " << format_double(r.ineq23_min_slack) << "\n";
  os << "ineq24_slack " << format_double(r.ineq24_slack) << "\n";
  os << "eq25_residual " << format_double(r.eq25_residual) << "\n";
  vec("eq22_at_taus", r.eq22_at_taus);
  vec("eq23_at_etas", r.eq23_at_etas);
  vec("eq26_residuals", r.eq26_residuals);
  vec("eq27_residuals", r.eq27_residuals);
  vec("eq28_residuals", r.eq28_residuals);
  vec("ext_residuals", r.ext_residuals);
}

inline std::string report_to_string(const CharacterizationReport& r) {
  std::ostringstream os;
  write_report(r, os);
  return os.str();
}

}  // namespace hazmle
