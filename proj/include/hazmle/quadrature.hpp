#pragma once

// Adaptive Simpson quadrature with caller-supplied split points.  Kinks in
// the integrand defeat the local error estimate, so integrands that are only
// piecewise smooth must list their kink locations explicitly; each smooth
// piece is then integrated adaptively on its own.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hazmle/util.hpp"

namespace hazmle {

namespace detail {

struct SimpsonState {
  const std::function<double(double)>& f;
  bool converged = true;
};

inline double simpson_rec(SimpsonState& st, double a, double fa, double m,
                          double fm, double b, double fb, double whole,
                          double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = st.f(lm), frm = st.f(rm);
  double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  double err = left + right - whole;
  if (std::fabs(err) <= 15 * tol || (b - a) < 1e-14 * (1 + std::fabs(a))) {
    if (std::fabs(err) > 15 * tol) st.converged = false;
    return left + right + err / 15.0;
  }
  if (depth <= 0) {
    st.converged = false;
    return left + right + err / 15.0;
  }
  return simpson_rec(st, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_rec(st, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Integrates f over [a, b] to absolute tolerance tol, subdividing first at
// the supplied split points.  Throws on non-convergence.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol,
                        std::vector<double> splits = {}) {
  if (!(b >= a) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("integration bounds must be finite, a <= b");
  }
  if (!(tol > 0)) throw std::invalid_argument("tolerance must be positive");
  if (a == b) return 0.0;
  splits.push_back(a);
  splits.push_back(b);
  std::sort(splits.begin(), splits.end());
  std::vector<double> pts;
  for (double s : splits) {
    if (s < a || s > b) continue;
    if (pts.empty() || s > pts.back()) pts.push_back(s);
  }
  detail::SimpsonState st{f, true};
  double total = 0;
  double piece_tol = tol / static_cast<double>(pts.size() - 1);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double lo = pts[k], hi = pts[k + 1];
    if (hi <= lo) continue;
    double mid = 0.5 * (lo + hi);
    double flo = f(lo), fmid = f(mid), fhi = f(hi);
    double whole = (hi - lo) / 6.0 * (flo + 4 * fmid + fhi);
    total += detail::simpson_rec(st, lo, flo, mid, fmid, hi, fhi, whole,
                                 piece_tol, 48);
  }
  if (!st.converged) {
    throw std::runtime_error("adaptive quadrature did not converge");
  }
  return total;
}

}  // namespace hazmle
