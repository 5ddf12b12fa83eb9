#pragma once

// Piecewise-linear convex hazard functions: the estimator's value type.
// h(t) = a + sum_j nu_j (tau_j - t)_+ + sum_j mu_j (t - eta_j)_+ with all
// coefficients nonnegative and every tau_j <= every eta_j, on [0, end).
// By convention the hazard is +inf at and beyond a finite domain end, which
// makes the survival function drop to zero there (an atom when the finite
// part of the cumulative hazard stays bounded).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "hazmle/lifetime_sample.hpp"
#include "hazmle/random.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

struct Knot {
  double loc = 0;
  double weight = 0;
};

class PiecewiseLinearHazard {
 public:
  PiecewiseLinearHazard(double intercept, std::vector<Knot> dec_knots,
                        std::vector<Knot> inc_knots, double domain_end)
      : intercept_(intercept),
        dec_(std::move(dec_knots)),
        inc_(std::move(inc_knots)),
        end_(domain_end) {
    validate();
  }

  double intercept() const { return intercept_; }
  const std::vector<Knot>& dec_knots() const { return dec_; }
  const std::vector<Knot>& inc_knots() const { return inc_; }
  double domain_end() const { return end_; }

  double eval(double t) const {
    require_in_domain(t);
    if (t >= end_) return kInf;
    double h = intercept_;
    for (const Knot& k : dec_)
      if (t < k.loc) h += k.weight * (k.loc - t);
    for (const Knot& k : inc_)
      if (t > k.loc) h += k.weight * (t - k.loc);
    return h;
  }

  double operator()(double t) const { return eval(t); }

  // Slope just right of t (the hazard is right-differentiable on [0, end)).
  double right_derivative(double t) const {
    require_in_domain(t);
    if (t >= end_) {
      throw std::domain_error("derivative requested at/after domain end");
    }
    double s = 0;
    for (const Knot& k : dec_)
      if (t < k.loc) s -= k.weight;
    for (const Knot& k : inc_)
      if (t >= k.loc) s += k.weight;
    return s;
  }

  // Exact integral of the hazard over [0, t]; at a finite domain end this is
  // the left limit (the +inf wall contributes no Lebesgue mass).
  double cumhaz(double t) const {
    require_in_domain(t);
    if (t > end_) {
      throw std::domain_error("cumulative hazard requested beyond domain end");
    }
    double H = intercept_ * t;
    for (const Knot& k : dec_) {
      double clipped = std::max(k.loc - t, 0.0);
      H += 0.5 * k.weight * (k.loc * k.loc - clipped * clipped);
    }
    for (const Knot& k : inc_) {
      double r = std::max(t - k.loc, 0.0);
      H += 0.5 * k.weight * r * r;
    }
    return H;
  }

  struct DensitySurvival {
    double density;
    double survival;
  };

  DensitySurvival density_survival(double t) const {
    double S = std::exp(-cumhaz(t));
    double h = (t >= end_) ? kInf : eval(t);
    return {h * S, S};
  }

  // Sorted knot locations, duplicates merged.
  std::vector<double> breakpoints() const {
    std::vector<double> b;
    b.reserve(dec_.size() + inc_.size());
    for (const Knot& k : dec_) b.push_back(k.loc);
    for (const Knot& k : inc_) b.push_back(k.loc);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  // Finite part of the hazard (ignores the +inf wall at a finite domain
  // end); equals eval(t) for t < end and the left limit at t = end.
  double finite_value(double t) const {
    require_in_domain(t);
    double h = intercept_;
    for (const Knot& k : dec_)
      if (t < k.loc) h += k.weight * (k.loc - t);
    for (const Knot& k : inc_)
      if (t > k.loc) h += k.weight * (t - k.loc);
    return h;
  }

  // Minimum over [0, min(hi, end)); by convexity it is attained at 0, at a
  // knot, or at the right edge.
  double min_value(double hi) const {
    double edge = std::min(hi, end_);
    double m = std::min(finite_value(0), finite_value(edge));
    for (const Knot& k : dec_)
      if (k.loc > 0 && k.loc < edge) m = std::min(m, finite_value(k.loc));
    for (const Knot& k : inc_)
      if (k.loc > 0 && k.loc < edge) m = std::min(m, finite_value(k.loc));
    return m;
  }

  bool strictly_positive(double hi) const { return min_value(hi) > 0; }

 private:
  void require_in_domain(double t) const {
    if (!(t >= 0) || std::isnan(t)) {
      throw std::domain_error("hazard argument must be >= 0, got " +
                              format_double(t));
    }
  }

  void validate() const {
    if (!std::isfinite(intercept_) || intercept_ < 0) {
      throw std::invalid_argument("hazard intercept must be finite and >= 0");
    }
    if (std::isnan(end_) || end_ <= 0) {
      throw std::invalid_argument("hazard domain end must be positive");
    }
    auto check_side = [&](const std::vector<Knot>& ks, bool dec_side) {
      double prev = -kInf;
      for (const Knot& k : ks) {
        if (!std::isfinite(k.loc) || k.loc < 0 || (dec_side && k.loc == 0)) {
          throw std::invalid_argument("knot locations must be positive");
        }
        if (!std::isfinite(k.weight) || k.weight <= 0) {
          throw std::invalid_argument("knot weights must be positive");
        }
        if (k.loc <= prev) {
          throw std::invalid_argument("knot locations must be strictly increasing");
        }
        if (k.loc > end_) {
          throw std::invalid_argument("knot beyond domain end");
        }
        prev = k.loc;
      }
    };
    check_side(dec_, true);
    check_side(inc_, false);
    if (!dec_.empty() && !inc_.empty() && dec_.back().loc > inc_.front().loc) {
      throw std::invalid_argument(
          "decreasing-side knots must not pass increasing-side knots");
    }
  }

  double intercept_;
  std::vector<Knot> dec_;
  std::vector<Knot> inc_;
  double end_;
};

// ---------------------------------------------------------------------------
// Inverse-CDF sampling: solve H(T) = E with E ~ Exp(1) segment by segment.

inline LifetimeSample sample_from_hazard(const PiecewiseLinearHazard& h,
                                         std::size_t count, std::uint64_t seed,
                                         bool detie = false) {
  if (count == 0) throw std::invalid_argument("sample count must be positive");
  std::vector<double> bps;
  bps.push_back(0.0);
  for (double b : h.breakpoints())
    if (b > 0 && b < h.domain_end()) bps.push_back(b);

  const bool finite_end = std::isfinite(h.domain_end());
  std::vector<double> h0(bps.size()), slope(bps.size()), cum(bps.size() + 1);
  cum[0] = 0;
  for (std::size_t j = 0; j < bps.size(); ++j) {
    h0[j] = h.eval(bps[j]);
    slope[j] = h.right_derivative(bps[j]);
    double w = (j + 1 < bps.size() ? bps[j + 1] : h.domain_end()) - bps[j];
    cum[j + 1] = std::isfinite(w)
                     ? cum[j] + h0[j] * w + 0.5 * slope[j] * w * w
                     : kInf;
  }
  if (!finite_end && h0.back() == 0 && slope.back() == 0) {
    throw std::invalid_argument(
        "hazard must accumulate infinite mass toward its domain end");
  }

  RandomStream rs(seed);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double E = rs.exponential();
    if (finite_end && E >= cum.back()) {
      // Residual mass is compressed into the +inf wall at the domain end.
      out.push_back(h.domain_end());
      continue;
    }
    std::size_t j =
        static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), E) -
                                 cum.begin()) -
        1;
    j = std::min(j, bps.size() - 1);
    double e = E - cum[j];
    double w = (j + 1 < bps.size() ? bps[j + 1] : h.domain_end()) - bps[j];
    double x;
    if (e <= 0) {
      x = 0;
    } else if (slope[j] == 0) {
      x = e / h0[j];
    } else {
      // Stable quadratic root (no cancellation for small slopes): first
      // crossing of h0*x + slope*x^2/2 = e.
      double disc = std::max(h0[j] * h0[j] + 2.0 * slope[j] * e, 0.0);
      x = 2.0 * e / (h0[j] + std::sqrt(disc));
    }
    if (std::isfinite(w)) x = std::min(x, w);
    out.push_back(bps[j] + x);
  }
  return LifetimeSample(std::move(out), detie);
}

// ---------------------------------------------------------------------------
// Serialization: line-oriented text, exact decimal round-trip.

inline void write_hazard(const PiecewiseLinearHazard& h, std::ostream& os) {
  os << "# piecewise-linear convex hazard\n";
  os << "intercept " << format_double(h.intercept()) << "\n";
  os << "domain_end " << format_double(h.domain_end()) << "\n";
  os << "dec_knots " << h.dec_knots().size() << "\n";
  for (const Knot& k : h.dec_knots()) {
    os << format_double(k.loc) << " " << format_double(k.weight) << "\n";
  }
  os << "inc_knots " << h.inc_knots().size() << "\n";
  for (const Knot& k : h.inc_knots()) {
    os << format_double(k.loc) << " " << format_double(k.weight) << "\n";
  }
}

inline std::string hazard_to_string(const PiecewiseLinearHazard& h) {
  std::ostringstream os;
  write_hazard(h, os);
  return os.str();
}

namespace detail {
inline std::vector<std::string_view> next_fields(std::istream& in,
                                                 std::string& storage) {
  while (std::getline(in, storage)) {
    auto body = strip_comment(storage);
    if (!body.empty()) return split_ws(body);
  }
  throw ParseError("unexpected end of hazard document");
}

inline double parse_field(const std::vector<std::string_view>& f,
                          const char* key) {
  if (f.size() != 2 || f[0] != key) {
    throw ParseError(std::string("expected '") + key + " <value>' line");
  }
  double v;
  if (!parse_double(f[1], v)) {
    throw ParseError(std::string("cannot parse value for ") + key);
  }
  return v;
}
}  // namespace detail

inline PiecewiseLinearHazard read_hazard(std::istream& in) {
  std::string line;
  double intercept = detail::parse_field(detail::next_fields(in, line), "intercept");
  double end = detail::parse_field(detail::next_fields(in, line), "domain_end");
  auto read_side = [&](const char* key) {
    std::size_t cnt = static_cast<std::size_t>(
        detail::parse_field(detail::next_fields(in, line), key));
    std::vector<Knot> ks(cnt);
    for (Knot& k : ks) {
      auto f = detail::next_fields(in, line);
      if (f.size() != 2 || !parse_double(f[0], k.loc) ||
          !parse_double(f[1], k.weight)) {
        throw ParseError("cannot parse knot line (want '<loc> <weight>')");
      }
    }
    return ks;
  };
  std::vector<Knot> dec = read_side("dec_knots");
  std::vector<Knot> inc = read_side("inc_knots");
  return PiecewiseLinearHazard(intercept, std::move(dec), std::move(inc), end);
}

inline void save_hazard(const PiecewiseLinearHazard& h, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  write_hazard(h, os);
}

inline PiecewiseLinearHazard load_hazard(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hazard file: " + path);
  return read_hazard(in);
}

}  // namespace hazmle
