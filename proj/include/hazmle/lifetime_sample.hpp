#pragma once

// Empirical side of the estimation problem: a sorted sample of lifetimes
// plus exact (closed-form) integral functionals of the empirical survival
// function S_n = 1 - F_n.  The optimality certificate and the solver both
// consume these; they are piecewise polynomial and evaluated without
// quadrature error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "hazmle/util.hpp"

namespace hazmle {

enum class IntegralDirection { forward, backward };

class LifetimeSample {
 public:
  // Values must be positive and finite.  Duplicates are rejected with
  // TieError unless detie is set, in which case duplicates are nudged up
  // by successive ulps (order-preserving, value-scale perturbation).
  explicit LifetimeSample(std::vector<double> values, bool detie = false)
      : v_(std::move(values)) {
    if (v_.empty()) throw std::invalid_argument("sample must be nonempty");
    for (double x : v_) {
      if (!std::isfinite(x) || x <= 0) {
        throw std::invalid_argument("lifetimes must be positive and finite, got " +
                                    format_double(x));
      }
    }
    std::sort(v_.begin(), v_.end());
    for (std::size_t i = 1; i < v_.size(); ++i) {
      if (v_[i] <= v_[i - 1]) {
        if (!detie) {
          throw TieError("tied observations at " + format_double(v_[i]) +
                         "; ties have probability zero under a continuous "
                         "model (enable de-tieing to perturb them)");
        }
        v_[i] = std::nextafter(v_[i - 1], kInf);
      }
    }
    build_tables();
  }

  const std::vector<double>& values() const { return v_; }
  std::size_t size() const { return v_.size(); }
  double max_value() const { return v_.back(); }

  // F_n(t) = #{X_i <= t}/n, right-continuous.
  double ecdf(double t) const {
    return static_cast<double>(count_le(t)) / static_cast<double>(v_.size());
  }

  // Same but with the largest observation's mass dropped: the criterion and
  // the certificate integrate against this reduced measure.
  double reduced_ecdf(double t) const {
    std::size_t c = std::min(count_le(t), v_.size() - 1);
    return static_cast<double>(c) / static_cast<double>(v_.size());
  }

  // A(x) = int_0^x S_n(t) dt.  Piecewise linear, exact.
  double survival_integral(double x) const {
    require_nonneg(x);
    std::size_t k = count_le(x);
    if (k == 0) return x;
    double slope = 1.0 - static_cast<double>(k) / static_cast<double>(v_.size());
    return si_[k - 1] + slope * (x - v_[k - 1]);
  }

  // int_0^infty S_n = sample mean.
  double total_survival_integral() const { return si_.back(); }

  // forward:  int_0^x int_0^t S_n(s) ds dt
  // backward: int_x^infty int_t^infty S_n(s) ds dt
  double survival_double_integral(double x, IntegralDirection dir) const {
    require_nonneg(x);
    const std::size_t n = v_.size();
    std::size_t k = count_le(x);
    if (dir == IntegralDirection::forward) {
      double a0 = (k == 0) ? 0.0 : si_[k - 1];
      double t0 = (k == 0) ? 0.0 : v_[k - 1];
      double base = (k == 0) ? 0.0 : sii_[k - 1];
      double slope = 1.0 - static_cast<double>(k) / static_cast<double>(n);
      double w = x - t0;
      return base + a0 * w + 0.5 * slope * w * w;
    }
    if (k == n) return 0.0;
    // Abar(t) = total - A(t) is linear on [x, v_k]; trapezoid is exact.
    double abar_x = si_.back() - survival_integral(x);
    double abar_k = si_.back() - si_[k];
    return back_[k] + 0.5 * (abar_x + abar_k) * (v_[k] - x);
  }

  struct NelsonAalen {
    double value;
    // Set when t covers the largest observation: the fitted-model hazard is
    // +inf there, so the final increment sits outside the model's support.
    bool at_last;
  };

  // H_n(t) = sum_{X_i <= t} (1/n) / (1 - F_n(X_i-)).
  NelsonAalen nelson_aalen(double t) const {
    require_nonneg(t);
    std::size_t k = count_le(t);
    return {k == 0 ? 0.0 : na_[k - 1], k == v_.size()};
  }

 private:
  void require_nonneg(double x) const {
    if (!(x >= 0) || std::isnan(x)) {
      throw std::domain_error("evaluation point must be >= 0, got " +
                              format_double(x));
    }
  }

  std::size_t count_le(double t) const {
    return static_cast<std::size_t>(
        std::upper_bound(v_.begin(), v_.end(), t) - v_.begin());
  }

  void build_tables() {
    const std::size_t n = v_.size();
    si_.resize(n);
    sii_.resize(n);
    back_.resize(n);
    na_.resize(n);
    long double a = 0, aa = 0, prev = 0;
    for (std::size_t k = 0; k < n; ++k) {
      long double slope = 1.0L - static_cast<long double>(k) / n;
      long double w = v_[k] - prev;
      aa += a * w + 0.5L * slope * w * w;
      a += slope * w;
      si_[k] = static_cast<double>(a);
      sii_[k] = static_cast<double>(aa);
      prev = v_[k];
    }
    long double b = 0;
    back_[n - 1] = 0;
    for (std::size_t k = n - 1; k > 0; --k) {
      long double abar_hi = si_.back() - si_[k];
      long double abar_lo = si_.back() - si_[k - 1];
      b += 0.5L * (abar_lo + abar_hi) * (v_[k] - v_[k - 1]);
      back_[k - 1] = static_cast<double>(b);
    }
    long double h = 0;
    for (std::size_t k = 0; k < n; ++k) {
      h += 1.0L / static_cast<long double>(n - k);
      na_[k] = static_cast<double>(h);
    }
  }

  std::vector<double> v_;
  std::vector<double> si_;    // A at each observation
  std::vector<double> sii_;   // int_0^{v_k} A
  std::vector<double> back_;  // int_{v_k}^infty Abar
  std::vector<double> na_;    // Nelson-Aalen at each observation
};

// Plain-text loader: one positive decimal per line, '#' starts a comment,
// blank lines ignored, '.' decimal separator regardless of locale.
inline LifetimeSample read_lifetimes(std::istream& in, bool detie = false) {
  std::vector<double> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = strip_comment(line);
    if (body.empty()) continue;
    auto tokens = split_ws(body);
    if (tokens.size() != 1) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": expected one value per line");
    }
    double x;
    if (!parse_double(tokens[0], x)) {
      throw ParseError("line " + std::to_string(lineno) + ": cannot parse '" +
                       std::string(tokens[0]) + "' as a number");
    }
    if (!std::isfinite(x) || x <= 0) {
      throw ParseError("line " + std::to_string(lineno) +
                       ": lifetimes must be positive and finite");
    }
    vals.push_back(x);
  }
  if (vals.empty()) throw ParseError("no data lines found");
  return LifetimeSample(std::move(vals), detie);
}

inline LifetimeSample load_lifetime_file(const std::string& path,
                                         bool detie = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open data file: " + path);
  return read_lifetimes(in, detie);
}

}  // namespace hazmle
