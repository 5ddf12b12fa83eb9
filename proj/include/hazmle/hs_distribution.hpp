#pragma once

// Two-parameter bathtub lifetime family on [0, A]:
//   F(t) = sqrt(b^2 + (1+2b) t / A) - b,   A > 0, b > -1/2.
// Its hazard is convex for every admissible b and blows up at A, which makes
// it a convenient sampling truth for the estimator.  For b < 0 the formulas
// place an atom of mass -2b at zero (the density then integrates to 1+2b on
// (0, A]); sampling rejects parameter values that would produce nonpositive
// lifetimes.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hazmle/lifetime_sample.hpp"
#include "hazmle/random.hpp"
#include "hazmle/util.hpp"

namespace hazmle {

class HsDistribution {
 public:
  HsDistribution(double A, double b) : A_(A), b_(b) {
    if (!std::isfinite(A) || A <= 0) {
      throw std::invalid_argument("scale A must be positive and finite");
    }
    if (!std::isfinite(b) || b <= -0.5) {
      throw std::invalid_argument("shape b must be finite and > -1/2");
    }
  }

  double scale() const { return A_; }
  double shape() const { return b_; }

  double cdf(double t) const {
    require_nonneg(t);
    if (t >= A_) return 1.0;
    return std::min(1.0, std::max(0.0, root(t) - b_));
  }

  double survival(double t) const { return 1.0 - cdf(t); }

  double density(double t) const {
    require_nonneg(t);
    if (t > A_) return 0.0;
    return (1.0 + 2.0 * b_) / (2.0 * A_ * root(t));
  }

  double hazard(double t) const {
    require_nonneg(t);
    if (t >= A_) return kInf;
    double R = root(t);
    return (1.0 + 2.0 * b_) / (2.0 * A_ * R * (1.0 + b_ - R));
  }

  double hazard_derivative(double t) const {
    require_nonneg(t);
    if (t >= A_) {
      throw std::domain_error("hazard derivative requested at/after A");
    }
    double c = 1.0 + 2.0 * b_;
    double R = root(t);
    double S = 1.0 + b_ - R;
    return -c * c * (1.0 + b_ - 2.0 * R) / (4.0 * A_ * A_ * R * R * R * S * S);
  }

  double cumulative_hazard(double t) const { return -std::log(survival(t)); }

  // Inverse CDF: t(u) = A u (u + 2b) / (1 + 2b).
  double quantile(double u) const {
    if (!(u >= 0 && u <= 1)) {
      throw std::domain_error("quantile level must lie in [0,1]");
    }
    return A_ * u * (u + 2.0 * b_) / (1.0 + 2.0 * b_);
  }

  LifetimeSample sample(std::size_t count, std::uint64_t seed,
                        bool detie = false) const {
    if (count == 0) {
      throw std::invalid_argument("sample count must be positive");
    }
    RandomStream rs(seed);
    std::vector<double> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      double t = quantile(rs.uniform01());
      if (t <= 0) {
        throw std::invalid_argument(
            "parameters with b < 0 generate mass at zero; cannot sample "
            "positive lifetimes");
      }
      out.push_back(t);
    }
    return LifetimeSample(std::move(out), detie);
  }

 private:
  void require_nonneg(double t) const {
    if (!(t >= 0) || std::isnan(t)) {
      throw std::domain_error("lifetime argument must be >= 0");
    }
  }

  double root(double t) const {
    return std::sqrt(b_ * b_ + (1.0 + 2.0 * b_) * t / A_);
  }

  double A_;
  double b_;
};

}  // namespace hazmle
