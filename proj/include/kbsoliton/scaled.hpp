#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>

namespace kb::detail {

using complexd = std::complex<double>;

/// Value represented as m * exp(e) with |m| kept O(1). Sums of exponential
/// terms with wildly different magnitudes (|xi| up to ~1e300) are formed by
/// rescaling every term to the largest exponent, so ratios of such sums stay
/// exact where a direct evaluation would overflow.
struct Scaled {
  complexd m{0.0, 0.0};
  double e = 0.0;

  complexd value() const {
    // may legitimately overflow to inf for extreme inputs; ratios never do
    return m * std::exp(e);
  }
};

struct ExpTerm {
  complexd coef;      // bounded coefficient
  complexd exponent;  // full exponent, Re part may be huge
};

inline Scaled scaled_sum(std::initializer_list<ExpTerm> terms) {
  double emax = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms)
    if (t.coef != complexd(0.0, 0.0)) emax = std::max(emax, t.exponent.real());
  if (!std::isfinite(emax)) return {};
  complexd m(0.0, 0.0);
  for (const auto& t : terms) {
    if (t.coef == complexd(0.0, 0.0)) continue;
    m += t.coef * std::exp(t.exponent - emax);
  }
  return {m, emax};
}

inline complexd scaled_ratio(const Scaled& a, const Scaled& b) {
  return (a.m / b.m) * std::exp(a.e - b.e);
}

}  // namespace kb::detail
