#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "kbsoliton/errors.hpp"

namespace kb {

using complexd = std::complex<double>;

/// Discrete eigenvalue lambda_1 = mu + i nu in the upper half plane together
/// with its polar data l, theta_1 and the ratio beta = i nu / lambda_1.
/// The second eigenvalue of the pair is -conj(lambda_1) and never stored.
struct SpectralPoint {
  double mu = 0.0;      ///< Re lambda_1, nonzero
  double nu = 0.0;      ///< Im lambda_1, positive
  double l = 0.0;       ///< |lambda_1|
  double theta1 = 0.0;  ///< arg lambda_1, radians
  complexd beta;        ///< i nu / lambda_1

  complexd lambda1() const noexcept { return complexd(mu, nu); }
};

/// Integration constants of R_1(0,sigma)/(2 nu) = e^{x0 + i sigma t0}, plus the
/// coordinate shift applied before phase evaluation. normalize_phases() fills
/// x_shift = theta1/(2 mu) so that the solution is centered at x = 0; constants
/// set directly keep x_shift = 0 and evaluate the literal phase formulas, which
/// is also how translation covariance is exercised (shifting x_shift by d
/// translates every field by d).
struct NormingConstant {
  double x0 = 0.0;
  double t0 = 0.0;
  double x_shift = 0.0;
};

/// One of the two conjugate spectral problems, sigma = +1 or -1.
class SigmaBranch {
 public:
  constexpr SigmaBranch() = default;
  explicit SigmaBranch(int s) : sigma_(s) {
    if (s != 1 && s != -1) throw ConfigError("sigma must be +1 or -1");
  }
  constexpr int value() const noexcept { return sigma_; }
  constexpr SigmaBranch flipped() const noexcept {
    SigmaBranch b;
    b.sigma_ = -sigma_;
    return b;
  }

 private:
  int sigma_ = +1;
};

inline constexpr SigmaBranch sigma_plus{};
inline const SigmaBranch sigma_minus = sigma_plus.flipped();

/// All real phases at one space-time point. Angles are kept unwrapped; no
/// mod-2pi reduction is ever applied.
struct PhaseState {
  double xi_plus = 0.0;
  double xi_minus = 0.0;
  double theta_plus = 0.0;
  double theta_minus = 0.0;
  double xi0 = 0.0;     ///< (xi_plus + xi_minus)/2
  double theta0 = 0.0;  ///< (theta_plus + theta_minus)/2
  double Xi = 0.0;      ///< (xi_minus - xi_plus)/2 = 4 sigma mu nu t
};

/// Builds the spectral point for lambda_1 = mu + i nu.
/// Rejects nu <= 0 (not in the upper half plane) and mu = 0 (the purely
/// imaginary branch divides l/mu and theta1/(2 mu) by zero and is out of scope).
inline SpectralPoint make_spectrum(double mu, double nu) {
  if (!(nu > 0.0)) throw ConfigError("make_spectrum: nu must be > 0");
  if (mu == 0.0 || !std::isfinite(mu) || !std::isfinite(nu))
    throw ConfigError("make_spectrum: mu must be finite and nonzero");
  SpectralPoint s;
  s.mu = mu;
  s.nu = nu;
  s.l = std::hypot(mu, nu);
  s.theta1 = std::atan2(nu, mu);
  s.beta = complexd(0.0, nu) / s.lambda1();
  return s;
}

/// Phase normalization removing all extra phase shifts: t0 = 0 and
/// x0 = (nu/mu) theta1 + ln(l/mu), with the coordinate shift x1 = theta1/(2 mu)
/// carried in x_shift so downstream formulas evaluate in the shifted frame and
/// the symmetry axis of the solution sits at x = 0.
inline NormingConstant normalize_phases(const SpectralPoint& s) {
  NormingConstant n;
  n.t0 = 0.0;
  n.x0 = (s.nu / s.mu) * s.theta1 + std::log(s.l / s.mu);
  n.x_shift = s.theta1 / (2.0 * s.mu);
  return n;
}

namespace detail {

// Phase formulas over a real or complex coordinate; the public phases() wraps
// the real case, the complex case drives the analytic continuation used by the
// forward-scattering contour.
template <class Z>
struct BasicPhases {
  Z xi_p, xi_m, th_p, th_m;
};

template <class Z>
inline BasicPhases<Z> phases_at(Z x, double t, int sigma, const SpectralPoint& s,
                                const NormingConstant& n) {
  const Z xe = x + n.x_shift;
  const double mu = s.mu, nu = s.nu;
  const double c = -n.x0 + std::log(s.l / mu);
  const double dsq = mu * mu - nu * nu;
  BasicPhases<Z> p;
  p.xi_p = 2.0 * nu * (xe - 2.0 * sigma * mu * t) + c;
  p.xi_m = 2.0 * nu * (xe + 2.0 * sigma * mu * t) + c;
  p.th_p = 2.0 * (mu * xe - sigma * dsq * t) + sigma * n.t0;
  p.th_m = 2.0 * (mu * xe + sigma * dsq * t) - sigma * n.t0;
  return p;
}

}  // namespace detail

/// Evaluates xi_pm = 2 nu (x -+ 2 sigma mu t) - x0 + ln(l/mu) and
/// theta_pm = 2 (mu x -+ sigma (mu^2 - nu^2) t) +- sigma t0 at x + x_shift,
/// plus the derived half-sum/half-difference phases.
inline PhaseState phases(double x, double t, SigmaBranch sigma, const SpectralPoint& s,
                         const NormingConstant& n) {
  if (!std::isfinite(x) || !std::isfinite(t))
    throw ConfigError("phases: x and t must be finite");
  const auto b = detail::phases_at<double>(x, t, sigma.value(), s, n);
  PhaseState p;
  p.xi_plus = b.xi_p;
  p.xi_minus = b.xi_m;
  p.theta_plus = b.th_p;
  p.theta_minus = b.th_m;
  p.xi0 = 0.5 * (b.xi_p + b.xi_m);
  p.theta0 = 0.5 * (b.th_p + b.th_m);
  p.Xi = 0.5 * (b.xi_m - b.xi_p);
  return p;
}

}  // namespace kb
