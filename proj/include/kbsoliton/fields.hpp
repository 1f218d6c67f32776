#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "kbsoliton/errors.hpp"
#include "kbsoliton/rh_algebra.hpp"
#include "kbsoliton/scaled.hpp"
#include "kbsoliton/spectrum.hpp"

namespace kb {

namespace detail {

// The denominator function D is a fixed sum of twelve exponential modes
// c_k e^{zeta_k}, each with a constant x-derivative rho_k = d zeta_k / dx, so
// every x-derivative of D is the same sum with coefficients c_k rho_k^n.
// Evaluation rescales by the largest Re zeta_k; `mass` bounds the attainable
// magnitude at that scale, so m[0]/mass is an O(1) proximity measure to the
// zero set of D (the singular points of the fields).
struct DState {
  complexd m[5]{};   // D^{(k)} times exp(-log_scale)
  double log_scale = 0.0;
  double mass = 1.0;
  double xi0 = 0.0;  // real part of xi0 phase (xi0 itself for real x)

  complexd q(int k) const { return m[k] / m[0]; }
  double nhat() const { return std::abs(m[0]) / mass; }
};

template <class Z>
inline DState eval_d(Z x, double t, int sigma, const SpectralPoint& s,
                     const NormingConstant& n, int nder) {
  const auto ph = phases_at<Z>(x, t, sigma, s, n);
  const Z xi0 = 0.5 * (ph.xi_p + ph.xi_m);
  const Z Xi = 0.5 * (ph.xi_m - ph.xi_p);
  const Z thh0 = 0.5 * (ph.th_p + ph.th_m) - s.theta1;
  const Z thh_p = ph.th_p - s.theta1;
  const Z thh_m = ph.th_m - s.theta1;

  const double mu = s.mu, nu = s.nu, l2 = s.l * s.l;
  const complexd I(0.0, 1.0);
  const double cm2 = mu * mu / (2.0 * l2);
  const double cd2 = (nu * nu - mu * mu) / (2.0 * l2);
  const double cr2 = nu * nu / (2.0 * l2);
  const complexd cb = I * mu * nu / l2;

  struct Mode {
    complexd coef;
    complexd zeta;
    complexd rho;
  };
  const Mode modes[12] = {
      {cm2, complexd(2.0) * xi0, 4.0 * nu},
      {cm2, complexd(-2.0) * xi0, -4.0 * nu},
      {cd2, complexd(2.0) * Xi, 0.0},
      {cd2, complexd(-2.0) * Xi, 0.0},
      {-cr2, 2.0 * I * thh0, 4.0 * I * mu},
      {-cr2, -2.0 * I * thh0, -4.0 * I * mu},
      {cb, complexd(2.0) * Xi, 0.0},
      {-cb, complexd(-2.0) * Xi, 0.0},
      // -2 i mu nu / l^2 * [sinh(xi-) e^{-i thh+} - sinh(xi+) e^{i thh-}]
      {-cb, complexd(ph.xi_m) - I * thh_p, complexd(2.0 * nu, -2.0 * mu)},
      {cb, complexd(-ph.xi_m) - I * thh_p, complexd(-2.0 * nu, -2.0 * mu)},
      {cb, complexd(ph.xi_p) + I * thh_m, complexd(2.0 * nu, 2.0 * mu)},
      {-cb, complexd(-ph.xi_p) + I * thh_m, complexd(-2.0 * nu, 2.0 * mu)},
  };

  DState st;
  st.xi0 = std::real(complexd(xi0));
  double emax = -std::numeric_limits<double>::infinity();
  for (const auto& mo : modes) emax = std::max(emax, std::real(complexd(mo.zeta)));
  st.log_scale = emax;
  st.mass = 0.0;
  for (const auto& mo : modes) {
    const complexd v = mo.coef * std::exp(complexd(mo.zeta) - emax);
    st.mass += std::abs(v);
    complexd r(1.0, 0.0);
    for (int k = 0; k <= nder; ++k) {
      st.m[k] += v * r;
      r *= mo.rho;
    }
  }
  return st;
}

// log-derivatives of D up to fourth order
struct LogDers {
  complexd q1, q2, q3, q4;
  double nhat = 1.0;
  double xi0 = 0.0;
  double log_scale = 0.0;
  complexd mantissa;
};

template <class Z>
inline LogDers logders(Z x, double t, int sigma, const SpectralPoint& s,
                       const NormingConstant& n, int nder) {
  const DState st = eval_d<Z>(x, t, sigma, s, n, nder);
  LogDers ld;
  ld.nhat = st.nhat();
  ld.xi0 = st.xi0;
  ld.log_scale = st.log_scale;
  ld.mantissa = st.m[0];
  const complexd a1 = st.q(1);
  ld.q1 = a1;
  if (nder >= 2) ld.q2 = st.q(2) - a1 * a1;
  if (nder >= 3) ld.q3 = st.q(3) - 3.0 * st.q(2) * a1 + 2.0 * a1 * a1 * a1;
  if (nder >= 4)
    ld.q4 = st.q(4) - 4.0 * st.q(3) * a1 - 3.0 * st.q(2) * st.q(2) +
            12.0 * st.q(2) * a1 * a1 - 6.0 * a1 * a1 * a1 * a1;
  return ld;
}

inline void require_nonsingular(const LogDers& ld, double tol, const char* who) {
  if (ld.nhat < tol) throw SingularPointError(std::string(who) + ": singular point", ld.nhat);
}

}  // namespace detail

/// N(x, sigma) with its first two analytic x-derivatives. N is entire in x,
/// tends to 1 as x -> +inf at fixed t, and satisfies N(x, -sigma) = conj N(x, sigma).
/// Values can overflow to inf for |xi0| beyond the exponent range of double;
/// the field evaluators below work with log-derivatives and never do.
struct NValue {
  complexd n;
  complexd n_x;
  complexd n_xx;
};

inline NValue n_value(double x, double t, SigmaBranch sigma, const SpectralPoint& s,
                      const NormingConstant& n0, double tol = default_gamma_tol) {
  const auto st = detail::eval_d<double>(x, t, sigma.value(), s, n0, 2);
  if (st.nhat() < tol) throw SingularPointError("n_value: singular point", st.nhat());
  const double nu = s.nu;
  const double lf = st.log_scale - 2.0 * st.xi0 + std::log(2.0 * s.l * s.l / (s.mu * s.mu));
  const double k = std::exp(lf);
  NValue v;
  v.n = st.m[0] * k;
  v.n_x = (st.m[1] - 4.0 * nu * st.m[0]) * k;
  v.n_xx = (st.m[2] - 8.0 * nu * st.m[1] + 16.0 * nu * nu * st.m[0]) * k;
  return v;
}

/// Gamma evaluated directly from coordinates (gamma() itself is the
/// PhaseState-level routine in rh_algebra.hpp).
inline GammaValue gamma_at(double x, double t, SigmaBranch sigma, const SpectralPoint& s,
                           const NormingConstant& n0) {
  return gamma(phases(x, t, sigma, s, n0), s);
}

struct UnwrapOptions {
  double x_far = std::numeric_limits<double>::quiet_NaN();  ///< auto from nu when NaN
  double max_arg_step = 1.5;  ///< refinement bound, below pi/2
  int max_depth = 48;
};

namespace detail {

inline double auto_x_far(double x, double t, const SpectralPoint& s,
                         const NormingConstant& n) {
  // both xi_pm >= ~27.6 so e^{-xi} < 1e-12 relative to 1
  const double off = (n.x0 - std::log(s.l / s.mu)) / (2.0 * s.nu) - n.x_shift;
  const double far = off + 2.0 * s.mu * std::abs(t) + 13.9 / s.nu;
  return std::max(x + 1.0, far);
}

}  // namespace detail

/// The charge omega+ = (1/2) int_x^inf u = sigma * (unwrapped arg N), with the
/// branch fixed by continuity from the right far field where N -> 1. The walk
/// from x_far down to x keeps |delta arg| below max_arg_step by bisecting
/// steps; exceeding the refinement depth reports a branch-tracking failure.
inline double omega_plus(double x, double t, SigmaBranch sigma, const SpectralPoint& s,
                         const NormingConstant& n0, const UnwrapOptions& opt = {}) {
  const double xf = std::isnan(opt.x_far) ? detail::auto_x_far(x, t, s, n0) : opt.x_far;
  const auto arg_of = [&](double xx) {
    return std::arg(detail::eval_d<double>(xx, t, sigma.value(), s, n0, 0).m[0]);
  };
  // initial resolution follows the faster of the two phase scales
  const double scale = std::min(0.5 / s.nu, 0.5 / s.mu);
  double total = arg_of(xf);
  double cur = xf;
  double prev_arg = total;
  total = std::remainder(total, 2.0 * M_PI);  // ~0 at the far field
  const double dir = (x < xf) ? -1.0 : 1.0;
  while ((cur - x) * dir < 0.0) {
    double step = std::min(scale, std::abs(cur - x));
    int depth = 0;
    for (;;) {
      const double nxt = cur + dir * step;
      const double a = arg_of(nxt);
      const double d = std::remainder(a - prev_arg, 2.0 * M_PI);
      if (std::abs(d) < opt.max_arg_step) {
        total += d;
        prev_arg = a;
        cur = nxt;
        break;
      }
      if (++depth > opt.max_depth)
        throw BranchTrackingError("omega_plus: arg step bound exceeded (near singularity)");
      step *= 0.5;
    }
  }
  return sigma.value() * total;
}

namespace detail {

template <class Z>
inline complexd velocity_core(Z x, double t, const SpectralPoint& s, const NormingConstant& n0,
                              int sigma, double tol, const char* who) {
  const LogDers p = logders<Z>(x, t, sigma, s, n0, 1);
  const LogDers m = logders<Z>(x, t, -sigma, s, n0, 1);
  require_nonsingular(p, tol, who);
  require_nonsingular(m, tol, who);
  return complexd(0.0, double(sigma)) * (p.q1 - m.q1);
}

template <class Z>
inline complexd elevation_core(Z x, double t, const SpectralPoint& s, const NormingConstant& n0,
                               int sigma, double tol, const char* who) {
  const LogDers p = logders<Z>(x, t, sigma, s, n0, 2);
  const LogDers m = logders<Z>(x, t, -sigma, s, n0, 2);
  require_nonsingular(p, tol, who);
  require_nonsingular(m, tol, who);
  return -0.5 * (p.q2 + m.q2);
}

inline double take_real(complexd v, const char* who) {
  const double scale = std::max(1.0, std::abs(v));
  if (std::abs(v.imag()) > 1e-10 * scale)
    throw Error(std::string(who) + ": imaginary residue above tolerance");
  return v.real();
}

}  // namespace detail

/// Fluid velocity u = i sigma (Nbar N_x - N Nbar_x)/(N Nbar); real and
/// independent of the branch choice. The imaginary residue of the complex
/// evaluation is checked against 1e-10 relative before being discarded.
inline double velocity(double x, double t, const SpectralPoint& s, const NormingConstant& n0,
                       SigmaBranch sigma = sigma_plus, double tol = default_gamma_tol) {
  return detail::take_real(
      detail::velocity_core<double>(x, t, s, n0, sigma.value(), tol, "velocity"), "velocity");
}

/// Surface elevation eta = -(1/2) (ln N Nbar)_xx, evaluated analytically as
/// -(1/2) [ (ln N)'' + (ln Nbar)'' ].
inline double elevation(double x, double t, const SpectralPoint& s, const NormingConstant& n0,
                        SigmaBranch sigma = sigma_plus, double tol = default_gamma_tol) {
  return detail::take_real(
      detail::elevation_core<double>(x, t, s, n0, sigma.value(), tol, "elevation"), "elevation");
}

/// Analytic bundle used by the verification module: u, eta and their exact
/// x-derivatives from the third and fourth log-derivatives of N.
struct FieldDerivs {
  double u, u_x, u_xxx;
  double eta, eta_x;
};

inline FieldDerivs field_derivs(double x, double t, const SpectralPoint& s,
                                const NormingConstant& n0, double tol = default_gamma_tol) {
  const auto p = detail::logders<double>(x, t, 1, s, n0, 4);
  const auto m = detail::logders<double>(x, t, -1, s, n0, 4);
  detail::require_nonsingular(p, tol, "field_derivs");
  detail::require_nonsingular(m, tol, "field_derivs");
  const complexd I(0.0, 1.0);
  FieldDerivs f;
  f.u = (I * (p.q1 - m.q1)).real();
  f.u_x = (I * (p.q2 - m.q2)).real();
  f.u_xxx = (I * (p.q4 - m.q4)).real();
  f.eta = (-0.5 * (p.q2 + m.q2)).real();
  f.eta_x = (-0.5 * (p.q3 + m.q3)).real();
  return f;
}

/// Velocity continued to complex x (the fields are meromorphic in x); used by
/// the forward-scattering contour. On the real axis it agrees with velocity().
inline complexd velocity_c(complexd z, double t, const SpectralPoint& s,
                           const NormingConstant& n0, double tol = default_gamma_tol) {
  return detail::velocity_core<complexd>(z, t, s, n0, +1, tol, "velocity_c");
}

inline complexd elevation_c(complexd z, double t, const SpectralPoint& s,
                            const NormingConstant& n0, double tol = default_gamma_tol) {
  return detail::elevation_core<complexd>(z, t, s, n0, +1, tol, "elevation_c");
}

/// Residual of the identity f+ conj(psi+) + conj(f-) conj(psi-) = -(1/(4 nu)) (ln Nbar)_x,
/// with the Jost vector from the linear solve on the left and the analytic
/// log-derivative of N on the right. Returns |lhs - rhs| (diagnostic; callers
/// normalize by the common scale when needed).
inline double g_psi_identity_check(double x, double t, SigmaBranch sigma,
                                   const SpectralPoint& s, const NormingConstant& n0,
                                   double tol = default_gamma_tol) {
  const double om = omega_plus(x, t, sigma, s, n0);
  const PhaseState p = phases(x, t, sigma, s, n0);
  const JostVector j = jost_linear_solve(p, s, sigma, om, tol);
  const double k = s.l / s.mu;
  const complexd fp =
      k * std::exp(complexd(-p.xi_plus, p.theta_plus + 2.0 * sigma.value() * om));
  const complexd fm =
      k * std::exp(complexd(-p.xi_minus, p.theta_minus - 2.0 * sigma.value() * om));
  const complexd lhs = fp * std::conj(j.psi_plus) + std::conj(fm) * std::conj(j.psi_minus);
  const auto ld = detail::logders<double>(x, t, sigma.value(), s, n0, 1);
  const complexd dlogN = ld.q1 - 4.0 * s.nu;
  const complexd rhs = -std::conj(dlogN) / (4.0 * s.nu);
  return std::abs(lhs - rhs);
}

/// Uniform x-grid times a list of time slices.
struct GridSpec {
  double x_min = 0.0;
  double x_max = 0.0;
  double x_step = 0.0;
  std::vector<double> times;

  int nx() const { return static_cast<int>(std::lround((x_max - x_min) / x_step)) + 1; }
};

inline void validate_grid(const GridSpec& g) {
  // x_max == x_min is the degenerate single-point grid
  if (!(g.x_max >= g.x_min)) throw ConfigError("grid: x_max must not precede x_min");
  if (!(g.x_step > 0.0)) throw ConfigError("grid: x_step must be positive");
  const double n = (g.x_max - g.x_min) / g.x_step;
  if (std::abs(n - std::lround(n)) > 1e-6)
    throw ConfigError("grid: x_step does not divide the range");
}

/// One grid node. At singular nodes u and eta hold quiet NaNs and the flag is
/// set; singularities are data, not failures.
struct FieldSample {
  double x = 0.0;
  double t = 0.0;
  double u = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  complexd n;
  bool singular = false;
};

/// Evaluates the grid row-major in t then x. A node is flagged singular when
/// the scaled Gamma magnitude falls below tol, when Gamma changes sign inside
/// the node's cell [x - step/2, x + step/2] (the cell contains a pole of the
/// pre-normalized eigenfunctions), or when |N| is below tol at the node (a
/// genuine field singularity).
inline std::vector<FieldSample> evaluate_grid(const GridSpec& g, const SpectralPoint& s,
                                              const NormingConstant& n0,
                                              double tol = default_gamma_tol) {
  validate_grid(g);
  std::vector<FieldSample> out;
  const int nx = g.nx();
  out.reserve(static_cast<size_t>(nx) * g.times.size());
  for (const double t : g.times) {
    for (int i = 0; i < nx; ++i) {
      const double x = g.x_min + i * g.x_step;
      FieldSample fs;
      fs.x = x;
      fs.t = t;
      const GammaValue gv = gamma_at(x, t, sigma_plus, s, n0);
      fs.gamma = gv.gamma;
      const GammaValue gl = gamma_at(x - 0.5 * g.x_step, t, sigma_plus, s, n0);
      const GammaValue gr = gamma_at(x + 0.5 * g.x_step, t, sigma_plus, s, n0);
      const auto st = detail::eval_d<double>(x, t, 1, s, n0, 2);
      const bool sign_change = gl.scaled * gr.scaled < 0.0;
      fs.singular = std::abs(gv.scaled) < tol || sign_change || st.nhat() < tol;
      if (fs.singular) {
        fs.u = std::numeric_limits<double>::quiet_NaN();
        fs.eta = std::numeric_limits<double>::quiet_NaN();
      } else {
        fs.u = velocity(x, t, s, n0, sigma_plus, tol);
        fs.eta = elevation(x, t, s, n0, sigma_plus, tol);
      }
      const double lf = st.log_scale - 2.0 * st.xi0 + std::log(2.0 * s.l * s.l / (s.mu * s.mu));
      fs.n = st.m[0] * std::exp(lf);
      out.push_back(fs);
    }
  }
  return out;
}

}  // namespace kb
