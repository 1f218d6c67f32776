#pragma once

#include <array>
#include <cmath>
#include <complex>

#include "kbsoliton/errors.hpp"
#include "kbsoliton/scaled.hpp"
#include "kbsoliton/spectrum.hpp"

namespace kb {

/// Default tolerance on the scaled determinant function below which the
/// discrete Riemann-Hilbert system is treated as singular.
inline constexpr double default_gamma_tol = 1e-9;

/// 2x2 transfer matrix of the reflectionless system. Entries are stored with
/// the unit-modulus factor e^{2 i sigma omega+} stripped; phase_exponent holds
/// the stripped angle 2 sigma omega+ so the full entries are
/// entries[k] * exp(i phase_exponent).
struct TransferMatrix {
  std::array<complexd, 4> entries{};  // row-major
  double phase_exponent = 0.0;

  complexd stripped(int i, int j) const { return entries[2 * i + j]; }
  complexd full(int i, int j) const {
    return entries[2 * i + j] * std::polar(1.0, phase_exponent);
  }
  complexd det_full() const {
    const complexd d = entries[0] * entries[3] - entries[1] * entries[2];
    return d * std::polar(1.0, 2.0 * phase_exponent);
  }
};

/// The two augmented Jost values psi(x, conj(lambda_1), sigma) and
/// psi(x, -lambda_1, sigma); both tend to 1 as x -> +inf.
struct JostVector {
  complexd psi_plus;
  complexd psi_minus;
};

/// Real determinant function Gamma. gamma is the raw value (it can overflow to
/// inf for |xi0| beyond ~355); scaled = gamma/scale is always finite and keeps
/// the sign, which is what singularity tests and bisection use.
struct GammaValue {
  double gamma = 0.0;
  double scale = 1.0;
  double scaled = 0.0;
};

/// Gamma = 2 sinh(xi+) sinh(xi-) + (nu^2/l^2) (cos 2(theta0 - theta1) - cosh 2 xi0).
/// Zero is a meaningful value (singular point of the discrete RH system), so no
/// tolerance is applied here.
inline GammaValue gamma(const PhaseState& p, const SpectralPoint& s) {
  const double r2 = (s.nu * s.nu) / (s.l * s.l);  // |beta|^2
  const double m2 = (s.mu * s.mu) / (s.l * s.l);  // 1 - |beta|^2
  const double c = std::cos(2.0 * (p.theta0 - s.theta1));
  GammaValue g;
  // cosh form, equivalent to the defining formula via
  // 2 sinh a sinh b = cosh(a+b) - cosh(a-b); immune to the cosh(2 xi0)
  // cancellation of the raw expression at large |xi0|
  const double axi0 = std::abs(2.0 * p.xi0);
  const double aXi = std::abs(2.0 * p.Xi);
  const double emax = std::max(axi0, aXi);
  if (emax < 300.0) {
    g.gamma = m2 * std::cosh(2.0 * p.xi0) - std::cosh(2.0 * p.Xi) + r2 * c;
    g.scale = m2 * std::cosh(2.0 * p.xi0) + std::cosh(2.0 * p.Xi) + r2;
    g.scaled = g.gamma / g.scale;
  } else {
    // log-space: factor out e^{emax}
    const double ch0 = 0.5 * (std::exp(axi0 - emax) + std::exp(-axi0 - emax));
    const double chX = 0.5 * (std::exp(aXi - emax) + std::exp(-aXi - emax));
    const double sm = m2 * ch0 - chX + r2 * c * std::exp(-emax);
    const double sc = m2 * ch0 + chX + r2 * std::exp(-emax);
    g.scaled = sm / sc;
    g.gamma = sm * std::exp(emax);  // raw value may reach inf here
    g.scale = sc * std::exp(emax);
  }
  return g;
}

/// T per the reflectionless dressing, entries phase-stripped:
///   (l/mu) [[e^{-xi+} e^{i th+},        conj(beta) e^{-xi-} e^{-i th-}],
///           [beta e^{-xi+} e^{i th+},   e^{-xi-} e^{-i th-}]]
inline TransferMatrix transfer_matrix(const PhaseState& p, const SpectralPoint& s,
                                      SigmaBranch sigma, double omega_plus) {
  const double k = s.l / s.mu;
  const complexd ep = k * std::exp(complexd(-p.xi_plus, p.theta_plus));
  const complexd em = k * std::exp(complexd(-p.xi_minus, -p.theta_minus));
  TransferMatrix t;
  t.entries = {ep, std::conj(s.beta) * em, s.beta * ep, em};
  t.phase_exponent = 2.0 * sigma.value() * omega_plus;
  return t;
}

/// Inverse of the conjugate transfer matrix, in closed form:
///   (l/mu) [[e^{xi+} e^{i th+},          -beta e^{xi+} e^{i th+}],
///           [-conj(beta) e^{xi-} e^{-i th-},  e^{xi-} e^{-i th-}]]
/// Rejects |det T| below 1e-300, where the closed form stops being the inverse
/// of anything representable.
inline TransferMatrix inverse_conjugate_transfer(const PhaseState& p, const SpectralPoint& s,
                                                 SigmaBranch sigma, double omega_plus) {
  // |det T| = e^{-2 xi0}
  if (2.0 * p.xi0 > 690.0)
    throw ConfigError("inverse_conjugate_transfer: |det T| underflows (2 xi0 > 690)");
  const double k = s.l / s.mu;
  const complexd ep = k * std::exp(complexd(p.xi_plus, p.theta_plus));
  const complexd em = k * std::exp(complexd(p.xi_minus, -p.theta_minus));
  TransferMatrix t;
  t.entries = {ep, -s.beta * ep, -std::conj(s.beta) * em, em};
  t.phase_exponent = 2.0 * sigma.value() * omega_plus;
  return t;
}

/// Closed-form discrete Jost vector. The printed form of this expression in
/// the source material is the conjugated vector; the components here are its
/// componentwise conjugate, which is what the linear solve returns:
///   psi+ = [ (mu^2/l^2) e^{2 xi0} - (1-conj(b)) e^{-2 Xi} + b(1-b) e^{2 i th0} ] / (2 Gamma)
///          - (mu/(2 l Gamma)) [ e^{xi- + i th+} - (1-b) e^{-xi- + i th+}
///                               + conj(b) e^{xi+ - i th-} ] e^{2 i sigma omega+}
/// and the mirror expression for psi-. Large |xi| is handled by exponent
/// rescaling so the ratios stay O(1).
inline JostVector jost_closed_form(const PhaseState& p, const SpectralPoint& s,
                                   SigmaBranch sigma, double omega_plus,
                                   double gamma_tol = default_gamma_tol) {
  const GammaValue g = gamma(p, s);
  if (std::abs(g.scaled) < gamma_tol)
    throw SingularPointError("jost_closed_form: |Gamma| below tolerance", g.scaled);

  using detail::ExpTerm;
  const complexd b = s.beta;
  const complexd bb = std::conj(b);
  const double m2 = (s.mu * s.mu) / (s.l * s.l);
  const double r2 = (s.nu * s.nu) / (s.l * s.l);
  const complexd i2th0(0.0, 2.0 * p.theta0);
  const complexd ith_p(0.0, p.theta_plus);
  const complexd ith_m(0.0, p.theta_minus);
  const complexd phase = std::polar(1.0, 2.0 * sigma.value() * omega_plus);

  // 2 Gamma as a sum of exponentials (same modes as gamma(), times 2)
  const complexd i2thh(0.0, 2.0 * (p.theta0 - s.theta1));
  const auto two_gamma = detail::scaled_sum({
      ExpTerm{m2, 2.0 * p.xi0}, ExpTerm{m2, -2.0 * p.xi0},
      ExpTerm{-1.0, 2.0 * p.Xi}, ExpTerm{-1.0, -2.0 * p.Xi},
      ExpTerm{r2, i2thh}, ExpTerm{r2, -i2thh}});

  const auto num_p = detail::scaled_sum({ExpTerm{m2, 2.0 * p.xi0},
                                         ExpTerm{-(1.0 - bb), -2.0 * p.Xi},
                                         ExpTerm{b * (1.0 - b), i2th0}});
  const auto w_p = detail::scaled_sum({ExpTerm{1.0, p.xi_minus + ith_p},
                                       ExpTerm{-(1.0 - b), -p.xi_minus + ith_p},
                                       ExpTerm{bb, p.xi_plus - ith_m}});
  const auto num_m = detail::scaled_sum({ExpTerm{m2, 2.0 * p.xi0},
                                         ExpTerm{-(1.0 - b), 2.0 * p.Xi},
                                         ExpTerm{bb * (1.0 - bb), -i2th0}});
  const auto w_m = detail::scaled_sum({ExpTerm{1.0, p.xi_plus - ith_m},
                                       ExpTerm{-(1.0 - bb), -p.xi_plus - ith_m},
                                       ExpTerm{b, p.xi_minus + ith_p}});

  const double k = s.mu / s.l;
  JostVector j;
  j.psi_plus = detail::scaled_ratio(num_p, two_gamma) -
               k * detail::scaled_ratio(w_p, two_gamma) * phase;
  j.psi_minus = detail::scaled_ratio(num_m, two_gamma) -
                k * detail::scaled_ratio(w_m, two_gamma) * phase;
  return j;
}

/// Solves the 2x2 closure Psi = e - T conj(Psi) by direct elimination of
/// (Tbar^{-1} - T) conj(Psi) = (Tbar^{-1} - 1) e via the cofactor formula,
/// then conjugates. Near-singular systems report the offending scaled Gamma.
inline JostVector jost_linear_solve(const PhaseState& p, const SpectralPoint& s,
                                    SigmaBranch sigma, double omega_plus,
                                    double gamma_tol = default_gamma_tol) {
  const GammaValue g = gamma(p, s);
  if (std::abs(g.scaled) < gamma_tol)
    throw SingularPointError("jost_linear_solve: |det(Tbar^-1 - T)| below tolerance", g.scaled);

  const TransferMatrix t = transfer_matrix(p, s, sigma, omega_plus);
  const TransferMatrix ti = inverse_conjugate_transfer(p, s, sigma, omega_plus);
  const complexd m00 = ti.full(0, 0) - t.full(0, 0);
  const complexd m01 = ti.full(0, 1) - t.full(0, 1);
  const complexd m10 = ti.full(1, 0) - t.full(1, 0);
  const complexd m11 = ti.full(1, 1) - t.full(1, 1);
  const complexd r0 = ti.full(0, 0) + ti.full(0, 1) - 1.0;
  const complexd r1 = ti.full(1, 0) + ti.full(1, 1) - 1.0;
  const complexd det = m00 * m11 - m01 * m10;
  const complexd c0 = (r0 * m11 - r1 * m01) / det;
  const complexd c1 = (r1 * m00 - r0 * m10) / det;
  return {std::conj(c0), std::conj(c1)};
}

/// The eigenfunction at lambda = 0, psi(x, 0, sigma) = 1 - 2 f . conj(Psi)
/// with the row vector f = (beta f+, conj(beta) conj(f-)).
inline complexd psi_at_lambda_zero(const PhaseState& p, const SpectralPoint& s,
                                   SigmaBranch sigma, double omega_plus,
                                   double gamma_tol = default_gamma_tol) {
  const JostVector j = jost_linear_solve(p, s, sigma, omega_plus, gamma_tol);
  const double k = s.l / s.mu;
  const complexd phase = std::polar(1.0, 2.0 * sigma.value() * omega_plus);
  const complexd f0 = s.beta * k * std::exp(complexd(-p.xi_plus, p.theta_plus)) * phase;
  const complexd f1 =
      std::conj(s.beta) * k * std::exp(complexd(-p.xi_minus, -p.theta_minus)) * phase;
  return 1.0 - 2.0 * (f0 * std::conj(j.psi_plus) + f1 * std::conj(j.psi_minus));
}

}  // namespace kb
