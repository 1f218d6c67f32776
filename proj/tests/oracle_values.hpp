// Frozen expected values for the lambda1 = 0.25 + 0.5i configuration, computed
// with an independent high-precision reference implementation (finite
// differences, quadrature and linear solves only) and cross-checked against
// each other before freezing.
#pragma once

#include <complex>

namespace oracle {

using cd = std::complex<double>;

// spectral data
inline constexpr double l_ref = 0.55901699437494745;
inline constexpr double theta1_ref = 1.1071487177940904;
inline constexpr cd beta_ref{0.8, 0.4};
inline constexpr double l_disp = 0.50249378105604448;

// normalization: t0 = 0, x0 = (nu/mu) theta1 + ln(l/mu), shift = theta1/(2 mu)
inline constexpr double x0_ref = 3.0190163918052311;
inline constexpr double shift_ref = 2.2142974355881808;
inline constexpr double x0_disp = 0.014942030675700171;

// phases at (x,t,sigma) = (1,1,+1) with directly-set constants
// {x0 = x0_ref, t0 = 0, shift 0}: literal formula values
inline constexpr double xi_p_direct = -1.7142974355881808;
inline constexpr double xi_m_direct = -0.71429743558818082;
inline constexpr double th_p_direct = 0.875;
inline constexpr double th_m_direct = 0.125;

// determinant function, normalized constants
inline constexpr double gamma_11 = -0.35839965190400586;
inline constexpr double gamma_10 = 0.18468098291123786;
inline constexpr double gamma_05_02 = -0.0093845791437291437;

// Jost vector at (1, 0, +1), omega+ = 0 (exact at t = 0)
inline constexpr cd jost_plus_10{4.2539826113713382, -1.1079853953935022};
inline constexpr cd jost_minus_10{4.2539826113713382, +1.1079853953935022};

// psi(x, 0, sigma) at (0.5, 0.2, +1); omega+ = 2.1325122393485332
inline constexpr double omega_05_02 = 2.1325122393485332;
inline constexpr cd psi_zero_05_02{2.1241923268815062, -3.3752564912597629};

// N and derivatives at (1, 1, +1), normalized constants
inline constexpr cd n_11{-0.15344307426734186, 0.35443693474053845};
inline constexpr cd nx_11{0.055479221101725699, -0.28054930908791736};
inline constexpr cd nxx_11{0.82635903049606096, 0.81865549465267662};

// fields, normalized constants
inline constexpr double u_11 = -0.31352703076367633;
inline constexpr double eta_11 = -0.59601989162017177;
inline constexpr double eta_01 = -0.24343891435260723;
inline constexpr double omega_11 = 1.9793566763908375;
inline constexpr double u_08_1 = -1.2189212849342075;
inline constexpr double eta_08_1 = -1.5877055460235652;

// scattering coefficient a(lambda, sigma=+1) at t = 1, L = 40, 20000 RK4 steps
inline constexpr cd a_03_03{-0.082475823455001956, 0.13128425348297837};
inline constexpr cd a_045_062{-0.013775602418133047, -0.10937348098397483};
inline constexpr cd a_07{-0.87917210901154397, -0.47650435754433079};

}  // namespace oracle
