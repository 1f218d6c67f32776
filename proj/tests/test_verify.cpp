#include "kbsoliton/verify.hpp"

#include <catch_amalgamated.hpp>

#include "oracle_values.hpp"

using namespace kb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const SpectralPoint S = make_spectrum(0.25, 0.5);
const NormingConstant N0 = normalize_phases(S);

const PotentialFn zero_fn = [](complexd) { return complexd(0.0, 0.0); };

ScatterOptions fast_opts(double L = 30.0, int steps = 6000) {
  ScatterOptions o;
  o.L = L;
  o.steps = steps;
  return o;
}

}  // namespace

TEST_CASE("pde_residual: far-field subgrid is at the noise floor") {
  // beyond x_far = 27.6 the fields are below 1e-12; a coarse step keeps the
  // 1/h amplification of evaluation rounding below the same level
  GridSpec g{29.0, 35.0, 0.5, {1.0}};
  const ResidualReport r = pde_residual(S, N0, g, 1e-2, default_gamma_tol, 0.0);
  CHECK(r.r1_max < 1e-12);
  CHECK(r.r2_max < 1e-12);
  CHECK(r.excluded_nodes == 0);
}

TEST_CASE("pde_residual: second-order self convergence on a reduced grid") {
  GridSpec g{-8.0, 8.0, 0.4, {1.0, 11.0}};
  const ResidualReport r4 = pde_residual(S, N0, g, 4e-3);
  const ResidualReport r2 = pde_residual(S, N0, g, 2e-3);
  const ResidualReport r1 = pde_residual(S, N0, g, 1e-3);
  for (const double f : {r4.r1_max / r2.r1_max, r2.r1_max / r1.r1_max,
                         r4.r2_max / r2.r2_max, r2.r2_max / r1.r2_max}) {
    CHECK(f > 3.4);
    CHECK(f < 4.6);
  }
  CHECK(r1.included_nodes > 0);
  CHECK(r1.h == 1e-3);
  // exclusion count is deterministic
  CHECK(pde_residual(S, N0, g, 1e-3).excluded_nodes == r1.excluded_nodes);
}

TEST_CASE("pde_residual: unusable grid reports") {
  GridSpec g{-0.04, 0.04, 0.01, {0.0}};
  CHECK_THROWS_AS(pde_residual(S, N0, g, 1e-3), Error);
}

TEST_CASE("forward_scatter: free equation gives a = 1, b = 0") {
  for (const complexd lam : {complexd(0.5, 0.25), complexd(0.7, 0.0), complexd(-0.3, 0.6)}) {
    const auto r = forward_scatter(zero_fn, zero_fn, lam, sigma_plus, fast_opts(20.0, 2000));
    CHECK_THAT(std::abs(r.a - 1.0), WithinAbs(0.0, 1e-12));
    if (r.has_b) CHECK_THAT(std::abs(r.b), WithinAbs(0.0, 1e-12));
  }
  CHECK_THROWS_AS(forward_scatter(zero_fn, zero_fn, complexd(0.3, -0.1), sigma_plus),
                  ConfigError);
}

TEST_CASE("forward_scatter: Born approximation for a small bump") {
  // eta = eps exp(-x^2), u = 0: a ~ 1 + i eps sqrt(pi)/(2 lambda),
  // b ~ -i eps sqrt(pi) e^{-lambda^2}/(2 lambda); errors are O(eps^2)
  const double eps = 1e-3;
  const PotentialFn bump = [eps](complexd z) { return eps * std::exp(-z * z); };
  for (const double lam : {0.6, 1.1}) {
    const auto r = forward_scatter(zero_fn, bump, complexd(lam, 0.0), sigma_plus,
                                   fast_opts(8.0, 4000));
    const complexd a1 = complexd(0.0, 1.0) * eps * std::sqrt(M_PI) / (2.0 * lam);
    const complexd b1 = -a1 * std::exp(-lam * lam);
    CHECK(std::abs(r.a - 1.0 - a1) < 10.0 * eps * eps);
    CHECK(std::abs(r.b - b1) < 10.0 * eps * eps);
    CHECK(std::abs(r.a - 1.0) < 2.0 * std::abs(a1));
  }
}

TEST_CASE("forward_scatter: fourth-order self convergence") {
  const auto u1 = velocity_fn(S, N0, 1.0);
  const auto e1 = elevation_fn(S, N0, 1.0);
  const complexd lam(0.3, 0.3);
  const auto a_at = [&](int steps) {
    return forward_scatter(u1, e1, lam, sigma_plus, fast_opts(30.0, steps)).a;
  };
  const complexd a0 = a_at(1500), a1v = a_at(3000), a2 = a_at(6000);
  const double ratio = std::abs(a1v - a0) / std::abs(a2 - a1v);
  CHECK(ratio > 8.0);
  CHECK(ratio < 32.0);
}

TEST_CASE("forward_scatter: error estimate populated and enforced") {
  const auto u1 = velocity_fn(S, N0, 1.0);
  const auto e1 = elevation_fn(S, N0, 1.0);
  ScatterOptions o = fast_opts(30.0, 4000);
  o.estimate_error = true;
  o.error_tol = 1e-3;
  const auto r = forward_scatter(u1, e1, complexd(0.5, 0.2), sigma_plus, o);
  CHECK(std::isfinite(r.err_estimate));
  o.steps = 64;
  o.error_tol = 1e-12;
  CHECK_THROWS_AS(forward_scatter(u1, e1, complexd(0.5, 0.2), sigma_plus, o), Error);
}

TEST_CASE("forward_scatter: conjugation symmetry in (lambda, sigma)") {
  // a(lambda, sigma) = conj a(-conj lambda, -sigma)
  const auto u1 = velocity_fn(S, N0, 1.0);
  const auto e1 = elevation_fn(S, N0, 1.0);
  for (const complexd lam : {complexd(0.4, 0.5), complexd(-0.6, 0.3)}) {
    const complexd a = forward_scatter(u1, e1, lam, sigma_plus, fast_opts()).a;
    const complexd am =
        forward_scatter(u1, e1, -std::conj(lam), sigma_minus, fast_opts()).a;
    CHECK(std::abs(a - std::conj(am)) < 1e-8);
  }
}

TEST_CASE("forward_scatter: t = 0 detour is path independent") {
  const auto u0 = velocity_fn(S, N0, 0.0);
  const auto e0 = elevation_fn(S, N0, 0.0);
  const auto poles = detect_real_poles(S, N0, 0.0, 30.0);
  REQUIRE(poles.size() == 1);
  CHECK_THAT(poles[0], WithinAbs(0.0, 0.05));
  // the pole at the origin has trivial monodromy: arcs above and below the
  // axis must give the same scattering coefficient
  ScatterOptions up = fast_opts(30.0, 24000);
  up.detour_points = poles;
  ScatterOptions dn = up;
  dn.detour_radius = -1.0;
  const complexd lam(0.45, 0.35);
  const complexd a_up = forward_scatter(u0, e0, lam, sigma_plus, up).a;
  const complexd a_dn = forward_scatter(u0, e0, lam, sigma_plus, dn).a;
  CHECK(std::abs(a_up - a_dn) < 1e-7);
  // eigenvalue: a vanishes at lambda1
  const complexd a_l1 = forward_scatter(u0, e0, S.lambda1(), sigma_plus, up).a;
  CHECK(std::abs(a_l1) < 1e-6);
}

TEST_CASE("forward_scatter: overlapping detours are rejected") {
  ScatterOptions o = fast_opts();
  o.detour_points = {0.0, 0.1};
  CHECK_THROWS_AS(
      forward_scatter(velocity_fn(S, N0, 0.0), elevation_fn(S, N0, 0.0), complexd(0.5, 0.1),
                      sigma_plus, o),
      ConfigError);
}

TEST_CASE("find_spectrum: zero potential has no discrete spectrum") {
  const auto est = find_spectrum(zero_fn, zero_fn, sigma_plus,
                                 {complexd(0.3, 0.4), complexd(-0.2, 0.6)},
                                 fast_opts(20.0, 1500));
  CHECK(est.zeros.empty());
  CHECK(est.failed_guesses.size() == 2);
}

TEST_CASE("find_spectrum: recovers the eigenvalue pair at t = 0") {
  const auto u0 = velocity_fn(S, N0, 0.0);
  const auto e0 = elevation_fn(S, N0, 0.0);
  ScatterOptions o = fast_opts();
  o.detour_points = detect_real_poles(S, N0, 0.0, o.L);
  const complexd l1 = S.lambda1();
  const auto est = find_spectrum(u0, e0, sigma_plus,
                                 {l1 * complexd(1.1, 0.0), -std::conj(l1) * complexd(0.9, 0.0)},
                                 o);
  REQUIRE(est.zeros.size() == 2);
  for (size_t k = 0; k < est.zeros.size(); ++k) {
    const complexd z = est.zeros[k];
    CHECK(z.imag() > 0.0);
    CHECK(std::min(std::abs(z - l1), std::abs(z + std::conj(l1))) < 1e-3);
    CHECK(est.residuals[k] < 1e-8);
    CHECK(est.iterations[k] < 50);
  }
  // conjugate pairing {lambda, -conj lambda}
  CHECK(std::abs(est.zeros[0] + std::conj(est.zeros[1])) < 1e-3);
}

TEST_CASE("find_spectrum: both sigma branches yield the same zero set") {
  const auto u1 = velocity_fn(S, N0, 1.0);
  const auto e1 = elevation_fn(S, N0, 1.0);
  const complexd l1 = S.lambda1();
  const std::vector<complexd> guesses = {l1 * complexd(1.08, 0.0),
                                         -std::conj(l1) * complexd(0.93, 0.0)};
  const auto ep = find_spectrum(u1, e1, sigma_plus, guesses, fast_opts());
  const auto em = find_spectrum(u1, e1, sigma_minus, guesses, fast_opts());
  REQUIRE(ep.zeros.size() == 2);
  REQUIRE(em.zeros.size() == 2);
  for (const complexd z : ep.zeros) {
    double best = 1e9;
    for (const complexd w : em.zeros) best = std::min(best, std::abs(z - w));
    CHECK(best < 1e-6);
  }
}

TEST_CASE("find_spectrum rejects guesses outside C+") {
  CHECK_THROWS_AS(
      find_spectrum(zero_fn, zero_fn, sigma_plus, {complexd(0.3, -0.4)}, fast_opts()),
      ConfigError);
}

TEST_CASE("isospectrality: trivial at a single time, tight across times") {
  const auto one = isospectrality_check(S, N0, {0.0}, sigma_plus, fast_opts());
  CHECK(one.max_drift == 0.0);
  const auto iso = isospectrality_check(S, N0, {-5.0, 0.0, 5.0}, sigma_plus, fast_opts());
  CHECK(iso.max_drift < 1e-3);
  CHECK_THROWS_AS(isospectrality_check(S, N0, {}, sigma_plus, fast_opts()), ConfigError);
}

TEST_CASE("scattering regression against frozen reference values") {
  const auto u1 = velocity_fn(S, N0, 1.0);
  const auto e1 = elevation_fn(S, N0, 1.0);
  ScatterOptions o;
  o.L = 40.0;
  o.steps = 20000;
  CHECK(std::abs(forward_scatter(u1, e1, complexd(0.3, 0.3), sigma_plus, o).a -
                 oracle::a_03_03) < 1e-8);
  CHECK(std::abs(forward_scatter(u1, e1, complexd(0.45, 0.62), sigma_plus, o).a -
                 oracle::a_045_062) < 1e-8);
  const auto r = forward_scatter(u1, e1, complexd(0.7, 0.0), sigma_plus, o);
  CHECK(std::abs(r.a - oracle::a_07) < 1e-8);
  CHECK(r.has_b);
  CHECK(std::abs(r.b / r.a) < 1e-6);
}
