#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "kbsoliton/errors.hpp"
#include "kbsoliton/fields.hpp"
#include "kbsoliton/spectrum.hpp"

namespace kb {

/// Max and L2 norms of the two KB residuals on a masked grid.
/// r1 = u_t + eta_x + u u_x,  r2 = eta_t - (1/4) u_xxx + (u eta)_x.
struct ResidualReport {
  double h = 0.0;
  double r1_max = 0.0;
  double r1_l2 = 0.0;
  double r2_max = 0.0;
  double r2_l2 = 0.0;
  int excluded_nodes = 0;
  int included_nodes = 0;
};

/// Finite-difference residuals of the KB system on the grid, away from
/// singular nodes. Stencil policy (all central, order >= 2, every step scales
/// with h so halving h quarters both residuals):
///   u_t, eta_t      3-point central, step h/2
///   u_x, eta_x      3-point central, step h
///   u_xxx           3-point second difference of the analytic u_x, step h/2
///   (u eta)_x       5-point 4th-order central, step h
/// Nodes are excluded when flagged singular, within 5h of a flagged node, in
/// the lowest `gamma_percentile` percent by |Gamma|/scale, or when a stencil
/// point lands on a singular evaluation.
inline ResidualReport pde_residual(const SpectralPoint& s, const NormingConstant& n0,
                                   const GridSpec& grid, double h,
                                   double tol = default_gamma_tol,
                                   double gamma_percentile = 10.0) {
  validate_grid(grid);
  if (!(h > 0.0)) throw ConfigError("pde_residual: h must be positive");

  struct Node {
    double x, t, ghat;
    bool flagged;
  };
  std::vector<Node> nodes;
  const int nx = grid.nx();
  nodes.reserve(static_cast<size_t>(nx) * grid.times.size());
  for (const double t : grid.times) {
    for (int i = 0; i < nx; ++i) {
      const double x = grid.x_min + i * grid.x_step;
      const GammaValue g = gamma_at(x, t, sigma_plus, s, n0);
      const GammaValue gl = gamma_at(x - 0.5 * grid.x_step, t, sigma_plus, s, n0);
      const GammaValue gr = gamma_at(x + 0.5 * grid.x_step, t, sigma_plus, s, n0);
      const auto st = detail::eval_d<double>(x, t, 1, s, n0, 0);
      const bool flagged =
          std::abs(g.scaled) < tol || gl.scaled * gr.scaled < 0.0 || st.nhat() < tol;
      nodes.push_back({x, t, std::abs(g.scaled), flagged});
    }
  }

  double cutoff = -1.0;
  if (gamma_percentile > 0.0) {
    std::vector<double> gh;
    gh.reserve(nodes.size());
    for (const auto& n : nodes) gh.push_back(n.ghat);
    std::sort(gh.begin(), gh.end());
    const size_t k = static_cast<size_t>(gamma_percentile / 100.0 * (gh.size() - 1));
    cutoff = gh[k];
  }

  ResidualReport rep;
  rep.h = h;
  double s1 = 0.0, s2 = 0.0;
  for (const auto& nd : nodes) {
    bool excl = nd.flagged || nd.ghat < cutoff;
    if (!excl) {
      for (const auto& other : nodes)
        if (other.flagged && other.t == nd.t && std::abs(other.x - nd.x) <= 5.0 * h) {
          excl = true;
          break;
        }
    }
    if (excl) {
      ++rep.excluded_nodes;
      continue;
    }
    try {
      const double ht = 0.5 * h;
      const FieldDerivs c = field_derivs(nd.x, nd.t, s, n0, tol);
      const FieldDerivs xp = field_derivs(nd.x + h, nd.t, s, n0, tol);
      const FieldDerivs xm = field_derivs(nd.x - h, nd.t, s, n0, tol);
      const FieldDerivs x2p = field_derivs(nd.x + 2.0 * h, nd.t, s, n0, tol);
      const FieldDerivs x2m = field_derivs(nd.x - 2.0 * h, nd.t, s, n0, tol);
      const FieldDerivs tp = field_derivs(nd.x, nd.t + ht, s, n0, tol);
      const FieldDerivs tm = field_derivs(nd.x, nd.t - ht, s, n0, tol);
      const FieldDerivs xtp = field_derivs(nd.x + ht, nd.t, s, n0, tol);
      const FieldDerivs xtm = field_derivs(nd.x - ht, nd.t, s, n0, tol);

      const double u_t = (tp.u - tm.u) / (2.0 * ht);
      const double eta_t = (tp.eta - tm.eta) / (2.0 * ht);
      const double u_x = (xp.u - xm.u) / (2.0 * h);
      const double eta_x = (xp.eta - xm.eta) / (2.0 * h);
      const double u_xxx = (xtp.u_x - 2.0 * c.u_x + xtm.u_x) / (ht * ht);
      const double ue_x = (-(x2p.u * x2p.eta) + 8.0 * (xp.u * xp.eta) -
                           8.0 * (xm.u * xm.eta) + (x2m.u * x2m.eta)) /
                          (12.0 * h);
      const double r1 = u_t + eta_x + c.u * u_x;
      const double r2 = eta_t - 0.25 * u_xxx + ue_x;
      rep.r1_max = std::max(rep.r1_max, std::abs(r1));
      rep.r2_max = std::max(rep.r2_max, std::abs(r2));
      s1 += r1 * r1;
      s2 += r2 * r2;
      ++rep.included_nodes;
    } catch (const SingularPointError&) {
      ++rep.excluded_nodes;
    }
  }
  if (rep.included_nodes == 0 ||
      rep.excluded_nodes > static_cast<int>(nodes.size()) / 2)
    throw Error("pde_residual: more than half the grid excluded, grid unusable");
  rep.r1_l2 = std::sqrt(s1 / rep.included_nodes);
  rep.r2_l2 = std::sqrt(s2 / rep.included_nodes);
  return rep;
}

using PotentialFn = std::function<complexd(complexd)>;

/// Complex-x evaluators of the constructed fields at fixed t, for the
/// forward-scattering contour.
inline PotentialFn velocity_fn(const SpectralPoint& s, const NormingConstant& n0, double t) {
  return [s, n0, t](complexd z) { return velocity_c(z, t, s, n0); };
}
inline PotentialFn elevation_fn(const SpectralPoint& s, const NormingConstant& n0, double t) {
  return [s, n0, t](complexd z) { return elevation_c(z, t, s, n0); };
}

struct ScatterOptions {
  double L = 40.0;
  int steps = 20000;
  std::vector<double> detour_points;  ///< real poles the path arcs over
  double detour_radius = 1.0;         ///< negative: arc below the axis instead
  bool estimate_error = false;  ///< second pass at steps/2, sets err_estimate
  double error_tol = 1e-6;
};

struct ScatteringResult {
  complexd lambda;
  int sigma = +1;
  complexd a;
  complexd b;        ///< populated for real lambda only
  bool has_b = false;
  double domain_half_width = 0.0;
  int step_count = 0;
  double err_estimate = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct PathSegment {
  // z(q), z'(q) for q in [0, len]
  std::function<complexd(double)> z;
  std::function<complexd(double)> dz;
  double len;
};

inline std::vector<PathSegment> scatter_path(double L, const std::vector<double>& poles,
                                             double radius) {
  std::vector<double> ps = poles;
  std::sort(ps.begin(), ps.end());
  std::vector<PathSegment> segs;
  const bool below = radius < 0.0;
  double cur = -L;
  auto line = [&](double a, double b) {
    if (b - a <= 0.0) return;
    segs.push_back({[a](double q) { return complexd(a + q, 0.0); },
                    [](double) { return complexd(1.0, 0.0); }, b - a});
  };
  for (double p : ps) {
    if (p <= -L || p >= L) continue;
    double r = std::min({std::abs(radius), (p - cur) * 0.9, (L - p) * 0.9});
    if (!(r > 0.0)) throw ConfigError("forward_scatter: detour does not fit in [-L, L]");
    line(cur, p - r);
    if (below)
      segs.push_back(
          {[p, r](double q) { return p + r * std::exp(complexd(0.0, M_PI + q / r)); },
           [p, r](double q) {
             return complexd(0.0, 1.0) * std::exp(complexd(0.0, M_PI + q / r));
           },
           M_PI * r});
    else
      segs.push_back(
          {[p, r](double q) { return p + r * std::exp(complexd(0.0, M_PI - q / r)); },
           [p, r](double q) {
             return complexd(0.0, -1.0) * std::exp(complexd(0.0, M_PI - q / r));
           },
           M_PI * r});
    cur = p + r;
  }
  line(cur, L);
  return segs;
}

}  // namespace detail

/// Integrates the phase-stripped variable chi = phi e^{i lambda x} of
/// phi_xx = (-lambda^2 + sigma lambda u + w) phi,  w = -(1/4) u^2 + eta,
/// from x = -L (chi = 1, chi' = 0) to x = +L with a fixed-step classical RK4
/// along a path that arcs over the listed real poles (the fields are
/// meromorphic in x, so the detour leaves a and b unchanged). Coefficients:
/// a = chi(L) - chi'(L)/(2 i lambda); for real lambda additionally
/// b = chi'(L) e^{-2 i lambda L}/(2 i lambda).
inline ScatteringResult forward_scatter(const PotentialFn& u_fn, const PotentialFn& eta_fn,
                                        complexd lambda, SigmaBranch sigma,
                                        const ScatterOptions& opt = {}) {
  if (lambda.imag() < 0.0)
    throw ConfigError("forward_scatter: lambda must lie in the closed upper half plane");
  if (lambda == complexd(0.0, 0.0))
    throw ConfigError("forward_scatter: lambda must be nonzero");
  if (opt.steps < 16) throw ConfigError("forward_scatter: steps too small");

  const auto segs = detail::scatter_path(opt.L, opt.detour_points, opt.detour_radius);
  double total = 0.0;
  for (const auto& sg : segs) total += sg.len;

  const double sg_ode = sigma.value();
  const auto rhs = [&](complexd z, complexd y0, complexd y1, complexd dz, complexd& f0,
                       complexd& f1) {
    const complexd u = u_fn(z);
    const complexd w = -0.25 * u * u + eta_fn(z);
    f0 = dz * y1;
    f1 = dz * (2.0 * complexd(0.0, 1.0) * lambda * y1 + (sg_ode * lambda * u + w) * y0);
  };

  const auto integrate = [&](int steps) {
    complexd y0(1.0, 0.0), y1(0.0, 0.0);
    for (const auto& sg : segs) {
      const int n = std::max(8, static_cast<int>(std::lround(steps * sg.len / total)));
      const double hq = sg.len / n;
      for (int i = 0; i < n; ++i) {
        const double q = i * hq;
        complexd k10, k11, k20, k21, k30, k31, k40, k41;
        const complexd z0 = sg.z(q), zm = sg.z(q + 0.5 * hq), z1 = sg.z(q + hq);
        const complexd d0 = sg.dz(q), dm = sg.dz(q + 0.5 * hq), d1 = sg.dz(q + hq);
        rhs(z0, y0, y1, d0, k10, k11);
        rhs(zm, y0 + 0.5 * hq * k10, y1 + 0.5 * hq * k11, dm, k20, k21);
        rhs(zm, y0 + 0.5 * hq * k20, y1 + 0.5 * hq * k21, dm, k30, k31);
        rhs(z1, y0 + hq * k30, y1 + hq * k31, d1, k40, k41);
        y0 += (hq / 6.0) * (k10 + 2.0 * k20 + 2.0 * k30 + k40);
        y1 += (hq / 6.0) * (k11 + 2.0 * k21 + 2.0 * k31 + k41);
      }
    }
    return std::pair<complexd, complexd>(y0, y1);
  };

  const auto [chi, chip] = integrate(opt.steps);
  const complexd twoil = 2.0 * complexd(0.0, 1.0) * lambda;
  ScatteringResult res;
  res.lambda = lambda;
  res.sigma = sigma.value();
  res.a = chi - chip / twoil;
  res.domain_half_width = opt.L;
  res.step_count = opt.steps;
  if (lambda.imag() == 0.0) {
    res.b = chip * std::exp(-twoil * opt.L) / twoil;
    res.has_b = true;
  }
  if (opt.estimate_error) {
    const auto [c2, cp2] = integrate(opt.steps / 2);
    res.err_estimate = std::abs(res.a - (c2 - cp2 / twoil));
    if (res.err_estimate > opt.error_tol)
      throw Error("forward_scatter: step count too small for requested tolerance");
  }
  return res;
}

struct SpectrumEstimate {
  std::vector<complexd> zeros;
  std::vector<double> residuals;  ///< |a| at each zero
  std::vector<int> iterations;
  std::vector<complexd> failed_guesses;
};

/// Secant iteration in the complex plane on lambda -> a(lambda, sigma) from
/// each guess; converged zeros closer than 1e-6 are merged. Non-convergence
/// within 50 iterations is recorded per guess, not fatal.
inline SpectrumEstimate find_spectrum(const PotentialFn& u_fn, const PotentialFn& eta_fn,
                                      SigmaBranch sigma, const std::vector<complexd>& guesses,
                                      const ScatterOptions& opt = {}) {
  SpectrumEstimate est;
  const auto a_of = [&](complexd lam) {
    return forward_scatter(u_fn, eta_fn, lam, sigma, opt).a;
  };
  for (const complexd g : guesses) {
    if (!(g.imag() > 0.0)) throw ConfigError("find_spectrum: guesses must lie in C+");
    complexd l0 = g * complexd(1.05, 0.0) + complexd(0.0, 0.01);
    complexd l1 = g;
    complexd f0 = a_of(l0);
    bool ok = false;
    int it = 0;
    for (; it < 50; ++it) {
      const complexd f1 = a_of(l1);
      if (std::abs(f1) < 1e-13) {
        ok = true;
        break;
      }
      const complexd denom = f1 - f0;
      if (denom == complexd(0.0, 0.0)) break;
      const complexd dl = -f1 * (l1 - l0) / denom;
      l0 = l1;
      f0 = f1;
      l1 += dl;
      if (std::abs(dl) < 1e-12) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      est.failed_guesses.push_back(g);
      continue;
    }
    const double res = std::abs(a_of(l1));
    bool merged = false;
    for (size_t k = 0; k < est.zeros.size(); ++k) {
      if (std::abs(est.zeros[k] - l1) < 1e-6) {
        if (res < est.residuals[k]) {
          est.zeros[k] = l1;
          est.residuals[k] = res;
          est.iterations[k] = it;
        }
        merged = true;
        break;
      }
    }
    if (!merged) {
      est.zeros.push_back(l1);
      est.residuals.push_back(res);
      est.iterations.push_back(it);
    }
  }
  return est;
}

/// Locates real poles of the constructed fields on [-L, L] at fixed t by
/// scanning the scaled |N| for deep local minima. Used to place detours.
inline std::vector<double> detect_real_poles(const SpectralPoint& s, const NormingConstant& n0,
                                             double t, double L, double pole_tol = 1e-4) {
  std::vector<double> poles;
  const double step = 0.02 / s.nu;
  double prev2 = 1.0, prev = 1.0, xprev = -L;
  for (double x = -L; x <= L + 0.5 * step; x += step) {
    const double v = detail::eval_d<double>(x, t, 1, s, n0, 0).nhat();
    if (prev < pole_tol && prev <= prev2 && prev <= v) poles.push_back(xprev);
    prev2 = prev;
    xprev = x;
    prev = v;
  }
  return poles;
}

struct IsospectralityReport {
  std::vector<double> times;
  std::vector<std::vector<complexd>> zeros_per_time;
  double max_drift = 0.0;
};

/// Runs find_spectrum on the constructed solution at each time, seeding the
/// guesses from the constructing eigenvalue pair, and reports the maximal
/// drift of matched zeros across times.
inline IsospectralityReport isospectrality_check(const SpectralPoint& s,
                                                 const NormingConstant& n0,
                                                 const std::vector<double>& times,
                                                 SigmaBranch sigma, ScatterOptions opt = {}) {
  if (times.empty()) throw ConfigError("isospectrality_check: times must be non-empty");
  IsospectralityReport rep;
  rep.times = times;
  const complexd l1 = s.lambda1();
  const std::vector<complexd> guesses = {l1 * complexd(1.04, 0.02),
                                         -std::conj(l1) * complexd(0.97, -0.02)};
  for (const double t : times) {
    ScatterOptions o = opt;
    o.detour_points = detect_real_poles(s, n0, t, opt.L);
    const auto est = find_spectrum(velocity_fn(s, n0, t), elevation_fn(s, n0, t), sigma,
                                   guesses, o);
    if (est.zeros.size() != guesses.size())
      throw Error("isospectrality_check: spectrum search did not converge at t=" +
                  std::to_string(t));
    rep.zeros_per_time.push_back(est.zeros);
  }
  const auto& base = rep.zeros_per_time.front();
  for (const auto& zs : rep.zeros_per_time)
    for (const complexd z : zs) {
      double best = std::numeric_limits<double>::infinity();
      for (const complexd b : base) best = std::min(best, std::abs(z - b));
      rep.max_drift = std::max(rep.max_drift, best);
    }
  return rep;
}

}  // namespace kb
