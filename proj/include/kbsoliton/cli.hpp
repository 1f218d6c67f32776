#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kbsoliton/fields.hpp"
#include "kbsoliton/verify.hpp"
#include "kbsoliton/version.hpp"

namespace kb {

enum class OutputFormat { csv, json };

/// Fully resolved run configuration; every field is echoed into the manifest
/// so a run can be reproduced from it alone.
struct RunConfig {
  double mu = 0.0;
  double nu = 0.0;
  std::optional<double> x0;  ///< default: normalize_phases
  std::optional<double> t0;
  GridSpec grid;
  double tol_gamma = default_gamma_tol;
  double h = 1e-3;       // verify: FD step
  double L = 40.0;       // verify: scattering half-width
  int steps = 20000;     // verify: integrator steps
  std::string out;       // output path prefix
  OutputFormat format = OutputFormat::csv;
  std::string suite = "all";

  SpectralPoint spectrum() const { return make_spectrum(mu, nu); }

  NormingConstant norming(const SpectralPoint& s) const {
    if (x0 || t0) {
      NormingConstant n;
      n.x0 = x0.value_or(0.0);
      n.t0 = t0.value_or(0.0);
      n.x_shift = 0.0;
      return n;
    }
    return normalize_phases(s);
  }

  void validate() const {
    (void)spectrum();  // throws on bad mu/nu
    validate_grid(grid);
    if (grid.times.empty()) throw ConfigError("config: times must be non-empty");
    if (!(tol_gamma > 0.0)) throw ConfigError("config: tol-gamma must be positive");
    if (out.empty()) throw ConfigError("config: output path required");
  }
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class OutputSet {
 public:
  std::ofstream open(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open output file: " + path);
    paths_.push_back(path);
    return f;
  }
  void discard_all() {
    for (const auto& p : paths_) std::filesystem::remove(p);
  }

 private:
  std::vector<std::string> paths_;
};

inline void write_slice_csv(std::ofstream& f, const std::vector<FieldSample>& rows) {
  f << "x,t,u,eta,gamma,singular\n";
  for (const auto& r : rows) {
    f << fmt17(r.x) << ',' << fmt17(r.t) << ',';
    if (r.singular)
      f << ",," << fmt17(r.gamma) << ",1\n";
    else
      f << fmt17(r.u) << ',' << fmt17(r.eta) << ',' << fmt17(r.gamma) << ",0\n";
  }
}

inline void write_slice_json(std::ofstream& f, const std::vector<FieldSample>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json o;
    o["x"] = r.x;
    o["t"] = r.t;
    if (r.singular) {
      o["u"] = nullptr;
      o["eta"] = nullptr;
    } else {
      o["u"] = r.u;
      o["eta"] = r.eta;
    }
    o["gamma"] = r.gamma;
    o["singular"] = r.singular ? 1 : 0;
    arr.push_back(std::move(o));
  }
  f << arr.dump(1) << '\n';
}

inline void echo_config(std::ostream& m, const RunConfig& cfg, const SpectralPoint& s,
                        const NormingConstant& n) {
  m << "kbsoliton_version=" << kb::version << '\n';
  m << "mu=" << fmt17(cfg.mu) << '\n' << "nu=" << fmt17(cfg.nu) << '\n';
  m << "x0=" << fmt17(n.x0) << (cfg.x0 ? "" : " (auto)") << '\n';
  m << "t0=" << fmt17(n.t0) << (cfg.t0 ? "" : " (auto)") << '\n';
  m << "x_shift=" << fmt17(n.x_shift) << '\n';
  m << "lambda1=" << fmt17(s.mu) << "+" << fmt17(s.nu) << "i\n";
  m << "x_min=" << fmt17(cfg.grid.x_min) << '\n' << "x_max=" << fmt17(cfg.grid.x_max) << '\n';
  m << "x_step=" << fmt17(cfg.grid.x_step) << '\n';
  m << "times=";
  for (size_t i = 0; i < cfg.grid.times.size(); ++i)
    m << (i ? "," : "") << fmt17(cfg.grid.times[i]);
  m << '\n';
  m << "tol_gamma=" << fmt17(cfg.tol_gamma) << '\n';
  m << "h=" << fmt17(cfg.h) << '\n';
  m << "L=" << fmt17(cfg.L) << '\n';
  m << "steps=" << cfg.steps << '\n';
  m << "format=" << (cfg.format == OutputFormat::csv ? "csv" : "json") << '\n';
}

class Stopwatch {
 public:
  long ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Evaluates the grid and writes one data file per time slice plus a manifest.
/// Returns 0 on success, 2 on configuration or I/O failure (partial files are
/// removed).
inline int cmd_eval(const RunConfig& cfg) {
  detail::Stopwatch clock;
  detail::OutputSet outs;
  try {
    cfg.validate();
    const SpectralPoint s = cfg.spectrum();
    const NormingConstant n = cfg.norming(s);
    const char* ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
    std::vector<int> singular_counts;
    for (size_t k = 0; k < cfg.grid.times.size(); ++k) {
      GridSpec slice = cfg.grid;
      slice.times = {cfg.grid.times[k]};
      const auto rows = evaluate_grid(slice, s, n, cfg.tol_gamma);
      int nsing = 0;
      for (const auto& r : rows) nsing += r.singular ? 1 : 0;
      singular_counts.push_back(nsing);
      auto f = outs.open(cfg.out + "_t" + std::to_string(k) + ext);
      if (cfg.format == OutputFormat::csv)
        detail::write_slice_csv(f, rows);
      else
        detail::write_slice_json(f, rows);
      if (!f) throw Error("write failure");
    }
    auto m = outs.open(cfg.out + "_manifest.txt");
    m << "command=eval\n";
    detail::echo_config(m, cfg, s, n);
    for (size_t k = 0; k < singular_counts.size(); ++k)
      m << "singular_count_t" << k << "=" << singular_counts[k] << '\n';
    m << "duration_ms=" << clock.ms() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eval: %s\n", e.what());
    outs.discard_all();
    return 2;
  }
}

namespace detail {

struct SuiteLog {
  std::ostringstream text;
  bool pass = true;

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    text << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) text << ": " << detail;
    text << '\n';
    pass = pass && ok;
  }
};

inline void run_algebra_suite(SuiteLog& log, const SpectralPoint& s, const NormingConstant& n,
                              double tol_gamma) {
  std::mt19937 rng(20240911u);
  std::uniform_real_distribution<double> ux(-4.0, 4.0), ut(-4.0, 4.0), uo(-2.0, 2.0);
  double worst_det = 0.0, worst_pair = 0.0, worst_inv = 0.0;
  int used = 0;
  while (used < 1000) {
    const double x = ux(rng), t = ut(rng), om = uo(rng);
    const SigmaBranch sg = (rng() & 1u) ? sigma_plus : sigma_minus;
    const PhaseState p = phases(x, t, sg, s, n);
    const GammaValue g = gamma(p, s);
    if (std::abs(g.scaled) < 1e-3) continue;
    ++used;
    const TransferMatrix T = transfer_matrix(p, s, sg, om);
    const TransferMatrix Ti = inverse_conjugate_transfer(p, s, sg, om);
    // det(Tbar^-1 - T) = 2 (l/mu)^2 Gamma e^{i(th+-th-)} e^{4 i sg om}
    const complexd m00 = Ti.full(0, 0) - T.full(0, 0), m01 = Ti.full(0, 1) - T.full(0, 1);
    const complexd m10 = Ti.full(1, 0) - T.full(1, 0), m11 = Ti.full(1, 1) - T.full(1, 1);
    const complexd det = m00 * m11 - m01 * m10;
    const complexd want = 2.0 * (s.l * s.l) / (s.mu * s.mu) * g.gamma *
                          std::exp(complexd(0.0, p.theta_plus - p.theta_minus +
                                                     4.0 * sg.value() * om));
    worst_det = std::max(worst_det, std::abs(det - want) / std::max(1.0, std::abs(want)));
    // Tbar^{-1} Tbar = 1
    const complexd c00 = std::conj(T.full(0, 0)), c01 = std::conj(T.full(0, 1));
    const complexd c10 = std::conj(T.full(1, 0)), c11 = std::conj(T.full(1, 1));
    worst_inv = std::max({worst_inv,
                          std::abs(Ti.full(0, 0) * c00 + Ti.full(0, 1) * c10 - 1.0),
                          std::abs(Ti.full(0, 0) * c01 + Ti.full(0, 1) * c11),
                          std::abs(Ti.full(1, 0) * c00 + Ti.full(1, 1) * c10),
                          std::abs(Ti.full(1, 0) * c01 + Ti.full(1, 1) * c11 - 1.0)});
    // closed form vs linear solve
    const JostVector jc = jost_closed_form(p, s, sg, om, tol_gamma);
    const JostVector js = jost_linear_solve(p, s, sg, om, tol_gamma);
    const double scale = std::max({1.0, std::abs(js.psi_plus), std::abs(js.psi_minus)});
    worst_pair = std::max(worst_pair,
                          std::max(std::abs(jc.psi_plus - js.psi_plus),
                                   std::abs(jc.psi_minus - js.psi_minus)) /
                              scale);
  }
  log.check("algebra.det_identity", worst_det < 1e-10, "worst rel " + fmt17(worst_det));
  log.check("algebra.inverse_product", worst_inv < 1e-10, "worst " + fmt17(worst_inv));
  log.check("algebra.jost_closed_vs_solve", worst_pair < 1e-10, "worst rel " + fmt17(worst_pair));
  double worst_id = 0.0;
  for (const double x : {-2.0, -0.7, 0.4, 1.3, 2.6})
    for (const double t : {-1.5, 0.4, 2.0})
      worst_id = std::max(worst_id, g_psi_identity_check(x, t, sigma_plus, s, n, tol_gamma));
  log.check("algebra.g_psi_identity", worst_id < 1e-8, "worst " + fmt17(worst_id));
}

inline void run_pde_suite(SuiteLog& log, const SpectralPoint& s, const NormingConstant& n,
                          const GridSpec& grid, double h, double tol_gamma) {
  const ResidualReport r4 = pde_residual(s, n, grid, 4.0 * h, tol_gamma);
  const ResidualReport r2 = pde_residual(s, n, grid, 2.0 * h, tol_gamma);
  const ResidualReport r1 = pde_residual(s, n, grid, h, tol_gamma);
  const double f1a = r4.r1_max / r2.r1_max, f1b = r2.r1_max / r1.r1_max;
  const double f2a = r4.r2_max / r2.r2_max, f2b = r2.r2_max / r1.r2_max;
  log.text << "pde residuals: h=" << fmt17(h) << " r1_max=" << fmt17(r1.r1_max)
           << " r2_max=" << fmt17(r1.r2_max) << " excluded=" << r1.excluded_nodes << '\n';
  log.text << "pde factors: r1 " << fmt17(f1a) << "," << fmt17(f1b) << "  r2 " << fmt17(f2a)
           << "," << fmt17(f2b) << '\n';
  const auto in_window = [](double f) { return f >= 3.5 && f <= 4.5; };
  log.check("pde.convergence_factors",
            in_window(f1a) && in_window(f1b) && in_window(f2a) && in_window(f2b));
  if (h == 1e-3)
    log.check("pde.max_residual", r1.r1_max < 1e-5 && r1.r2_max < 1e-5,
              "r1 " + fmt17(r1.r1_max) + " r2 " + fmt17(r1.r2_max));
}

inline void run_scatter_suite(SuiteLog& log, const SpectralPoint& s, const NormingConstant& n,
                              const std::vector<double>& times, double L, int steps) {
  ScatterOptions opt;
  opt.L = L;
  opt.steps = steps;
  // spectrum at t = 0
  ScatterOptions o0 = opt;
  o0.detour_points = detect_real_poles(s, n, 0.0, L);
  const complexd l1 = s.lambda1();
  const auto est = find_spectrum(velocity_fn(s, n, 0.0), elevation_fn(s, n, 0.0), sigma_plus,
                                 {l1 * complexd(1.1, 0.0), -std::conj(l1) * complexd(0.9, 0.0)},
                                 o0);
  bool zeros_ok = est.zeros.size() == 2;
  double worst_zero = 0.0;
  for (const complexd z : est.zeros) {
    const double d = std::min(std::abs(z - l1), std::abs(z + std::conj(l1)));
    worst_zero = std::max(worst_zero, d);
    log.text << "zero: " << fmt17(z.real()) << (z.imag() < 0 ? "-" : "+")
             << fmt17(std::abs(z.imag())) << "i  |a|=" << fmt17(std::abs(
                    forward_scatter(velocity_fn(s, n, 0.0), elevation_fn(s, n, 0.0), z,
                                    sigma_plus, o0)
                        .a))
             << '\n';
  }
  log.check("scatter.zeros_at_eigenvalues", zeros_ok && worst_zero < 1e-3,
            "worst " + fmt17(worst_zero));
  // reflectionless on the real axis
  double worst_refl = 0.0;
  for (const double lam : {0.3, 0.55, 0.8, 1.1, 1.6}) {
    const auto r = forward_scatter(velocity_fn(s, n, 0.0), elevation_fn(s, n, 0.0),
                                   complexd(lam, 0.0), sigma_plus, o0);
    worst_refl = std::max(worst_refl, std::abs(r.b / r.a));
  }
  log.check("scatter.reflectionless", worst_refl < 1e-3, "worst |b/a| " + fmt17(worst_refl));
  // isospectrality across the configured times
  const auto iso = isospectrality_check(s, n, times, sigma_plus, opt);
  log.text << "isospectral drift=" << fmt17(iso.max_drift) << '\n';
  log.check("scatter.isospectrality", iso.max_drift < 1e-3);
}

}  // namespace detail

/// Runs the selected verification suites and writes a structured report.
/// Exit 0 when every assertion passes, 1 on assertion failure, 2 on
/// execution/config error.
inline int cmd_verify(const RunConfig& cfg) {
  detail::Stopwatch clock;
  detail::OutputSet outs;
  try {
    cfg.validate();
    if (cfg.suite != "algebra" && cfg.suite != "pde" && cfg.suite != "scatter" &&
        cfg.suite != "all")
      throw ConfigError("verify: unknown suite '" + cfg.suite + "'");
    const SpectralPoint s = cfg.spectrum();
    const NormingConstant n = cfg.norming(s);
    detail::SuiteLog log;
    if (cfg.suite == "algebra" || cfg.suite == "all")
      detail::run_algebra_suite(log, s, n, cfg.tol_gamma);
    if (cfg.suite == "pde" || cfg.suite == "all")
      detail::run_pde_suite(log, s, n, cfg.grid, cfg.h, cfg.tol_gamma);
    if (cfg.suite == "scatter" || cfg.suite == "all")
      detail::run_scatter_suite(log, s, n, cfg.grid.times, cfg.L, cfg.steps);

    auto f = outs.open(cfg.out + "_report.txt");
    f << "command=verify\nsuite=" << cfg.suite << '\n';
    detail::echo_config(f, cfg, s, n);
    f << log.text.str();
    f << "result=" << (log.pass ? "pass" : "fail") << '\n';
    f << "duration_ms=" << clock.ms() << '\n';
    std::fputs(log.text.str().c_str(), stdout);
    return log.pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "verify: %s\n", e.what());
    outs.discard_all();
    return 2;
  }
}

/// Brackets sign changes of Gamma along each time slice, bisects each to
/// 1e-10 in x, and writes the singular-point list (one t,x row per point).
inline int cmd_singularities(const RunConfig& cfg) {
  detail::Stopwatch clock;
  detail::OutputSet outs;
  try {
    cfg.validate();
    const SpectralPoint s = cfg.spectrum();
    const NormingConstant n = cfg.norming(s);
    auto f = outs.open(cfg.out + "_singularities.csv");
    f << "t,x\n";
    std::vector<int> counts;
    for (const double t : cfg.grid.times) {
      int count = 0;
      const int nx = cfg.grid.nx();
      double gl = gamma_at(cfg.grid.x_min, t, sigma_plus, s, n).scaled;
      for (int i = 1; i < nx; ++i) {
        const double xr = cfg.grid.x_min + i * cfg.grid.x_step;
        const double gr = gamma_at(xr, t, sigma_plus, s, n).scaled;
        if (gl * gr < 0.0) {
          double a = xr - cfg.grid.x_step, b = xr, ga = gl;
          while (b - a > 1e-10) {
            const double m = 0.5 * (a + b);
            const double gm = gamma_at(m, t, sigma_plus, s, n).scaled;
            if (ga * gm <= 0.0)
              b = m;
            else {
              a = m;
              ga = gm;
            }
          }
          f << detail::fmt17(t) << ',' << detail::fmt17(0.5 * (a + b)) << '\n';
          ++count;
        }
        gl = gr;
      }
      counts.push_back(count);
    }
    auto m = outs.open(cfg.out + "_manifest.txt");
    m << "command=singularities\n";
    detail::echo_config(m, cfg, s, n);
    for (size_t k = 0; k < counts.size(); ++k)
      m << "singular_count_t" << k << "=" << counts[k] << '\n';
    m << "duration_ms=" << clock.ms() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "singularities: %s\n", e.what());
    outs.discard_all();
    return 2;
  }
}

}  // namespace kb
