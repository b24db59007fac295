#include "sipm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "sipm/analysis.hpp"
#include "sipm/contfrac.hpp"
#include "sipm/csv.hpp"
#include "sipm/error.hpp"
#include "sipm/multiplier.hpp"
#include "sipm/patch.hpp"
#include "sipm/spectral.hpp"

namespace sipm::commands {

namespace {

using config::RunConfig;

struct Io {
  const Context& ctx;
  std::ostream& log() const {
    static std::ostream null(nullptr);
    return ctx.quiet || !ctx.log ? null : *ctx.log;
  }
  std::ostream& err() const {
    static std::ostream null(nullptr);
    return ctx.err ? *ctx.err : null;
  }
  std::ofstream file(const std::string& name) const {
    std::ofstream f(ctx.out / name);
    if (!f) throw ConfigError("cannot write " + (ctx.out / name).string());
    return f;
  }
};

contfrac::SolveOptions solve_options(const RunConfig& cfg) {
  contfrac::SolveOptions o;
  o.f2.tol = cfg.contfrac.tol;
  o.f2.max_depth = cfg.contfrac.max_depth;
  o.residual_tol = cfg.contfrac.residual_tol;
  return o;
}

multiplier::SipmParams sipm_params(const RunConfig& cfg, int k) {
  multiplier::SipmParams p{cfg.multiplier.beta, cfg.multiplier.a, k};
  p.validate();
  return p;
}

int first_k(const RunConfig& cfg) {
  const auto ks = config::parse_int_list(cfg.multiplier.k);
  if (ks.empty()) throw ConfigError("multiplier.k: this command needs at least one k");
  return ks.front();
}

multiplier::PnSequence sequence(const RunConfig& cfg, int k) {
  if (cfg.multiplier.kind == "sipm") return multiplier::PnSequence::sipm(sipm_params(cfg, k));
  if (cfg.multiplier.kind == "table") {
    if (cfg.multiplier.table.empty()) throw ConfigError("multiplier.table is required for kind = table");
    return multiplier::PnSequence::load_table(cfg.multiplier.table);
  }
  throw ConfigError("multiplier.kind must be sipm or table");
}

int cmd_spectrum(const RunConfig& cfg, const Io& io) {
  std::vector<int> ks = config::parse_int_list(cfg.multiplier.k);
  if (cfg.multiplier.kind == "table") ks = {0};
  auto out = io.file("spectrum.csv");
  out << "k,lambda,bracket_lo,bracket_hi,residual,n0,decay_certified\n";
  const auto opts = solve_options(cfg);
  int status = ok;
  for (int k : ks) {
    const auto pseq = sequence(cfg, k);
    try {
      const auto res = contfrac::solve_lambda_star(pseq, opts);
      double residual = 0.0;
      contfrac::CoefficientTable table;
      if (cfg.multiplier.kind == "sipm") {
        const auto pair = spectral::make_eigenpair(sipm_params(cfg, k), cfg.multiplier.s, opts);
        residual = spectral::eigen_residual(pair);
        table = pair.table;
      } else {
        table = contfrac::coefficients(res, pseq, contfrac::default_length(pseq));
        residual = table.recursion_residual;
      }
      csv::row(out, {std::to_string(k), csv::num(res.lambda_star), csv::num(res.bracket_lo), csv::num(res.bracket_hi),
                     csv::num(residual), std::to_string(table.n0), table.decay_certified ? "true" : "false"});
      io.log() << "k = " << k << "  lambda* = " << csv::num(res.lambda_star) << "  residual = " << residual << '\n';
      if (!table.decay_certified || residual > 1e-8) {
        io.err() << "k = " << k << ": " << (table.decay_certified ? "eigen residual too large" : "decay not certified")
                 << '\n';
        status = invariant_failure;
      }
    } catch (const InvariantError& e) {
      io.err() << "k = " << k << ": " << e.what() << '\n';
      status = invariant_failure;
    } catch (const NumericalError& e) {
      io.err() << "k = " << k << ": " << e.what() << '\n';
      status = invariant_failure;
    }
  }
  return status;
}

int cmd_scan_f2(const RunConfig& cfg, const Io& io) {
  const int k = cfg.multiplier.kind == "table" ? 0 : first_k(cfg);
  const auto pseq = sequence(cfg, k);
  const auto opts = solve_options(cfg);
  const auto res = contfrac::solve_lambda_star(pseq, opts);
  const double lo = cfg.contfrac.scan_min > 0.0 ? cfg.contfrac.scan_min : res.bracket_lo;
  const double hi = cfg.contfrac.scan_max > 0.0 ? cfg.contfrac.scan_max : 1.25 * res.bracket_hi;
  const int n = cfg.contfrac.scan_points;
  if (n < 1 || !(hi >= lo) || !(lo > 0.0)) throw ConfigError("contfrac.scan_*: need 0 < scan_min <= scan_max and scan_points >= 1");
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  const auto table = contfrac::scan_f2(pseq, grid, opts.f2);
  {
    auto out = io.file("scan.csv");
    contfrac::write_csv(out, table);
  }
  const int above = table.asymptotes_above(res.bracket_lo);
  auto out = io.file("crossing.txt");
  out << "lambda_star," << csv::num(res.lambda_star) << '\n';
  out << "crossing," << csv::num(table.crossing) << '\n';
  out << "asymptotes_above_lambda0," << above << '\n';
  out << "case," << contfrac::to_string(res.case_tag) << '\n';
  int status = ok;
  if (table.crossing) {
    const double agree = std::abs(*table.crossing - res.lambda_star) / res.lambda_star;
    out << "agreement," << csv::num(agree) << '\n';
    io.log() << "crossing = " << csv::num(*table.crossing) << "  lambda* = " << csv::num(res.lambda_star)
             << "  asymptotes above lambda0 = " << above << '\n';
    if (agree > 1e-6) {
      io.err() << "crossing disagrees with the solver by " << agree << '\n';
      status = invariant_failure;
    }
  } else {
    io.log() << "no crossing inside the scan window; lambda* = " << csv::num(res.lambda_star) << '\n';
  }
  return status;
}

// Smallest power-of-two grid resolving the slice, unless configured.
std::pair<int, int> field_grid(const RunConfig& cfg, const spectral::SpectralSlice& slice) {
  auto pow2 = [](int n) {
    int m = 64;
    while (m < n) m *= 2;
    return m;
  };
  double cmax = 0.0;
  for (double c : slice.coeffs) cmax = std::max(cmax, std::abs(c));
  int n_eff = 0;
  for (int n = 1; n <= slice.N(); ++n) {
    if (std::abs(slice.coeffs[static_cast<std::size_t>(n - 1)]) > 1e-17 * cmax) n_eff = n;
  }
  return {cfg.linear.field_m1 > 0 ? cfg.linear.field_m1 : pow2(4 * slice.k1),
          cfg.linear.field_m2 > 0 ? cfg.linear.field_m2 : pow2(4 * slice.a * n_eff)};
}

int cmd_evolve_linear(const RunConfig& cfg, const Io& io) {
  const auto params = sipm_params(cfg, first_k(cfg));
  const auto opts = solve_options(cfg);
  const auto pair = spectral::make_eigenpair(params, cfg.multiplier.s, opts);
  spectral::SpectralSlice slice0;
  const std::string& data = cfg.linear.data;
  if (data == "eigen") {
    slice0 = pair.slice();
  } else if (data == "random") {
    slice0 = spectral::random_slice(params, std::max(256, 4 * cfg.linear.n_active), cfg.linear.n_active, cfg.seed);
  } else if (data == "zero") {
    slice0 = pair.slice();
    std::fill(slice0.coeffs.begin(), slice0.coeffs.end(), 0.0);
  } else {
    throw ConfigError("linear.data must be eigen, random or zero");
  }
  const double T = cfg.linear.T > 0.0 ? cfg.linear.T : 3.0 / pair.lambda;
  spectral::EvolveOptions eo;
  eo.lambda_estimate = pair.lambda;
  const auto traj = spectral::evolve_linear(slice0, T, spectral::stable_dt(slice0, pair.lambda), eo);
  {
    auto out = io.file("trajectory.csv");
    spectral::write_trajectory_csv(out, traj);
  }
  {
    const auto [m1, m2] = field_grid(cfg, traj.final);
    auto out = io.file("field.csv");
    spectral::write_field_csv(out, spectral::assemble(traj.final, m1, m2), m1, m2);
  }
  int status = ok;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    if (traj.shell_norm[i] > traj.envelope[i] * (1.0 + 1e-10) + 1e-300) {
      io.err() << "shell envelope exceeded at t = " << traj.t[i] << '\n';
      status = invariant_failure;
      break;
    }
  }
  if (data == "eigen") {
    std::vector<double> logs;
    for (double v : traj.shell_norm) logs.push_back(std::log(v));
    // Least-squares slope of log norm against t.
    const double n = static_cast<double>(logs.size());
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      st += traj.t[i];
      sl += logs[i];
      stt += traj.t[i] * traj.t[i];
      stl += traj.t[i] * logs[i];
    }
    const double slope = (n * stl - st * sl) / (n * stt - st * st);
    io.log() << "lambda = " << csv::num(pair.lambda) << "  fitted growth rate = " << csv::num(slope) << '\n';
  } else {
    io.log() << "final shell norm = " << csv::num(traj.shell_norm.back()) << '\n';
  }
  return status;
}

int cmd_beta2(const RunConfig& cfg, const Io& io) {
  const auto ks = config::parse_int_list(cfg.multiplier.k);
  const auto ts = config::parse_real_list(cfg.beta2.t_samples);
  const auto opts = solve_options(cfg);
  auto out = io.file("beta2.csv");
  out << "k,lambda,residual,t,growth,bound\n";
  int status = ok;
  for (int k : ks) {
    const auto pair = spectral::beta2_pair(k, cfg.multiplier.a, opts);
    if (pair.residual > 1e-8) status = invariant_failure;
    for (double tu : ts) {
      const double t = tu / pair.lambda;
      const double g = spectral::beta2_growth(pair, t);
      const double bound = std::exp(t * pair.lambda);
      if (g < bound * (1.0 - 1e-12)) status = invariant_failure;
      csv::row(out, {std::to_string(k), csv::num(pair.lambda), csv::num(pair.residual), csv::num(t), csv::num(g),
                     csv::num(bound)});
    }
    io.log() << "k = " << k << "  lambda = " << csv::num(pair.lambda) << "  residual = " << pair.residual << '\n';
  }
  if (status != ok) io.err() << "beta = 2 check failed (see beta2.csv)\n";
  return status;
}

InterfaceState initial_state(const RunConfig& cfg) {
  const auto& pc = cfg.patch;
  InterfaceState s;
  s.L = pc.L;
  s.beta = pc.beta;
  s.jump = pc.jump;
  if (pc.N < 64) throw ConfigError("patch.N must be at least 64");
  const auto init = config::parse_init(pc.init);
  if (init.kind == "zero") {
    s.f.assign(static_cast<std::size_t>(pc.N), 0.0);
  } else if (init.kind == "gaussian") {
    s.f = patch::gaussian(pc.L, pc.N, init.amp, init.width);
  } else if (init.kind == "bump") {
    s.f = patch::bump(pc.L, pc.N, init.amp, init.width);
  } else {
    s.f = patch::load_profile(init.path, pc.L, pc.N);
  }
  s.validate();
  return s;
}

patch::StepOptions step_options(const RunConfig& cfg) {
  patch::StepOptions o;
  o.c_cfl = cfg.patch.c_cfl;
  o.stability = cfg.patch.stability;
  o.support_tol = cfg.patch.support_tol;
  return o;
}

int cmd_patch_run(const RunConfig& cfg, const Io& io) {
  const auto s0 = initial_state(cfg);
  patch::RunOptions ro;
  ro.step = step_options(cfg);
  ro.dt = cfg.patch.dt;
  ro.h4_ceiling = cfg.patch.h4_ceiling;
  const auto res = patch::run(s0, cfg.patch.T, cfg.patch.snapshot_every, ro);
  std::filesystem::create_directories(io.ctx.out / "snapshots");
  for (std::size_t k = 0; k < res.snapshots.size(); ++k) {
    std::ostringstream name;
    name << "snapshots/snapshot_" << std::setw(5) << std::setfill('0') << k << ".csv";
    auto out = io.file(name.str());
    patch::write_snapshot_csv(out, s0, res.snapshots[k]);
  }
  {
    auto out = io.file("norms.csv");
    patch::write_norms_csv(out, res.norms);
  }
  double fmax = 0.0;
  for (double v : res.final.f) fmax = std::max(fmax, std::abs(v));
  io.log() << "steps = " << res.steps << "  dt = " << csv::num(res.dt) << "  t = " << csv::num(res.final.t)
           << "  max|f| = " << csv::num(fmax) << "  C_ee1 = " << csv::num(res.c_ee1) << '\n';
  if (res.aborted) {
    io.err() << "run aborted: " << res.abort_reason << '\n';
    return invariant_failure;
  }
  return ok;
}

struct VerifyRow {
  std::string check;
  bool passed;
  double value;
  double target;
};

int cmd_patch_verify(const RunConfig& cfg, const Io& io) {
  const int N = cfg.verify.N;
  const double L = cfg.patch.L;
  std::vector<VerifyRow> rows;
  auto state = [&](double beta, std::vector<double> f, double Lw = 0.0) {
    InterfaceState s;
    s.L = Lw > 0.0 ? Lw : L;
    s.beta = beta;
    s.jump = cfg.patch.jump;
    s.f = std::move(f);
    return s;
  };
  const double beta = cfg.patch.beta;

  {
    const auto r = patch::contour_rhs(state(beta, std::vector<double>(static_cast<std::size_t>(N), 0.0)));
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    rows.push_back({"zero_data", m == 0.0, m, 0.0});
  }
  {
    auto s = state(beta, patch::gaussian(L, N, 1.0, 1.0, 0.7));
    auto neg = s;
    for (double& v : neg.f) v = -v;
    const auto a = patch::contour_rhs(s);
    const auto b = patch::contour_rhs(neg);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] + b[i]));
    rows.push_back({"odd_equivariance", m == 0.0, m, 0.0});
  }
  {
    auto s = state(beta, patch::gaussian(L, N, 0.1, 1.0));
    const double dt = patch::max_dt(s);
    for (int k = 0; k < 100; ++k) s = patch::step_rk4(s, dt);
    double m = 0.0, peak = 0.0;
    for (int i = 1; i < N; ++i) {
      m = std::max(m, std::abs(s.f[static_cast<std::size_t>(i)] - s.f[static_cast<std::size_t>(N - i)]));
      peak = std::max(peak, std::abs(s.f[static_cast<std::size_t>(i)]));
    }
    rows.push_back({"even_symmetry_100_steps", m <= 1e-12 * peak, m / peak, 1e-12});
  }
  {
    const double mu = 2.0;
    const auto s = state(beta, patch::gaussian(L, N, 1.0, 1.0, 0.7));
    const auto sm = state(beta, patch::gaussian(mu * L, N, mu, mu, mu * 0.7), mu * L);
    const auto a = patch::contour_rhs(s);
    const auto b = patch::contour_rhs(sm);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      num = std::max(num, std::abs(b[i] - std::pow(mu, -beta) * a[i]));
      den = std::max(den, std::abs(std::pow(mu, -beta) * a[i]));
    }
    rows.push_back({"scaling_law", num <= 1e-4 * den, num / den, 1e-4});
  }
  for (double b : {0.25, 0.5, 0.75}) {
    const auto s = state(b, patch::gaussian(L, N, 1.0, 1.0));
    const auto st = patch::normal_limit_study(s, N / 2);
    const std::string tag = "_beta_" + csv::num(b);
    rows.push_back({"normal_limit_rate" + tag, std::abs(st.rate.slope - (1.0 - b)) <= 0.1, st.rate.slope, 1.0 - b});
    rows.push_back({"normal_limit_value" + tag, st.rel_error <= 1e-3, st.rel_error, 1e-3});
    // Centered one width to the right, so x1 = 0 is the steepest point.
    const auto sv = state(b, patch::gaussian(L, N, 1.0, 1.0, 1.0));
    const auto vs = patch::singular_velocity_study(sv, 0.0);
    rows.push_back({"singular_velocity" + tag, std::abs(vs.fit.slope + b) <= 0.1, vs.fit.slope, -b});
  }

  auto out = io.file("verify.csv");
  out << "check,passed,value,target\n";
  int status = ok;
  for (const auto& r : rows) {
    csv::row(out, {r.check, r.passed ? "true" : "false", csv::num(r.value), csv::num(r.target)});
    io.log() << (r.passed ? "PASS " : "FAIL ") << r.check << "  value = " << csv::num(r.value) << '\n';
    if (!r.passed) status = invariant_failure;
  }
  return status;
}

int cmd_cbeta(const RunConfig& cfg, const Io& io) {
  const double b = cfg.patch.beta;
  const double v = patch::cbeta(b);
  const double ref = std::numbers::pi * std::pow(2.0, 2.0 - b) * boost::math::tgamma((2.0 - b) / 2.0) /
                     (b * boost::math::tgamma(b / 2.0));
  const double rel = std::abs(v - ref) / ref;
  auto out = io.file("cbeta.csv");
  out << "beta,cbeta,reference,rel_diff\n";
  csv::row(out, {csv::num(b), csv::num(v), csv::num(ref), csv::num(rel)});
  if (io.ctx.log && !io.ctx.quiet) *io.ctx.log << csv::num(v) << '\n';
  if (rel > 1e-12) {
    io.err() << "cbeta cross-evaluation differs by " << rel << '\n';
    return invariant_failure;
  }
  return ok;
}

int cmd_validate_symbol(const RunConfig& cfg, const Io& io) {
  const auto sym = multiplier::MultiplierSymbol::sipm(cfg.multiplier.beta);
  multiplier::SampleBox box;
  box.kprime = {{-8, 8}};
  box.n = {1, 64};
  const auto rep = multiplier::validate_symbol(sym, cfg.multiplier.a, box);
  auto out = io.file("validate.csv");
  out << "condition,passed,witnesses,detail\n";
  for (const auto& c : rep.conditions) {
    std::string w;
    for (const auto& p : c.witnesses) {
      if (!w.empty()) w += ' ';
      for (std::size_t i = 0; i < p.size(); ++i) w += (i ? ":" : "") + std::to_string(p[i]);
    }
    csv::row(out, {c.id, c.passed ? "true" : "false", w, c.detail});
    io.log() << (c.passed ? "PASS " : "FAIL ") << c.id << "  " << c.description << '\n';
  }
  return rep.all_passed() ? ok : invariant_failure;
}

using Handler = std::function<int(const RunConfig&, const Io&)>;

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"spectrum", cmd_spectrum},       {"scan-f2", cmd_scan_f2},           {"evolve-linear", cmd_evolve_linear},
      {"beta2-check", cmd_beta2},       {"patch-run", cmd_patch_run},       {"patch-verify", cmd_patch_verify},
      {"cbeta", cmd_cbeta},             {"validate-symbol", cmd_validate_symbol},
  };
  return table;
}

}  // namespace

int run(const RunConfig& cfg, const Context& ctx) {
  const Io io{ctx};
  const auto it = handlers().find(cfg.command);
  if (it == handlers().end()) {
    io.err() << "unknown command '" << cfg.command << "'\n";
    return usage_error;
  }
  try {
    std::filesystem::create_directories(ctx.out);
    {
      auto echo = io.file("config.ini");
      config::write(echo, cfg);
    }
    return it->second(cfg, io);
  } catch (const ConfigError& e) {
    io.err() << "config error: " << e.what() << '\n';
    return usage_error;
  } catch (const DomainError& e) {
    io.err() << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const InvariantError& e) {
    io.err() << "invariant failure: " << e.what() << '\n';
    return invariant_failure;
  } catch (const NumericalError& e) {
    io.err() << "numerical failure: " << e.what() << '\n';
    return invariant_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    io.err() << "error: " << e.what() << '\n';
    return usage_error;
  }
}

}  // namespace sipm::commands
