#include "sipm/patch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "sipm/csv.hpp"
#include "sipm/error.hpp"

namespace sipm {

void InterfaceState::validate() const {
  if (f.size() < 64) throw DomainError("interface needs N >= 64 samples");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("patch evolution needs 0 < beta < 1");
  if (!(jump > 0.0)) throw DomainError("jump (rho2 - rho1)/C_beta must be positive");
  if (!(L > 0.0)) throw DomainError("window half-width L must be positive");
  for (double v : f) {
    if (!std::isfinite(v)) throw DomainError("non-finite interface sample");
  }
}

}  // namespace sipm

namespace sipm::patch {

double cbeta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("cbeta needs 0 < beta <= 1");
  return std::numbers::pi * std::pow(2.0, 2.0 - beta) * std::tgamma((2.0 - beta) / 2.0) /
         (beta * std::tgamma(beta / 2.0));
}

double trapezoid_offset(double beta) {
  return boost::math::zeta(beta) - 1.0 - 0.5 * std::pow(2.0, -beta) + std::pow(2.0, 1.0 - beta) / (1.0 - beta);
}

namespace {

template <class Profile>
std::vector<double> sample(double L, int N, Profile profile) {
  if (N < 1 || !(L > 0.0)) throw DomainError("bad grid");
  std::vector<double> f(static_cast<std::size_t>(N));
  const double h = 2.0 * L / N;
  for (int i = 1; i < N; ++i) f[static_cast<std::size_t>(i)] = profile(-L + i * h);
  return f;
}

// f on nodes -P..N+P with zeros outside [0, N) (node N is the right end).
constexpr int pad = 4;

std::vector<double> extended(const std::vector<double>& f) {
  std::vector<double> g(f.size() + 2 * pad + 1, 0.0);
  std::copy(f.begin(), f.end(), g.begin() + pad);
  return g;
}

struct Derivs {
  std::vector<double> g;    // extended samples
  std::vector<double> fp;   // nodes 0..N
  std::vector<double> fpp;  // nodes 0..N
};

Derivs derivatives(const std::vector<double>& f, double h) {
  Derivs d;
  d.g = extended(f);
  const int N = static_cast<int>(f.size());
  d.fp.resize(static_cast<std::size_t>(N) + 1);
  d.fpp.resize(static_cast<std::size_t>(N) + 1);
  auto g = [&](int j) { return d.g[static_cast<std::size_t>(j + pad)]; };
  for (int i = 0; i <= N; ++i) {
    d.fp[static_cast<std::size_t>(i)] = (8.0 * (g(i + 1) - g(i - 1)) - (g(i + 2) - g(i - 2))) / (12.0 * h);
    d.fpp[static_cast<std::size_t>(i)] = (16.0 * (g(i + 1) + g(i - 1)) - (g(i + 2) + g(i - 2)) - 30.0 * g(i)) / (12.0 * h * h);
  }
  return d;
}

// (1 + q)^(-gamma); the series branch covers the far field cheaply.
inline double damp(double q, double gamma, double c1, double c2, double c3) {
  if (q < 1e-4) return 1.0 - q * (c1 - q * (c2 - q * c3));
  return std::exp(-gamma * std::log1p(q));
}

}  // namespace

std::vector<double> gaussian(double L, int N, double amp, double width, double center) {
  if (!(width > 0.0)) throw DomainError("gaussian width must be positive");
  return sample(L, N, [=](double x) {
    const double z = (x - center) / width;
    return amp * std::exp(-0.5 * z * z);
  });
}

std::vector<double> bump(double L, int N, double amp, double width, double center) {
  if (!(width > 0.0)) throw DomainError("bump width must be positive");
  return sample(L, N, [=](double x) {
    const double z = (x - center) / width;
    return std::abs(z) < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - z * z)) : 0.0;
  });
}

std::vector<double> load_profile(const std::filesystem::path& path, double L, int N) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open profile " + path.string());
  std::vector<double> f;
  const double h = 2.0 * L / N;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double eta = 0.0, v = 0.0;
    if (!(ls >> eta)) continue;
    if (!(ls >> v)) throw DomainError(path.string() + ": expected two columns");
    const double expect = -L + static_cast<double>(f.size()) * h;
    if (std::abs(eta - expect) > 1e-9 * std::max(1.0, L)) {
      throw DomainError(path.string() + ": eta does not match the grid at row " + std::to_string(f.size()));
    }
    f.push_back(v);
  }
  if (static_cast<int>(f.size()) != N) throw DomainError(path.string() + ": expected " + std::to_string(N) + " rows");
  f[0] = 0.0;
  return f;
}

void check_support(const InterfaceState& state, double tol) {
  double peak = 0.0;
  for (double v : state.f) peak = std::max(peak, std::abs(v));
  const double limit = tol * std::max(1.0, peak);
  const int N = state.n();
  for (int j = 0; j < 4 && j < N; ++j) {
    for (int i : {j, N - 1 - j}) {
      if (std::abs(state.f[static_cast<std::size_t>(i)]) > limit) {
        std::ostringstream os;
        os << "support violation: |f| = " << std::abs(state.f[static_cast<std::size_t>(i)]) << " at eta = "
           << state.eta(i) << " exceeds " << limit;
        throw DomainError(os.str());
      }
    }
  }
}

std::vector<double> contour_rhs(const InterfaceState& state) {
  state.validate();
  const int N = state.n();
  const double h = state.h();
  const double beta = state.beta;
  const double gamma = (2.0 + beta) / 2.0;
  const double c1 = gamma, c2 = gamma * (gamma + 1.0) / 2.0, c3 = gamma * (gamma + 1.0) * (gamma + 2.0) / 6.0;
  const Derivs d = derivatives(state.f, h);
  auto f = [&](int j) { return d.g[static_cast<std::size_t>(j + pad)]; };

  std::vector<double> kern(static_cast<std::size_t>(N) + 1), inv_mh(kern.size());
  for (int m = 1; m <= N; ++m) {
    inv_mh[static_cast<std::size_t>(m)] = 1.0 / (m * h);
    kern[static_cast<std::size_t>(m)] = std::pow(m * h, -(1.0 + beta));  // u / |u|^(2+beta)
  }

  // Middle field: trapezoid over offsets 2..M on each side of a node, half
  // weight at both ends, nothing when M = 2. Each pair (i, j) enters both
  // nodes with the same sign, so it is evaluated once. Node 0 and the ghost
  // node N (both window ends, f = 0) only act as partners.
  std::vector<double> acc(static_cast<std::size_t>(N) + 1, 0.0);
  for (int i = 0; i < N - 1; ++i) {
    const double fi = f(i);
    const double fpi = d.fp[static_cast<std::size_t>(i)];
    double own = 0.0;
    for (int j = i + 2; j <= N; ++j) {
      const int m = j - i;
      const double df = (fi - f(j)) * inv_mh[static_cast<std::size_t>(m)];
      const double t = (fpi - d.fp[static_cast<std::size_t>(j)]) * kern[static_cast<std::size_t>(m)] *
                       damp(df * df, gamma, c1, c2, c3);
      const double end = m == 2 ? 0.5 : 1.0;
      own += (j == N ? (m == 2 ? 0.0 : 0.5) : end) * t;
      acc[static_cast<std::size_t>(j)] += (i == 0 ? (m == 2 ? 0.0 : 0.5) : end) * t;
    }
    acc[static_cast<std::size_t>(i)] += own;
  }

  const double delta = 2.0 * h;
  const double near_w = 2.0 * std::pow(delta, 1.0 - beta) / (1.0 - beta) - 2.0 * trapezoid_offset(beta) * std::pow(h, 1.0 - beta);
  std::vector<double> out(static_cast<std::size_t>(N), 0.0);
  for (int i = 1; i < N; ++i) {
    const double fi = f(i);
    const double fpi = d.fp[static_cast<std::size_t>(i)];
    const double near = d.fpp[static_cast<std::size_t>(i)] * std::pow(1.0 + fpi * fpi, -gamma) * near_w;
    // Beyond the window f = f' = 0 and the zeta integral is exact.
    const double tl = std::max(i, 2) * h;
    const double tr = std::max(N - i, 2) * h;
    const double tail = fpi / beta * (std::pow(tl * tl + fi * fi, -beta / 2.0) - std::pow(tr * tr + fi * fi, -beta / 2.0));
    out[static_cast<std::size_t>(i)] = state.jump * (near - h * acc[static_cast<std::size_t>(i)] + tail);
  }
  return out;
}

double VelocitySample::magnitude() const { return std::hypot(v1, v2); }

namespace {

double lagrange8(const std::vector<double>& values, int offset, double h, double L, double x) {
  // values[k] holds node k - offset; nodes outside the array are zero.
  const double s = (x + L) / h;
  const int base = static_cast<int>(std::floor(s)) - 3;
  double out = 0.0;
  for (int a = 0; a < 8; ++a) {
    double w = 1.0;
    for (int b = 0; b < 8; ++b) {
      if (b != a) w *= (s - (base + b)) / static_cast<double>(a - b);
    }
    const int idx = base + a + offset;
    const double v = idx >= 0 && idx < static_cast<int>(values.size()) ? values[static_cast<std::size_t>(idx)] : 0.0;
    out += w * v;
  }
  return out;
}

}  // namespace

double interp_f(const InterfaceState& state, double x) {
  if (std::abs(x) >= state.L) return 0.0;
  return lagrange8(state.f, 0, state.h(), state.L, x);
}

double interp_fp(const InterfaceState& state, double x) {
  if (std::abs(x) >= state.L) return 0.0;
  const Derivs d = derivatives(state.f, state.h());
  return lagrange8(d.fp, 0, state.h(), state.L, x);
}

VelocitySample velocity_at_point(const InterfaceState& state, double x1, double x2) {
  state.validate();
  const double h = state.h();
  const double L = state.L;
  const Derivs d = derivatives(state.f, h);
  auto fz = [&](double z) { return std::abs(z) >= L ? 0.0 : lagrange8(state.f, 0, h, L, z); };
  auto fpz = [&](double z) { return std::abs(z) >= L ? 0.0 : lagrange8(d.fp, 0, h, L, z); };

  VelocitySample s;
  s.x1 = x1;
  s.x2 = x2;
  s.distance = std::abs(x2 - fz(x1));
  if (!(s.distance > 0.0)) throw DomainError("velocity requested on the interface");
  const double expo = -(2.0 + state.beta) / 2.0;

  // Panels [x1 +- d 2^j] clipped to the window.
  std::vector<double> cuts{-L, L};
  const double c = std::clamp(x1, -L, L);
  cuts.push_back(c);
  for (double r = s.distance; r < 4.0 * L; r *= 2.0) {
    cuts.push_back(std::clamp(c - r, -L, L));
    cuts.push_back(std::clamp(c + r, -L, L));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double v1 = 0.0, v2 = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (!(b > a)) continue;
    auto w = [&](double z) {
      const double dx = x1 - z;
      const double dy = x2 - fz(z);
      return dx * std::pow(dx * dx + dy * dy, expo);
    };
    v1 += GK::integrate(w, a, b, 10, 1e-13);
    v2 += GK::integrate([&](double z) { return w(z) * fpz(z); }, a, b, 10, 1e-13);
  }
  // Outside the window f = 0: the x-component integrates exactly, the
  // y-component vanishes.
  const double dy = x2;
  const double tail = (std::pow((x1 + L) * (x1 + L) + dy * dy, -state.beta / 2.0) -
                       std::pow((x1 - L) * (x1 - L) + dy * dy, -state.beta / 2.0)) /
                      state.beta;
  v1 += tail;
  s.v1 = -state.jump * v1;
  s.v2 = -state.jump * v2;
  return s;
}

std::vector<double> normal_velocity_limit(const InterfaceState& state, int i, const std::vector<double>& eps) {
  state.validate();
  if (i < 0 || i >= state.n()) throw DomainError("node index out of range");
  const double eta = state.eta(i);
  const double fi = state.f[static_cast<std::size_t>(i)];
  const double fpi = interp_fp(state, eta);
  std::vector<double> out;
  out.reserve(eps.size());
  for (double e : eps) {
    if (!(e > 0.0)) throw DomainError("eps must be positive");
    const double x1 = eta - e * fpi;
    const double x2 = fi + e;
    if (!(x2 > interp_f(state, x1))) throw DomainError("eps too large: sample point crosses the interface");
    const auto v = velocity_at_point(state, x1, x2);
    out.push_back(-interp_fp(state, x1) * v.v1 + v.v2);
  }
  return out;
}

LimitStudy normal_limit_study(const InterfaceState& state, int i) {
  constexpr int fit_hi = 10;
  constexpr int deep = 22;
  LimitStudy st;
  for (int m = 3; m <= deep; ++m) st.eps.push_back(std::ldexp(1.0, -m));
  st.values = normal_velocity_limit(state, i, st.eps);
  st.rhs = contour_rhs(state)[static_cast<std::size_t>(i)];
  std::vector<double> e, err;
  for (int m = 3; m <= fit_hi; ++m) {
    const auto k = static_cast<std::size_t>(m - 3);
    e.push_back(st.eps[k]);
    err.push_back(std::abs(st.values[k] - st.rhs));
  }
  st.rate = analysis::power_law_fit(e, err);
  st.limit = analysis::geometric_limit(st.values, std::pow(2.0, -(1.0 - state.beta)));
  st.rel_error = std::abs(st.limit - st.rhs) / std::abs(st.rhs);
  return st;
}

SingularStudy singular_velocity_study(const InterfaceState& state, double x1, int m_lo, int m_hi) {
  if (m_hi <= m_lo) throw DomainError("need at least two distances");
  SingularStudy st;
  const double base = interp_f(state, x1);
  for (int m = m_lo; m <= m_hi; ++m) {
    const double d = std::ldexp(1.0, -m);
    st.d.push_back(d);
    st.speed.push_back(velocity_at_point(state, x1, base + d).magnitude());
  }
  st.fit = analysis::power_law_fit(st.d, st.speed);
  return st;
}

double max_dt(const InterfaceState& state, const StepOptions& opts) {
  state.validate();
  const double h = state.h();
  const double beta = state.beta;
  const Derivs d = derivatives(state.f, h);
  double fpp = 0.0;
  for (double v : d.fpp) fpp = std::max(fpp, std::abs(v));
  const double cfl = opts.c_cfl * std::pow(h, 1.0 + beta) / (1.0 + fpp);
  // Nyquist mode: f'' has symbol -16/(3h^2) and the middle field vanishes
  // because the f' stencil does.
  const double rho = state.jump * 16.0 / 3.0 * std::pow(h, -1.0 - beta) *
                     (std::pow(2.0, 2.0 - beta) / (1.0 - beta) - 2.0 * trapezoid_offset(beta));
  return std::min(cfl, opts.stability * 2.78 / rho);
}

InterfaceState step_rk4(const InterfaceState& state, double dt, const StepOptions& opts) {
  const double limit = max_dt(state, opts);
  if (!(dt > 0.0) || dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "CFL violation: dt = " << dt << " exceeds " << limit;
    throw DomainError(os.str());
  }
  InterfaceState tmp = state;
  const std::size_t N = state.f.size();
  const auto k1 = contour_rhs(state);
  for (std::size_t i = 0; i < N; ++i) tmp.f[i] = state.f[i] + 0.5 * dt * k1[i];
  const auto k2 = contour_rhs(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp.f[i] = state.f[i] + 0.5 * dt * k2[i];
  const auto k3 = contour_rhs(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp.f[i] = state.f[i] + dt * k3[i];
  const auto k4 = contour_rhs(tmp);
  InterfaceState out = state;
  for (std::size_t i = 0; i < N; ++i) out.f[i] = state.f[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  out.t = state.t + dt;
  check_support(out, opts.support_tol);
  return out;
}

RunResult run(const InterfaceState& state0, double T, int snapshot_every, const RunOptions& opts) {
  state0.validate();
  check_support(state0, initial_support_tol);
  if (!(T >= 0.0)) throw DomainError("T must be nonnegative");
  if (snapshot_every < 1) throw DomainError("snapshot_every must be >= 1");

  RunResult res;
  res.dt = opts.dt > 0.0 ? opts.dt : max_dt(state0, opts.step);
  const int steps = T == 0.0 ? 0 : static_cast<int>(std::ceil(T / res.dt - 1e-9));
  const double dt = steps == 0 ? 0.0 : T / steps;
  res.dt = dt;

  auto record = [&](const InterfaceState& s) {
    res.snapshots.push_back({s.t, s.f});
    const auto ft = contour_rhs(s);
    const auto e = analysis::energy_report(s, ft, opts.step.support_tol);
    res.norms.push_back({s.t, e.norms.l2, e.norms.h2, e.norms.h4, e.norms.dissipation, e.lhs_ee1, e.rhs_ee1});
    res.c_ee1 = std::max(res.c_ee1, e.c_ee1);
    return e.norms.h4;
  };

  InterfaceState cur = state0;
  record(cur);
  for (int step = 1; step <= steps; ++step) {
    try {
      cur = step_rk4(cur, dt, opts.step);
    } catch (const DomainError& e) {
      res.aborted = true;
      res.abort_reason = e.what();
      break;
    }
    cur.t = state0.t + step * dt;
    res.steps = step;
    if (step % snapshot_every == 0 || step == steps) {
      const double h4 = record(cur);
      if (!std::isfinite(h4) || h4 > opts.h4_ceiling) {
        res.aborted = true;
        res.abort_reason = "H4 norm " + std::to_string(h4) + " above the ceiling";
        break;
      }
    }
  }
  res.final = std::move(cur);
  return res;
}

void write_snapshot_csv(std::ostream& out, const InterfaceState& grid, const Snapshot& snap) {
  out << "eta,f\n";
  for (int i = 0; i < static_cast<int>(snap.f.size()); ++i) {
    csv::row(out, {csv::num(grid.eta(i)), csv::num(snap.f[static_cast<std::size_t>(i)])});
  }
}

void write_norms_csv(std::ostream& out, const std::vector<NormRow>& rows) {
  out << "t,l2,h2,h4,dissipation,lhs_ee1,rhs_ee1\n";
  for (const auto& r : rows) {
    csv::row(out, {csv::num(r.t), csv::num(r.l2), csv::num(r.h2), csv::num(r.h4), csv::num(r.dissipation),
                   csv::num(r.lhs_ee1), csv::num(r.rhs_ee1)});
  }
}

}  // namespace sipm::patch
