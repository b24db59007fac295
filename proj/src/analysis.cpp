#include "sipm/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <string>

#include <boost/math/special_functions/zeta.hpp>

#include "sipm/error.hpp"

namespace sipm::analysis {

PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("power_law_fit: size mismatch");
  if (xs.size() < 2) throw DomainError("power_law_fit: need at least two points");
  const auto n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("power_law_fit: inputs must be positive");
    sx += std::log(xs[i]);
    sy += std::log(ys[i]);
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    const double dy = std::log(ys[i]) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw DomainError("power_law_fit: all x equal");
  PowerLawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

double geometric_limit(std::span<const double> xs, double r) {
  if (xs.size() < 2) throw DomainError("geometric_limit: need at least two entries");
  if (!(r > 0.0 && r < 1.0)) throw DomainError("geometric_limit: ratio must lie in (0, 1)");
  const double a = xs[xs.size() - 2];
  const double b = xs.back();
  return b + (b - a) * r / (1.0 - r);
}

namespace {

void check_edges(std::span<const double> f, double rel_tol) {
  if (f.empty()) return;
  double peak = 0.0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  const double tol = rel_tol * peak;
  if (std::abs(f.front()) > tol || std::abs(f.back()) > tol) {
    throw DomainError("signal does not vanish at the window edges (|f| = " +
                      std::to_string(std::max(std::abs(f.front()), std::abs(f.back()))) + ")");
  }
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// sum over the full spectrum of weight(xi) |F_k|^2, times h / N.
template <class Weight>
double spectral_sum(std::span<const double> f, double h, Weight weight) {
  const int n = static_cast<int>(f.size());
  if (n == 0) return 0.0;
  const int nc = n / 2 + 1;
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(static_cast<std::size_t>(n)));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(static_cast<std::size_t>(nc)));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE);
  std::copy(f.begin(), f.end(), in.get());
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double dxi = 2.0 * std::numbers::pi / (n * h);
  double sum = 0.0;
  for (int k = 0; k < nc; ++k) {
    const double re = out.get()[k][0];
    const double im = out.get()[k][1];
    const bool paired = k != 0 && !(n % 2 == 0 && k == n / 2);
    sum += (paired ? 2.0 : 1.0) * weight(k * dxi) * (re * re + im * im);
  }
  return sum * h / n;
}

}  // namespace

double hs_norm(std::span<const double> f, double h, double s, double edge_tol) {
  if (!(h > 0.0)) throw DomainError("hs_norm: spacing must be positive");
  if (!(s >= 0.0)) throw DomainError("hs_norm: s must be nonnegative");
  check_edges(f, edge_tol);
  return std::sqrt(spectral_sum(f, h, [s](double xi) { return std::pow(1.0 + xi * xi, s); }));
}

double fourier_seminorm(std::span<const double> f, double h, double s, double edge_tol) {
  if (!(h > 0.0)) throw DomainError("fourier_seminorm: spacing must be positive");
  check_edges(f, edge_tol);
  return std::sqrt(spectral_sum(f, h, [s](double xi) { return xi == 0.0 ? 0.0 : std::pow(xi, 2.0 * s); }));
}

std::vector<double> d1(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size());
  auto at = [&](int i) { return i < 0 || i >= n ? 0.0 : f[static_cast<std::size_t>(i)]; };
  std::vector<double> out(f.size());
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * h);
  }
  return out;
}

std::vector<double> d2(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size());
  auto at = [&](int i) { return i < 0 || i >= n ? 0.0 : f[static_cast<std::size_t>(i)]; };
  std::vector<double> out(f.size());
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        (16.0 * (at(i + 1) + at(i - 1)) - (at(i + 2) + at(i - 2)) - 30.0 * at(i)) / (12.0 * h * h);
  }
  return out;
}

std::vector<double> d4(std::span<const double> f, double h) { return d2(d2(f, h), h); }

double gagliardo_seminorm(std::span<const double> f, double h, double s) {
  if (!(s > 0.0 && s < 1.0)) throw DomainError("gagliardo_seminorm: s must lie in (0, 1)");
  if (!(h > 0.0)) throw DomainError("gagliardo_seminorm: spacing must be positive");
  const int n = static_cast<int>(f.size());
  if (n == 0) return 0.0;

  std::vector<double> w(static_cast<std::size_t>(n));
  for (int m = 1; m < n; ++m) w[static_cast<std::size_t>(m)] = std::pow(m * h, -(1.0 + 2.0 * s));

  // Off-diagonal nodes, both inside the window.
  double inner = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = f[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(j)];
      inner += d * d * w[static_cast<std::size_t>(j - i)];
    }
  }
  inner *= 2.0 * h * h;

  // Diagonal: the trapezoid sum of |f'|^2 |u|^(1-2s) over u = mh, m != 0,
  // misses 2 zeta(2s - 1) h^(2-2s) |f'|^2 against the integral.
  const auto fp = d1(f, h);
  double diag = 0.0;
  for (double v : fp) diag += v * v;
  diag *= -2.0 * boost::math::zeta(2.0 * s - 1.0) * std::pow(h, 3.0 - 2.0 * s);

  // One point outside the window, where f = 0.
  const double L = 0.5 * n * h;
  double outer = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fi = f[static_cast<std::size_t>(i)];
    if (fi == 0.0) continue;
    const double dl = std::max(i * h, 0.5 * h);
    const double dr = 2.0 * L - i * h;
    outer += fi * fi * (std::pow(dl, -2.0 * s) + std::pow(dr, -2.0 * s)) / (2.0 * s);
  }
  outer *= 2.0 * h;

  return std::sqrt(std::max(0.0, inner + diag + outer));
}

double dissipation_functional(const InterfaceState& state) {
  const double h = state.h();
  const auto f4 = d4(state.f, h);
  const auto fp = d1(state.f, h);
  double slope = 0.0;
  for (double v : fp) slope = std::max(slope, std::abs(v));
  const double s = (1.0 + state.beta) / 2.0;
  const double frac = spectral_sum(f4, h, [s](double xi) { return xi == 0.0 ? 0.0 : std::pow(xi, 2.0 * s); });
  return (1.0 + state.beta) / (8.0 * std::pow(1.0 + slope * slope, (2.0 + state.beta) / 2.0)) * frac;
}

NormReport norm_report(const InterfaceState& state, bool gagliardo, double edge_tol) {
  const double h = state.h();
  NormReport r;
  r.l2 = hs_norm(state.f, h, 0.0, edge_tol);
  r.h2 = hs_norm(state.f, h, 2.0, edge_tol);
  r.h4 = hs_norm(state.f, h, 4.0, edge_tol);
  const double s = (1.0 + state.beta) / 2.0;
  const auto f4 = d4(state.f, h);
  r.frac_dissipation = spectral_sum(f4, h, [s](double xi) { return xi == 0.0 ? 0.0 : std::pow(xi, 2.0 * s); });
  r.dissipation = dissipation_functional(state);
  if (gagliardo) {
    const double g = gagliardo_seminorm(state.f, h, 0.5);
    const double fs = fourier_seminorm(state.f, h, 0.5, edge_tol);
    // Both sides are homogeneous; the equivalence constant at s = 1/2 is 2 pi.
    r.gagliardo_check = fs == 0.0 ? 0.0 : std::abs(g * g / (fs * fs) / (2.0 * std::numbers::pi) - 1.0);
  }
  return r;
}

EnergyReport energy_report(const InterfaceState& state, std::span<const double> f_t, double edge_tol) {
  if (f_t.size() != state.f.size()) throw DomainError("energy_report: f_t size mismatch");
  const double h = state.h();
  EnergyReport e;
  e.norms = norm_report(state, false, edge_tol);
  for (std::size_t i = 0; i < f_t.size(); ++i) e.lhs_ee1 += state.f[i] * f_t[i] * h;
  e.rhs_ee1 = e.norms.h2 * e.norms.h2;
  e.c_ee1 = e.rhs_ee1 > 0.0 ? std::max(0.0, e.lhs_ee1 / e.rhs_ee1) : 0.0;
  const auto f4 = d4(state.f, h);
  const auto ft4 = d4(f_t, h);
  for (std::size_t i = 0; i < f4.size(); ++i) e.lhs_h4 += f4[i] * ft4[i] * h;
  const double n4 = e.norms.h4;
  e.h4_production = std::pow(n4, 3.0 + 2.0 * state.beta) * (1.0 + std::pow(n4, 3.0 + state.beta));
  return e;
}

}  // namespace sipm::analysis
