#include "sipm/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "sipm/csv.hpp"
#include "sipm/error.hpp"

namespace sipm::spectral {

namespace {

std::vector<double> pn_table(const SipmParams& params, int N) {
  std::vector<double> p(static_cast<std::size_t>(N) + 2);
  for (int n = 1; n <= N + 1; ++n) p[static_cast<std::size_t>(n)] = multiplier::sipm_pn(params, n);
  return p;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// (L c)_m with precomputed 1/p_n, index 1-based in p.
void apply(const std::vector<double>& c, const std::vector<double>& inv_p, int sign, std::vector<double>& out) {
  const std::size_t N = c.size();
  out.assign(N, 0.0);
  for (std::size_t m = 0; m < N; ++m) {
    double v = 0.0;
    if (m > 0) v += c[m - 1] * inv_p[m];
    if (m + 1 < N) v += c[m + 1] * inv_p[m + 2];
    out[m] = sign * v;
  }
}

std::vector<double> inverse_pn(const SipmParams& params, int N) {
  auto p = pn_table(params, N);
  for (std::size_t i = 1; i < p.size(); ++i) p[i] = 1.0 / p[i];
  return p;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

void SpectralSlice::validate() const {
  params().validate();
  if (N() < 3) throw DomainError("slice needs N >= 3");
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw DomainError("non-finite slice coefficient");
  }
}

SpectralSlice apply_L(const SpectralSlice& slice, int sign) {
  slice.validate();
  SpectralSlice out = slice;
  apply(slice.coeffs, inverse_pn(slice.params(), slice.N()), sign, out.coeffs);
  return out;
}

double mode_weight(int k1, int a, int n, double s) {
  const double k2 = static_cast<double>(k1) * k1 + static_cast<double>(n) * n * a * a;
  return s == 0.0 ? 1.0 : std::pow(1.0 + k2, s);
}

double slice_hs_norm(const SpectralSlice& slice, double s) {
  double sum = 0.0;
  for (int n = 1; n <= slice.N(); ++n) {
    const double c = slice.coeffs[static_cast<std::size_t>(n - 1)];
    sum += mode_weight(slice.k1, slice.a, n, s) * c * c;
  }
  return std::sqrt(sum);
}

SpectralSlice EigenPair::slice(int N) const {
  const int prefix = table.certified_prefix;
  if (N <= 0) N = std::max(4 * prefix, 256);
  SpectralSlice out{params.k, params.a, params.beta, std::vector<double>(static_cast<std::size_t>(N), 0.0)};
  for (int n = 1; n <= std::min(N, prefix); ++n) {
    const double sign = n % 2 == 1 ? 1.0 : -1.0;
    out.coeffs[static_cast<std::size_t>(n - 1)] = sign * table.c[static_cast<std::size_t>(n - 1)] / normalization;
  }
  return out;
}

EigenPair make_eigenpair(const SipmParams& params, double s, const contfrac::SolveOptions& opts) {
  params.validate();
  if (!(s >= 0.0)) throw DomainError("Sobolev index must be nonnegative");
  const auto pseq = multiplier::PnSequence::sipm(params);
  const auto res = contfrac::solve_lambda_star(pseq, opts);
  EigenPair pair;
  pair.params = params;
  pair.s = s;
  pair.lambda = res.lambda_star;
  pair.table = contfrac::coefficients(res, pseq, contfrac::default_length(pseq));
  SpectralSlice raw{params.k, params.a, params.beta,
                    std::vector<double>(pair.table.c.begin(), pair.table.c.begin() + pair.table.certified_prefix)};
  pair.normalization = slice_hs_norm(raw, s);
  if (!(pair.normalization > 0.0)) throw NumericalError("eigen coefficients vanish");
  return pair;
}

double eigen_residual(const SpectralSlice& slice, double lambda) {
  slice.validate();
  const double norm = l2(slice.coeffs);
  if (!(norm > 0.0)) throw DomainError("eigen_residual: zero coefficients");
  const auto inv_p = inverse_pn(slice.params(), slice.N());
  std::vector<double> alt = slice.coeffs;
  for (std::size_t i = 1; i < alt.size(); i += 2) alt[i] = -alt[i];
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> out;
  for (const std::vector<double>* c : {&slice.coeffs, static_cast<const std::vector<double>*>(&alt)}) {
    for (int sign : {+1, -1}) {
      apply(*c, inv_p, sign, out);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= lambda * (*c)[i];
      best = std::min(best, l2(out) / norm);
    }
  }
  return best;
}

double eigen_residual(const EigenPair& pair) {
  return eigen_residual(pair.slice(pair.table.certified_prefix), pair.lambda);
}

std::vector<double> assemble(const SpectralSlice& slice, int M1, int M2) {
  slice.validate();
  double cmax = 0.0;
  for (double c : slice.coeffs) cmax = std::max(cmax, std::abs(c));
  int n_eff = 0;
  for (int n = 1; n <= slice.N(); ++n) {
    if (std::abs(slice.coeffs[static_cast<std::size_t>(n - 1)]) > 1e-17 * cmax) n_eff = n;
  }
  if (M1 < 4 * slice.k1 || M2 < 4 * slice.a * n_eff) {
    throw DomainError("grid " + std::to_string(M1) + " x " + std::to_string(M2) + " under-resolves k1 = " +
                      std::to_string(slice.k1) + ", N a = " + std::to_string(slice.a * n_eff));
  }
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> g(static_cast<std::size_t>(M2), 0.0);
  for (int j = 0; j < M2; ++j) {
    double v = 0.0;
    for (int n = 1; n <= n_eff; ++n) {
      // Reduce n a j mod M2 so the sine argument stays exact.
      const long phase = (static_cast<long>(n) * slice.a * j) % M2;
      v += slice.coeffs[static_cast<std::size_t>(n - 1)] * std::sin(two_pi * static_cast<double>(phase) / M2);
    }
    g[static_cast<std::size_t>(j)] = v;
  }
  std::vector<double> field(static_cast<std::size_t>(M1) * M2);
  for (int i = 0; i < M1; ++i) {
    const long phase = (static_cast<long>(slice.k1) * i) % M1;
    const double s1 = std::sin(two_pi * static_cast<double>(phase) / M1);
    for (int j = 0; j < M2; ++j) field[static_cast<std::size_t>(i) * M2 + j] = s1 * g[static_cast<std::size_t>(j)];
  }
  return field;
}

std::vector<double> assemble_eigenfunction(const EigenPair& pair, int M1, int M2) {
  return assemble(pair.slice(pair.table.certified_prefix), M1, M2);
}

double field_hs_norm(const std::vector<double>& field, int M1, int M2, double s) {
  if (field.size() != static_cast<std::size_t>(M1) * M2) throw DomainError("field size mismatch");
  const int M2c = M2 / 2 + 1;
  std::unique_ptr<double, FftwFree> in(fftw_alloc_real(field.size()));
  std::unique_ptr<fftw_complex, FftwFree> out(fftw_alloc_complex(static_cast<std::size_t>(M1) * M2c));
  fftw_plan plan = fftw_plan_dft_r2c_2d(M1, M2, in.get(), out.get(), FFTW_ESTIMATE);
  std::copy(field.begin(), field.end(), in.get());
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  const double scale = 1.0 / (static_cast<double>(M1) * M2);
  double sum = 0.0;
  for (int i = 0; i < M1; ++i) {
    const int xi1 = i <= M1 / 2 ? i : i - M1;
    for (int j = 0; j < M2c; ++j) {
      const auto& z = out.get()[static_cast<std::size_t>(i) * M2c + j];
      const double mag2 = (z[0] * z[0] + z[1] * z[1]) * scale * scale;
      const bool paired = j != 0 && !(M2 % 2 == 0 && j == M2 / 2);
      const double w = s == 0.0 ? 1.0 : std::pow(1.0 + static_cast<double>(xi1) * xi1 + static_cast<double>(j) * j, s);
      sum += (paired ? 2.0 : 1.0) * w * mag2;
    }
  }
  // sin(k x1) sin(m x2) has four coefficients of modulus 1/4.
  return 2.0 * std::sqrt(sum);
}

void write_field_csv(std::ostream& out, const std::vector<double>& field, int M1, int M2) {
  out << "x1,x2,rho\n";
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < M1; ++i) {
    for (int j = 0; j < M2; ++j) {
      csv::row(out, {csv::num(two_pi * i / M1), csv::num(two_pi * j / M2),
                     csv::num(field[static_cast<std::size_t>(i) * M2 + j])});
    }
  }
}

double stable_dt(const SpectralSlice& slice, double lambda_estimate) {
  // p_n increases, so 2/p_1 bounds every row sum of L.
  return 0.5 / (2.0 / multiplier::sipm_pn(slice.params(), 1) + std::max(0.0, lambda_estimate));
}

Trajectory evolve_linear(const SpectralSlice& slice0, double T, double dt, const EvolveOptions& opts) {
  slice0.validate();
  if (!(T >= 0.0)) throw DomainError("T must be nonnegative");
  if (!(dt > 0.0)) throw DomainError("dt must be positive");
  const double bound = stable_dt(slice0, opts.lambda_estimate);
  if (dt > bound) throw DomainError("dt = " + std::to_string(dt) + " exceeds the stability bound " + std::to_string(bound));

  const int steps = T == 0.0 ? 0 : static_cast<int>(std::ceil(T / dt - 1e-12));
  const double h = steps == 0 ? 0.0 : T / steps;
  const double rate = static_cast<double>(slice0.a) * slice0.k1 * slice0.k1;

  Trajectory traj;
  SpectralSlice cur = slice0;
  auto inv_p = inverse_pn(cur.params(), cur.N());
  const double n0 = l2(cur.coeffs);
  traj.t.push_back(0.0);
  traj.shell_norm.push_back(n0);
  traj.envelope.push_back(n0);

  std::vector<double> k1, k2, k3, k4, tmp;
  for (int step = 1; step <= steps; ++step) {
    // Double N while the upper half carries more than tail_fraction of the energy.
    for (;;) {
      const std::size_t half = cur.coeffs.size() / 2;
      double tail = 0.0, total = 0.0;
      for (std::size_t i = 0; i < cur.coeffs.size(); ++i) {
        const double e = cur.coeffs[i] * cur.coeffs[i];
        total += e;
        if (i >= half) tail += e;
      }
      if (total == 0.0 || tail <= opts.tail_fraction * total) break;
      cur.coeffs.resize(2 * cur.coeffs.size(), 0.0);
      inv_p = inverse_pn(cur.params(), cur.N());
      ++traj.resizes;
    }
    const auto& c = cur.coeffs;
    const std::size_t N = c.size();
    apply(c, inv_p, sigma, k1);
    tmp.resize(N);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = c[i] + 0.5 * h * k1[i];
    apply(tmp, inv_p, sigma, k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = c[i] + 0.5 * h * k2[i];
    apply(tmp, inv_p, sigma, k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = c[i] + h * k3[i];
    apply(tmp, inv_p, sigma, k4);
    for (std::size_t i = 0; i < N; ++i) cur.coeffs[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    const double t = step * h;
    const double norm = l2(cur.coeffs);
    const double env = std::exp(rate * t) * n0;
    traj.t.push_back(t);
    traj.shell_norm.push_back(norm);
    traj.envelope.push_back(env);
    if (!std::isfinite(norm) || norm > opts.abort_factor * env) {
      throw NumericalError("shell norm " + std::to_string(norm) + " exceeds the Gronwall envelope " +
                               std::to_string(env) + " at t = " + std::to_string(t),
                           traj.shell_norm);
    }
  }
  traj.final = std::move(cur);
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,shell_norm,envelope\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    csv::row(out, {csv::num(traj.t[i]), csv::num(traj.shell_norm[i]), csv::num(traj.envelope[i])});
  }
}

SpectralSlice random_slice(const SipmParams& params, int N, int n_active, std::uint64_t seed) {
  params.validate();
  if (n_active < 1 || n_active > N) throw DomainError("n_active must lie in [1, N]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SpectralSlice out{params.k, params.a, params.beta, std::vector<double>(static_cast<std::size_t>(N), 0.0)};
  for (int n = 0; n < n_active; ++n) out.coeffs[static_cast<std::size_t>(n)] = normal(rng);
  return out;
}

Beta2Pair beta2_pair(int k, int a, const contfrac::SolveOptions& opts) {
  const SipmParams p1{1.0, a, k};
  const auto base = make_eigenpair(p1, 0.0, opts);
  const auto tilde = base.slice(base.table.certified_prefix);

  Beta2Pair out;
  out.lambda = base.lambda;
  out.slice = tilde;
  out.slice.beta = 2.0;
  std::vector<double> lambda_c(tilde.coeffs.size());  // Lambda rho has coefficients c~_n
  for (int n = 1; n <= tilde.N(); ++n) {
    const double modk = std::sqrt(static_cast<double>(k) * k + static_cast<double>(n) * n * a * a);
    out.slice.coeffs[static_cast<std::size_t>(n - 1)] = tilde.coeffs[static_cast<std::size_t>(n - 1)] / modk;
    lambda_c[static_cast<std::size_t>(n - 1)] = tilde.coeffs[static_cast<std::size_t>(n - 1)];
  }
  if (!(l2(out.slice.coeffs) > 0.0)) throw DomainError("beta2_pair: zero coefficients");

  const auto l2c = apply_L(out.slice);
  std::vector<double> diff(lambda_c.size());
  double ref = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = l2c.coeffs[i] - out.lambda * lambda_c[i];
    ref += out.lambda * lambda_c[i] * out.lambda * lambda_c[i];
  }
  out.residual = l2(diff) / std::sqrt(ref);
  return out;
}

double beta2_growth(const Beta2Pair& pair, double t) {
  const auto& s = pair.slice;
  double num = 0.0, den = 0.0;
  for (int n = 1; n <= s.N(); ++n) {
    const double c = s.coeffs[static_cast<std::size_t>(n - 1)];
    const double modk = std::sqrt(static_cast<double>(s.k1) * s.k1 + static_cast<double>(n) * n * s.a * s.a);
    const double g = std::exp(t * pair.lambda * modk);
    num += g * g * c * c;
    den += c * c;
  }
  if (!(den > 0.0)) throw DomainError("beta2_growth: zero coefficients");
  return std::sqrt(num / den);
}

double bracket_constant(double beta, int k, double lambda) {
  const double kd = k;
  return std::max(std::pow(kd, beta) / lambda, lambda * (2.0 - beta) / std::pow(kd, 1.0 + beta));
}

}  // namespace sipm::spectral
