#pragma once

// Linearized SIPM about sin(a x2) on one horizontal frequency k1. The slice
// coefficient c_n multiplies sin(k1 x1) sin(n a x2).

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sipm/contfrac.hpp"
#include "sipm/multiplier.hpp"

namespace sipm::spectral {

using multiplier::SipmParams;

/// Sign of L for R_j = i k_j / |k|: mode n feeds +1/p_n into n - 1 and n + 1.
inline constexpr int sigma = +1;

struct SpectralSlice {
  int k1 = 1;
  int a = 1;
  double beta = 1.0;
  std::vector<double> coeffs;  // coeffs[n-1] for n = 1..N

  int N() const { return static_cast<int>(coeffs.size()); }
  SipmParams params() const { return {beta, a, k1}; }
  /// Throws DomainError on N < 3, bad parameters or non-finite entries.
  void validate() const;
};

/// (L c)_m = sign (c_{m-1}/p_{m-1} + c_{m+1}/p_{m+1}), c_0 = c_{N+1} = 0.
SpectralSlice apply_L(const SpectralSlice& slice, int sign = sigma);

/// Squared Sobolev weight of sin(k1 x1) sin(n a x2): (1 + k1^2 + n^2 a^2)^s.
double mode_weight(int k1, int a, int n, double s);

/// sqrt(sum_n (1 + k1^2 + n^2 a^2)^s c_n^2). A single mode with c = 1 has
/// unit L2 norm in this normalization.
double slice_hs_norm(const SpectralSlice& slice, double s);

struct EigenPair {
  SipmParams params;
  double s = 0.0;
  double lambda = 0.0;
  contfrac::CoefficientTable table;  // recursion convention, c_1 = p_1
  double normalization = 1.0;        // C_{s,k}: H^s norm of the sigma = +1 vector

  /// c~_n = (-1)^(n+1) c_n / C_{s,k} over the certified prefix, zero-padded
  /// to `N` (default max(4 prefix, 256)).
  SpectralSlice slice(int N = 0) const;
};

EigenPair make_eigenpair(const SipmParams& params, double s, const contfrac::SolveOptions& opts = {});

/// |L c - lambda c| / |c| over the certified prefix, minimized over both
/// signs of L and the alternation c_n -> (-1)^n c_n.
double eigen_residual(const EigenPair& pair);
double eigen_residual(const SpectralSlice& slice, double lambda);

/// rho(x1, x2) on the M1 x M2 grid x = 2 pi (i/M1, j/M2), row-major in i.
/// Throws DomainError when M1 < 4 k1 or M2 < 4 a N_eff, N_eff being the last
/// coefficient above 1e-17 of the largest.
std::vector<double> assemble_eigenfunction(const EigenPair& pair, int M1, int M2);
std::vector<double> assemble(const SpectralSlice& slice, int M1, int M2);

/// H^s norm of a sampled periodic field via the 2D DFT, in the slice
/// normalization.
double field_hs_norm(const std::vector<double>& field, int M1, int M2, double s);

/// Writes `x1,x2,rho`.
void write_field_csv(std::ostream& out, const std::vector<double>& field, int M1, int M2);

/// 0.5 / (max_n 2/p_n + lambda_estimate).
double stable_dt(const SpectralSlice& slice, double lambda_estimate);

struct Trajectory {
  std::vector<double> t;
  std::vector<double> shell_norm;
  std::vector<double> envelope;  // e^(a k1^2 t) [rho(k1, 0)]
  SpectralSlice final;
  int resizes = 0;  // times the truncation doubled
};

struct EvolveOptions {
  double lambda_estimate = 0.0;   // for the dt bound
  double tail_fraction = 1e-10;   // energy allowed beyond N/2 before N doubles
  double abort_factor = 10.0;     // norm above this times the envelope aborts
};

/// Classical RK4 for d/dt c = L c. The step is shrunk to T / ceil(T / dt).
/// Throws DomainError when dt exceeds the stability bound and
/// NumericalError when the Gronwall envelope is exceeded by abort_factor.
Trajectory evolve_linear(const SpectralSlice& slice0, double T, double dt, const EvolveOptions& opts = {});

/// Writes `t,shell_norm,envelope`.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Deterministic standard-normal coefficients on n = 1..n_active, zero after.
SpectralSlice random_slice(const SipmParams& params, int N, int n_active, std::uint64_t seed);

struct Beta2Pair {
  double lambda = 0.0;
  SpectralSlice slice;  // beta = 2 coefficients c_n = c~_n / |(k, n a)|
  double residual = 0.0;  // |L_2 c - lambda Lambda c| / |lambda Lambda c|
};

/// The beta = 2 construction from the beta = 1 eigenpair.
Beta2Pair beta2_pair(int k, int a, const contfrac::SolveOptions& opts = {});

/// |e^(t lambda Lambda) rho| / |rho| on the truncated mode set.
double beta2_growth(const Beta2Pair& pair, double t);

/// max(k^beta / lambda, lambda (2 - beta) / k^(1 + beta)).
double bracket_constant(double beta, int k, double lambda);

}  // namespace sipm::spectral
