#pragma once

// Contour dynamics for an SIPM density patch with graph interface
// x2 = f(x1, t), 0 < beta < 1, stable orientation rho2 > rho1.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sipm/analysis.hpp"
#include "sipm/interface.hpp"

namespace sipm::patch {

/// pi 2^(2 - beta) Gamma((2 - beta)/2) / (beta Gamma(beta/2)), 0 < beta <= 1.
double cbeta(double beta);

/// Discrete trapezoid offset constant: h sum'_{m>=2} (m h)^-beta minus the
/// integral from 2h, divided by h^(1 - beta).
double trapezoid_offset(double beta);

/// Initial profiles. Node 0 (the left window end) is set to zero.
std::vector<double> gaussian(double L, int N, double amp, double width, double center = 0.0);
std::vector<double> bump(double L, int N, double amp, double width, double center = 0.0);
/// Two columns "eta f" matching the grid of (L, N).
std::vector<double> load_profile(const std::filesystem::path& path, double L, int N);

/// Throws DomainError unless f vanishes on the four nodes at each window end
/// to `tol` times max(1, max|f|).
void check_support(const InterfaceState& state, double tol);

inline constexpr double initial_support_tol = 1e-10;

/// f_t at every node; node 0 is a window end and gets 0.
std::vector<double> contour_rhs(const InterfaceState& state);

struct VelocitySample {
  double x1 = 0.0;
  double x2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double distance = 0.0;  // |x2 - f(x1)|
  double magnitude() const;
};

/// Off-interface velocity by adaptive Gauss-Kronrod on panels graded toward
/// x1, with the exact tail for |zeta| > L.
VelocitySample velocity_at_point(const InterfaceState& state, double x1, double x2);

/// Interpolated f and f' (8-point Lagrange on the grid values and their
/// finite differences).
double interp_f(const InterfaceState& state, double x);
double interp_fp(const InterfaceState& state, double x);

/// v(eta - eps f', f + eps) . (-f'(eta - eps f'), 1) at node i, per eps.
std::vector<double> normal_velocity_limit(const InterfaceState& state, int i, const std::vector<double>& eps);

/// Normal-velocity sequence at node i against contour_rhs. The rate is fitted
/// on eps = 2^-3..2^-10; the limit extrapolates the geometric tail of
/// eps = 2^-3..2^-22 with ratio 2^-(1-beta).
struct LimitStudy {
  std::vector<double> eps;
  std::vector<double> values;
  double rhs = 0.0;
  analysis::PowerLawFit rate;  // |value - rhs| against eps
  double limit = 0.0;
  double rel_error = 0.0;      // |limit - rhs| / |rhs|
};
LimitStudy normal_limit_study(const InterfaceState& state, int i);

/// |v| at (x1, f(x1) + d) for d = 2^-m_lo..2^-m_hi and its log-log fit.
struct SingularStudy {
  std::vector<double> d;
  std::vector<double> speed;
  analysis::PowerLawFit fit;
};
SingularStudy singular_velocity_study(const InterfaceState& state, double x1, int m_lo = 3, int m_hi = 8);

struct StepOptions {
  double c_cfl = 0.25;         // dt <= c_cfl h^(1+beta) / (1 + max|f''|)
  double stability = 0.8;      // fraction of the RK4 real-axis limit used by `max_dt`
  double support_tol = 1e-2;   // leak allowed at the window ends, relative to max|f|
};

/// min(c_cfl h^(1+beta) / (1 + max|f''|), stability * 2.78 / rho), rho the
/// Nyquist-mode growth rate of the discrete kernel.
double max_dt(const InterfaceState& state, const StepOptions& opts = {});

/// Classical RK4. Throws DomainError on dt above `max_dt` or a support leak.
InterfaceState step_rk4(const InterfaceState& state, double dt, const StepOptions& opts = {});

struct NormRow {
  double t = 0.0;
  double l2 = 0.0;
  double h2 = 0.0;
  double h4 = 0.0;
  double dissipation = 0.0;
  double lhs_ee1 = 0.0;
  double rhs_ee1 = 0.0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> f;
};

struct RunOptions {
  StepOptions step;
  double dt = 0.0;              // 0: use max_dt at the initial state
  double h4_ceiling = 1e6;      // blow-up guard
};

struct RunResult {
  InterfaceState final;
  std::vector<Snapshot> snapshots;
  std::vector<NormRow> norms;
  int steps = 0;
  double dt = 0.0;
  bool aborted = false;
  std::string abort_reason;
  double c_ee1 = 0.0;  // max over rows of lhs_ee1 / rhs_ee1, clipped at 0
};

/// Integrates to T, recording a snapshot and a norm row every
/// `snapshot_every` steps and at T.
RunResult run(const InterfaceState& state0, double T, int snapshot_every, const RunOptions& opts = {});

/// Writes `eta,f`.
void write_snapshot_csv(std::ostream& out, const InterfaceState& grid, const Snapshot& snap);
/// Writes `t,l2,h2,h4,dissipation,lhs_ee1,rhs_ee1`.
void write_norms_csv(std::ostream& out, const std::vector<NormRow>& rows);

}  // namespace sipm::patch
