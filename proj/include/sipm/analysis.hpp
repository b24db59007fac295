#pragma once

// Norms, dissipation functionals and regression helpers for sampled
// interfaces.

#include <span>
#include <vector>

#include "sipm/interface.hpp"

namespace sipm::analysis {

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;  // log y = intercept + slope log x
  double r2 = 1.0;
};

/// Least squares on (log x, log y). Needs two or more positive points.
PowerLawFit power_law_fit(std::span<const double> xs, std::span<const double> ys);

/// Limit of x_k = x + C r^k (0 < r < 1) from the last two entries.
double geometric_limit(std::span<const double> xs, double r);

/// Edge tolerance shared by the norm routines: |f| at both window ends must
/// be below this times max|f|.
inline constexpr double edge_rel_tol = 1e-8;

/// sqrt(sum (1 + xi^2)^s |f^(xi)|^2) for the zero-extended periodic signal on
/// a window of length N h. s = 0 gives the trapezoid L2 norm.
double hs_norm(std::span<const double> f, double h, double s, double edge_tol = edge_rel_tol);

/// Homogeneous Fourier seminorm sqrt(sum |xi|^(2s) |f^(xi)|^2).
double fourier_seminorm(std::span<const double> f, double h, double s, double edge_tol = edge_rel_tol);

/// sqrt of the double integral of |f(x) - f(y)|^2 / |x - y|^(1 + 2s), with
/// f = 0 outside the window. 0 < s < 1.
double gagliardo_seminorm(std::span<const double> f, double h, double s);

/// 4th-order central differences with zero extension.
std::vector<double> d1(std::span<const double> f, double h);
std::vector<double> d2(std::span<const double> f, double h);
/// d2 applied twice.
std::vector<double> d4(std::span<const double> f, double h);

/// (1 + beta) / (8 (1 + |f'|_inf^2)^((2 + beta)/2)) |Lambda^((1+beta)/2) d4 f|^2.
double dissipation_functional(const InterfaceState& state);

struct NormReport {
  double l2 = 0.0;
  double h2 = 0.0;
  double h4 = 0.0;
  double frac_dissipation = 0.0;  // |Lambda^((1+beta)/2) d4 f|^2
  double dissipation = 0.0;       // with the |f'|_inf prefactor
  double gagliardo_check = 0.0;   // only filled by `norm_report(..., true)`
};

NormReport norm_report(const InterfaceState& state, bool gagliardo = false, double edge_tol = edge_rel_tol);

/// Both sides of the L2 and H4 energy inequalities for a state and its rhs.
struct EnergyReport {
  NormReport norms;
  double lhs_ee1 = 0.0;  // sum f f_t h = d/dt |f|^2 / 2
  double rhs_ee1 = 0.0;  // |f|_{H2}^2
  double c_ee1 = 0.0;    // lhs / rhs when positive, else 0
  double lhs_h4 = 0.0;   // sum d4f d4f_t h
  double h4_production = 0.0;  // |f|_{H4}^(3+2 beta) (1 + |f|_{H4}^(3+beta))
};

EnergyReport energy_report(const InterfaceState& state, std::span<const double> f_t,
                           double edge_tol = edge_rel_tol);

}  // namespace sipm::analysis
