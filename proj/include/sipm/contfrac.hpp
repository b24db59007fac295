#pragma once

// Positive root of the characteristic continued fraction
//   lambda p_1 = 1 / (lambda p_2 - 1 / (lambda p_3 - ...))
// and the eigen-coefficients it generates.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sipm/multiplier.hpp"

namespace sipm::contfrac {

using multiplier::PnSequence;

/// 2 / (lambda p + sqrt(lambda^2 p^2 - 4)). Requires lambda p >= 2.
double g_n(double lambda, double p);

/// F value or an asymptote marker.
struct FValue {
  double value = 0.0;
  bool asymptote = false;
  int depth = 0;            // truncation depth used
  int negative_pivots = 0;  // partial denominators lambda p_j - F_{j+1} below zero
};

/// Smallest depth k for which G_{k+3}(lambda) is defined, or -1 if the
/// sequence is a table too short for that.
int min_depth(double lambda, const PnSequence& pseq);

/// F_{2,k}(lambda), evaluated bottom-up from G_{k+3}(lambda).
FValue f2_truncated(double lambda, const PnSequence& pseq, int depth);

struct F2Options {
  double tol = 1e-14;         // relative change between successive depths
  int max_depth = 100000;
  double divergence = 1e12;   // |F| above this is an asymptote
};

/// F_2(lambda) as the limit of the truncations. Throws NumericalError
/// carrying the value per tried depth when the limit is not reached.
FValue f2(double lambda, const PnSequence& pseq, const F2Options& opts = {});

/// True iff every partial fraction F_j, j >= 2, is finite and positive at
/// lambda, i.e. lambda lies right of the largest asymptote of F_2. Judged
/// at the depth where F_2 converges.
bool in_a2(double lambda, const PnSequence& pseq, const F2Options& opts = {});

enum class CaseTag { direct, asymptote };

std::string to_string(CaseTag c);

struct LambdaStarResult {
  double lambda_star = 0.0;
  double bracket_lo = 0.0;  // 1 / sqrt(p1 p2)
  double bracket_hi = 0.0;  // 1 / sqrt(p1 p2 - p1^2)
  CaseTag case_tag = CaseTag::direct;
  std::optional<double> a2;  // largest asymptote of F_2, when above lambda_0
  int iterations = 0;
  double residual = 0.0;  // |lambda p1 - F_2(lambda)|
};

struct SolveOptions {
  // Bisection runs to machine resolution by default; the coefficient
  // recursion residual is proportional to the root error.
  double rel_tol = 0.0;
  double residual_tol = 1e-10;
  F2Options f2;
  multiplier::AdmissibilityOptions admissibility;
};

/// Throws DomainError for inadmissible sequences, NumericalError when no sign
/// change is found and InvariantError when a certified bound fails.
LambdaStarResult solve_lambda_star(const PnSequence& pseq, const SolveOptions& opts = {});

struct CoefficientTable {
  std::vector<double> c;    // c[n-1] = c_n, n = 1..N
  std::vector<double> eta;  // eta[n-2] = eta_n, n = 2..N
  int n0 = 0;               // largest n with p_n <= 4 p_2
  int n0_case = 0;          // the cutoff local to the case (see case_bound)
  bool decay_certified = false;   // |c_n| <= p2 2^(3 n0 - n) for n >= 3 n0
  bool case_bound_holds = false;  // the case-local bound on every c_n
  int certified_prefix = 0;       // leading terms with recursion residual <= 1e-6 max|c|
  int forward_agreement = 0;      // leading eta_n matched by the forward recursion to 1e-8
  double recursion_residual = 0.0;  // max relative residual over n <= N/2

  /// Case-local bound on |c_n|:
  ///   direct:    p2 for n <= n0_case, p2 2^(n0_case + 1 - n) after;
  ///   asymptote: p2 2^(3 n0_case - 1) for n <= n0_case, p2 2^(3 n0_case - n) after.
  static double case_bound(CaseTag tag, int n0_case, double p2, int n);
};

/// Default table length, max(64, 4 n0 + 64).
int default_length(const PnSequence& pseq);

/// eta_n = -F_n(lambda*), computed by the backward recursion from a deep
/// G terminal. The forward recursion is kept only as a cross-check.
CoefficientTable coefficients(const LambdaStarResult& res, const PnSequence& pseq, int N);

/// sum_n n^(2s) c_n^2 over the table, square-rooted.
double weighted_norm(std::span<const double> c, double s);

/// |n^s c|_2 / ((n0^s + p2/p1) |c|_2).
double sobolev_constant(const CoefficientTable& table, const PnSequence& pseq, double s);

/// Largest eigenvalue of the N x N zero-diagonal tridiagonal matrix with
/// off-diagonal -1/sqrt(p_n p_{n+1}), by Sturm-count bisection.
double truncated_matrix_oracle(const PnSequence& pseq, int N);

/// Number of eigenvalues below x of that matrix.
int sturm_count(const PnSequence& pseq, int N, double x);

enum class RowStatus { ok, asymptote, unconverged };

std::string to_string(RowStatus s);

struct ScanRow {
  double lambda = 0.0;
  std::optional<double> f2;  // empty unless status is ok
  double lambda_p1 = 0.0;
  RowStatus status = RowStatus::ok;
  int depth = 0;
  bool in_a2 = false;
};

struct ScanTable {
  std::vector<ScanRow> rows;
  std::optional<double> crossing;  // root of F_2 - lambda p1 on the rightmost branch
  int asymptotes() const;
  /// Number of asymptote rows strictly above `lambda`.
  int asymptotes_above(double lambda) const;
};

ScanTable scan_f2(const PnSequence& pseq, std::span<const double> grid, const F2Options& opts = {});

/// Header `lambda,f2,lambda_p1,status,depth`.
void write_csv(std::ostream& out, const ScanTable& table);

}  // namespace sipm::contfrac
