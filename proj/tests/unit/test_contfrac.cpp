#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sipm/contfrac.hpp"
#include "sipm/error.hpp"

using namespace sipm::contfrac;
using sipm::multiplier::PnSequence;
using sipm::multiplier::SipmParams;

namespace {

PnSequence seq(double beta, int a, int k) { return PnSequence::sipm(SipmParams{beta, a, k}); }

// Reference values: largest eigenvalue of the 120 x 120 symmetrized
// tridiagonal matrix, 30-digit arithmetic (mpmath eigsy); N = 80 agrees to
// all printed digits.
struct Frozen {
  double beta;
  int a;
  int k;
  double lambda;
};
constexpr Frozen frozen[] = {
    {1.0, 1, 1, 0.34920670843306798694},
    {1.5, 1, 1, 0.52913719769161944824},
    {0.5, 2, 8, 3.6783487220350190274},
    {1.0, 1, 8, 6.6940724940588237691},
};

}  // namespace

TEST_CASE("g_n") {
  CHECK(g_n(2.0, 1.0) == 1.0);
  for (double lp : {2.0 + 1e-9, 2.5, 10.0, 1e3, 1e8}) {
    const double g = g_n(lp, 1.0);
    CHECK(g * (lp - g) == doctest::Approx(1.0).epsilon(1e-13));
    if (lp > 2.0) {
      CHECK(g >= 1.0 / lp);
      CHECK(g <= 1.0);
    }
  }
  const double g = g_n(10.0, 1.0);
  CHECK(g > 0.1);
  CHECK(g < 0.2);
  CHECK_THROWS_AS(g_n(1.0, 1.0), sipm::DomainError);
}

TEST_CASE("G_{n+1} < lambda p_n on sampled lambda") {
  const auto p = seq(1.0, 1, 3);
  const double lambda0 = 1.0 / std::sqrt(p(1) * p(2));
  for (int n = 2; n <= 64; ++n) {
    for (double f : {1.0, 1.5, 3.0, 20.0}) {
      const double lambda = std::max(lambda0, 2.0 / p(n + 1)) * f;
      CHECK(g_n(lambda, p(n + 1)) < lambda * p(n));
    }
  }
}

TEST_CASE("f2_truncated at depth 0 and monotone in depth") {
  const auto p = seq(1.0, 1, 1);
  const double lambda = 2.0 / p(2);  // G_2 defined, so every truncation is finite
  const auto t0 = f2_truncated(lambda, p, 0);
  CHECK(t0.value == doctest::Approx(1.0 / (lambda * p(2) - g_n(lambda, p(3)))).epsilon(1e-15));
  double prev = g_n(lambda, p(2));
  for (int d = 0; d < 40; ++d) {
    const auto v = f2_truncated(lambda, p, d);
    REQUIRE_FALSE(v.asymptote);
    CHECK(v.value > 0.0);
    CHECK(v.value <= prev * (1.0 + 1e-15));
    prev = v.value;
  }
}

TEST_CASE("f2 truncations stagnate") {
  const auto p = seq(1.0, 1, 1);
  const double lambda = 0.4;
  const double v200 = f2_truncated(lambda, p, 200).value;
  const double v400 = f2_truncated(lambda, p, 400).value;
  CHECK(std::abs(v200 - v400) <= 1e-12 * std::abs(v400));
  CHECK(f2(lambda, p).value == doctest::Approx(v400).epsilon(1e-13));
}

TEST_CASE("F_2 bounds for large lambda") {
  for (const auto& p : {seq(0.5, 1, 2), seq(1.0, 2, 5), seq(1.5, 1, 1)}) {
    for (double lambda : {10.0, 100.0, 1e4}) {
      const auto v = f2(lambda, p);
      CHECK(v.value > 1.0 / (lambda * p(2)));
      CHECK(v.value < 2.0 / (lambda * p(2)));
    }
  }
}

TEST_CASE("lambda* against an independent high-precision oracle") {
  for (const auto& f : frozen) {
    const auto res = solve_lambda_star(seq(f.beta, f.a, f.k));
    INFO("beta = " << f.beta << ", a = " << f.a << ", k = " << f.k);
    CHECK(res.lambda_star == doctest::Approx(f.lambda).epsilon(1e-13));
    CHECK(res.residual <= 1e-10);
  }
}

TEST_CASE("bracket and case split") {
  for (double beta : {0.5, 1.0, 1.5}) {
    for (int a : {1, 2}) {
      for (int k : {1, 3, 8, 32}) {
        const auto p = seq(beta, a, k);
        const auto res = solve_lambda_star(p);
        INFO("beta = " << beta << ", a = " << a << ", k = " << k);
        CHECK(res.bracket_lo == doctest::Approx(1.0 / std::sqrt(p(1) * p(2))));
        CHECK(res.bracket_hi == doctest::Approx(1.0 / std::sqrt(p(1) * p(2) - p(1) * p(1))));
        CHECK(res.lambda_star > res.bracket_lo);
        CHECK(res.lambda_star < res.bracket_hi);
        CHECK(res.lambda_star <= std::max(2.0 / p(2), 1.0 / p(1)));
        CHECK((res.case_tag == CaseTag::direct) == (p(2) >= 4.0 * p(1)));
        const auto v = f2(res.lambda_star, p);
        CHECK(v.value == doctest::Approx(res.lambda_star * p(1)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("direct case on a quartic table") {
  std::vector<double> v;
  for (int n = 1; n <= 4000; ++n) v.push_back(std::pow(static_cast<double>(n), 4));
  const auto p = PnSequence::from_values(v);
  const auto res = solve_lambda_star(p);
  CHECK(res.case_tag == CaseTag::direct);
  CHECK_FALSE(res.a2.has_value());
  CHECK(res.lambda_star == doctest::Approx(truncated_matrix_oracle(p, 512)).epsilon(1e-12));
}

TEST_CASE("asymptote case locates a2") {
  const auto p = seq(1.5, 1, 1);
  const auto res = solve_lambda_star(p);
  CHECK(res.case_tag == CaseTag::asymptote);
  REQUIRE(res.a2.has_value());
  CHECK(*res.a2 > res.bracket_lo);
  CHECK(*res.a2 < res.lambda_star);
  // Just above a2 F_2 is large and positive; just below it is not finite and positive.
  const auto above = f2(*res.a2 * (1.0 + 1e-6), p);
  CHECK_FALSE(above.asymptote);
  CHECK(above.value > 10.0 * res.lambda_star * p(1));
  CHECK_FALSE(in_a2(*res.a2 * (1.0 - 1e-6), p));
}

TEST_CASE("solver rejects inadmissible sequences") {
  CHECK_THROWS_AS(solve_lambda_star(PnSequence([](int) { return 2.0; }, sipm::multiplier::Provenance::user)),
                  sipm::DomainError);
  CHECK_THROWS_AS(solve_lambda_star(seq(2.0, 1, 1)), sipm::DomainError);
}

TEST_CASE("coefficient table") {
  for (const auto& f : frozen) {
    const auto p = seq(f.beta, f.a, f.k);
    const auto res = solve_lambda_star(p);
    const int N = default_length(p);
    const auto t = coefficients(res, p, N);
    INFO("beta = " << f.beta << ", k = " << f.k);
    CHECK(t.c[0] == p(1));
    CHECK(t.eta[0] == doctest::Approx(-res.lambda_star * p(1)));
    for (int n = 2; n <= 10; ++n) {
      double prod = p(n);
      for (int j = 2; j <= n; ++j) prod *= t.eta[static_cast<std::size_t>(j - 2)];
      CHECK(t.c[static_cast<std::size_t>(n - 1)] == doctest::Approx(prod).epsilon(1e-12));
    }
    CHECK(t.recursion_residual <= 1e-9);
    CHECK(t.certified_prefix >= N / 2);
    CHECK(t.decay_certified);
    CHECK(t.case_bound_holds);
    CHECK(t.forward_agreement >= 3);
    for (int n = t.n0 + 1; n <= N / 2; ++n) {
      const double F = -t.eta[static_cast<std::size_t>(n - 2)];
      const double lp = res.lambda_star * p(n);
      CHECK(F > 1.0 / lp);
      CHECK(F < 2.0 / lp);
    }
  }
}

TEST_CASE("n0 is the largest n with p_n <= 4 p_2") {
  const auto p = seq(1.0, 1, 8);
  const auto t = coefficients(solve_lambda_star(p), p, 200);
  CHECK(p(t.n0) <= 4.0 * p(2));
  CHECK(p(t.n0 + 1) > 4.0 * p(2));
}

TEST_CASE("Sobolev constant stays below 32") {
  for (double beta : {0.5, 1.0, 1.5}) {
    for (int k : {1, 4, 16}) {
      const auto p = seq(beta, 1, k);
      const auto t = coefficients(solve_lambda_star(p), p, default_length(p));
      for (double s : {0.0, 1.0, 2.0, 4.0}) CHECK(sobolev_constant(t, p, s) <= 32.0);
    }
  }
}

TEST_CASE("truncated matrix oracle closed forms") {
  CHECK(truncated_matrix_oracle(PnSequence::from_values({1.0, 4.0}), 2) == doctest::Approx(0.5).epsilon(1e-14));
  // Zero diagonal, off-diagonals b1..b3: top eigenvalue of the 3 x 3 and 4 x 4 cases.
  const std::vector<double> v{1.0, 2.0, 5.0, 7.0};
  const double b1 = 1.0 / std::sqrt(2.0), b2 = 1.0 / std::sqrt(10.0), b3 = 1.0 / std::sqrt(35.0);
  const auto p = PnSequence::from_values(v);
  CHECK(truncated_matrix_oracle(p, 3) == doctest::Approx(std::sqrt(b1 * b1 + b2 * b2)).epsilon(1e-14));
  const double S = b1 * b1 + b2 * b2 + b3 * b3;
  const double top4 = std::sqrt((S + std::sqrt(S * S - 4.0 * b1 * b1 * b3 * b3)) / 2.0);
  CHECK(truncated_matrix_oracle(p, 4) == doctest::Approx(top4).epsilon(1e-14));
}

TEST_CASE("oracle spectrum is symmetric and converges in N") {
  const auto p = seq(1.0, 1, 4);
  for (int N : {5, 8, 13}) {
    for (double x : {0.01, 0.1, 0.3}) CHECK(sturm_count(p, N, x) == N - sturm_count(p, N, -x));
  }
  CHECK(truncated_matrix_oracle(p, 4096) == doctest::Approx(truncated_matrix_oracle(p, 2048)).epsilon(1e-9));
}

TEST_CASE("scan_f2 structure") {
  SUBCASE("one point at lambda*") {
    const auto p = seq(1.0, 1, 2);
    const auto res = solve_lambda_star(p);
    const std::vector<double> grid{res.lambda_star};
    const auto t = scan_f2(p, grid);
    REQUIRE(t.rows.size() == 1);
    REQUIRE(t.rows[0].f2.has_value());
    CHECK(*t.rows[0].f2 == doctest::Approx(res.lambda_star * p(1)).epsilon(1e-10));
  }
  SUBCASE("asymptote above lambda_0 and crossing at lambda*") {
    const auto p = seq(1.5, 1, 1);
    const auto res = solve_lambda_star(p);
    std::vector<double> grid;
    for (int i = 0; i <= 400; ++i) grid.push_back(res.bracket_lo + (1.25 * res.bracket_hi - res.bracket_lo) * i / 400);
    const auto t = scan_f2(p, grid);
    CHECK(t.asymptotes_above(res.bracket_lo) >= 1);
    REQUIRE(t.crossing.has_value());
    CHECK(*t.crossing == doctest::Approx(res.lambda_star).epsilon(1e-6));
    for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i - 1].lambda <= t.rows[i].lambda);
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str().rfind("lambda,f2,lambda_p1,status,depth\n", 0) == 0);
    CHECK(os.str().find(",,") != std::string::npos);  // asymptote rows have an empty f2
  }
  SUBCASE("grid below lambda_0 is rejected") {
    const auto p = seq(1.0, 1, 1);
    const std::vector<double> grid{0.01};
    CHECK_THROWS_AS(scan_f2(p, grid), sipm::DomainError);
  }
}
