#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sipm/error.hpp"
#include "sipm/multiplier.hpp"
#include "sipm/spectral.hpp"

using namespace sipm::spectral;
using sipm::multiplier::sipm_pn;

namespace {

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("apply_L on simple slices") {
  SpectralSlice zero{3, 1, 1.0, std::vector<double>(16, 0.0)};
  for (double v : apply_L(zero).coeffs) CHECK(v == 0.0);

  SpectralSlice unit{2, 1, 1.0, std::vector<double>(16, 0.0)};
  unit.coeffs[0] = 1.0;
  const auto out = apply_L(unit);
  const double p1 = sipm_pn({1.0, 1, 2}, 1);
  CHECK(out.coeffs[0] == 0.0);
  CHECK(out.coeffs[1] == doctest::Approx(sigma / p1).epsilon(1e-15));
  for (std::size_t i = 2; i < out.coeffs.size(); ++i) CHECK(out.coeffs[i] == 0.0);

  // Interior mode n = 5 feeds n = 4 and n = 6 with 1/p_5.
  SpectralSlice mid{2, 1, 1.0, std::vector<double>(16, 0.0)};
  mid.coeffs[4] = 1.0;
  const auto m = apply_L(mid);
  CHECK(m.coeffs[3] == doctest::Approx(1.0 / sipm_pn({1.0, 1, 2}, 5)));
  CHECK(m.coeffs[5] == doctest::Approx(1.0 / sipm_pn({1.0, 1, 2}, 5)));
}

TEST_CASE("apply_L is linear") {
  const auto u = random_slice({1.0, 1, 3}, 64, 32, 7);
  const auto v = random_slice({1.0, 1, 3}, 64, 32, 8);
  SpectralSlice w = u;
  const double alpha = -1.75;
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) w.coeffs[i] = alpha * u.coeffs[i] + v.coeffs[i];
  const auto Lu = apply_L(u), Lv = apply_L(v), Lw = apply_L(w);
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
    CHECK(Lw.coeffs[i] == doctest::Approx(alpha * Lu.coeffs[i] + Lv.coeffs[i]).epsilon(1e-14).scale(1.0));
  }
}

TEST_CASE("eigenpairs") {
  for (double beta : {0.5, 1.0, 1.5}) {
    for (int k : {1, 4, 16}) {
      const auto pair = make_eigenpair({beta, 1, k}, 2.0);
      INFO("beta = " << beta << ", k = " << k);
      CHECK(eigen_residual(pair) <= 1e-8);
      CHECK(slice_hs_norm(pair.slice(), 2.0) == doctest::Approx(1.0).epsilon(1e-12));
      const double C = bracket_constant(beta, k, pair.lambda);
      CHECK(std::isfinite(C));
      CHECK(C > 0.0);
    }
  }
}

TEST_CASE("eigen_residual detects a perturbed eigenvalue and rejects zero data") {
  const auto pair = make_eigenpair({1.0, 1, 4}, 0.0);
  CHECK(eigen_residual(pair.slice(), pair.lambda) <= 1e-8);
  CHECK(eigen_residual(pair.slice(), pair.lambda * (1.0 + 1e-3)) >= 1e-4);
  SpectralSlice zero{4, 1, 1.0, std::vector<double>(16, 0.0)};
  CHECK_THROWS_AS(eigen_residual(zero, 1.0), sipm::DomainError);
}

TEST_CASE("assembled fields") {
  SUBCASE("single mode has unit L2 norm") {
    SpectralSlice one{1, 2, 1.0, std::vector<double>(8, 0.0)};
    one.coeffs[0] = 1.0;
    const auto field = assemble(one, 32, 64);
    CHECK(field_hs_norm(field, 32, 64, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    // sin(x1) sin(2 x2) at grid point (i, j).
    const double two_pi = 2.0 * std::numbers::pi;
    CHECK(field[5 * 64 + 3] == doctest::Approx(std::sin(two_pi * 5 / 32) * std::sin(two_pi * 6 / 64)));
  }
  SUBCASE("eigenfunction has unit H^s norm and sine parity") {
    const auto pair = make_eigenpair({1.0, 1, 2}, 2.0);
    const int M1 = 16, M2 = 4 * pair.table.certified_prefix;
    const auto field = assemble_eigenfunction(pair, M1, M2);
    CHECK(field_hs_norm(field, M1, M2, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
    for (int i = 0; i < M1; ++i) {
      for (int j = 0; j < M2; ++j) {
        const double v = field[static_cast<std::size_t>(i) * M2 + j];
        const double ox1 = field[static_cast<std::size_t>((M1 - i) % M1) * M2 + j];
        const double ox2 = field[static_cast<std::size_t>(i) * M2 + (M2 - j) % M2];
        CHECK(ox1 == doctest::Approx(-v).scale(1.0).epsilon(1e-12));
        CHECK(ox2 == doctest::Approx(-v).scale(1.0).epsilon(1e-12));
      }
    }
  }
  SUBCASE("under-resolved grid is rejected") {
    const auto pair = make_eigenpair({1.0, 1, 8}, 0.0);
    CHECK_THROWS_AS(assemble_eigenfunction(pair, 16, 16), sipm::DomainError);
  }
}

TEST_CASE("L2 norm lower bound across k") {
  // ||rho_k||_{L2} >= 1 / (C (1 + k^s)) for an H^s-normalized eigenfunction:
  // the measured C stays bounded as k grows.
  double worst = 0.0;
  for (int k : {1, 2, 4, 8, 16, 32}) {
    const auto pair = make_eigenpair({1.0, 1, k}, 2.0);
    const double l2norm = slice_hs_norm(pair.slice(), 0.0);
    worst = std::max(worst, 1.0 / (l2norm * (1.0 + k * k)));
  }
  CHECK(worst < 10.0);
}

TEST_CASE("linear evolution") {
  SUBCASE("zero data stays zero") {
    SpectralSlice zero{2, 1, 1.0, std::vector<double>(64, 0.0)};
    const auto tr = evolve_linear(zero, 1.0, stable_dt(zero, 1.0));
    for (double v : tr.shell_norm) CHECK(v == 0.0);
  }
  SUBCASE("eigen data grows like exp(lambda t)") {
    const auto pair = make_eigenpair({1.0, 1, 4}, 0.0);
    const auto s0 = pair.slice();
    EvolveOptions o;
    o.lambda_estimate = pair.lambda;
    const double T = 3.0 / pair.lambda;
    const auto tr = evolve_linear(s0, T, stable_dt(s0, pair.lambda), o);
    const double rate = std::log(tr.shell_norm.back() / tr.shell_norm.front()) / tr.t.back();
    CHECK(rate == doctest::Approx(pair.lambda).epsilon(1e-4));
  }
  SUBCASE("random data respects the shell envelope") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto s0 = random_slice({1.0, 1, 3}, 256, 64, seed);
      const auto tr = evolve_linear(s0, 0.5, stable_dt(s0, 5.0));
      for (std::size_t i = 0; i < tr.t.size(); ++i) CHECK(tr.shell_norm[i] <= tr.envelope[i] * (1.0 + 1e-12));
    }
  }
  SUBCASE("RK4 order") {
    const auto s0 = random_slice({1.0, 1, 2}, 128, 16, 5);
    const double T = 0.4, dt = stable_dt(s0, 3.0);
    const auto a = evolve_linear(s0, T, dt).final.coeffs;
    const auto b = evolve_linear(s0, T, dt / 2).final.coeffs;
    const auto c = evolve_linear(s0, T, dt / 4).final.coeffs;
    std::vector<double> d1(a.size()), d2(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      d1[i] = a[i] - b[i];
      d2[i] = b[i] - c[i];
    }
    CHECK(l2(d1) / l2(d2) > 12.0);
  }
}

TEST_CASE("beta = 2 construction") {
  for (int k : {1, 2, 4, 8}) {
    const auto pair = beta2_pair(k, 1);
    CHECK(pair.residual <= 1e-8);
    CHECK(beta2_growth(pair, 0.0) == doctest::Approx(1.0));
    for (double t : {0.1, 0.5}) CHECK(beta2_growth(pair, t / pair.lambda) >= std::exp(t));
  }
}
