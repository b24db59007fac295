#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "sipm/error.hpp"
#include "sipm/multiplier.hpp"

using namespace sipm::multiplier;

TEST_CASE("sipm_pn hand values") {
  CHECK(sipm_pn({1.0, 1, 1}, 1) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(sipm_pn({2.0, 1, 1}, 7) == 2.0);
  CHECK(sipm_pn({1.0, 1, 1}, 2) > sipm_pn({1.0, 1, 1}, 1));
  // 2 (k^2 + n^2 a^2)^(1 - beta/2) / (a k^2) with k = 3, a = 2, n = 5, beta = 0.5
  CHECK(sipm_pn({0.5, 2, 3}, 5) == doctest::Approx(2.0 * std::pow(109.0, 0.75) / 18.0).epsilon(1e-15));
}

TEST_CASE("sipm_pn rejects bad parameters") {
  CHECK_THROWS_AS(sipm_pn({0.0, 1, 1}, 1), sipm::DomainError);
  CHECK_THROWS_AS(sipm_pn({2.5, 1, 1}, 1), sipm::DomainError);
  CHECK_THROWS_AS(sipm_pn({1.0, 0, 1}, 1), sipm::DomainError);
  CHECK_THROWS_AS(sipm_pn({1.0, 1, 0}, 1), sipm::DomainError);
  CHECK_THROWS_AS(sipm_pn({1.0, 1, 1}, 0), sipm::DomainError);
}

TEST_CASE("sipm_pn grows like n^(2 - beta)") {
  for (double beta : {0.25, 0.5, 1.0, 1.5, 1.9}) {
    for (int a : {1, 3}) {
      for (int k : {1, 7}) {
        const SipmParams p{beta, a, k};
        for (int n = 1; n < 300; ++n) CHECK(sipm_pn(p, n + 1) > sipm_pn(p, n));
        const double floor = std::pow(2.0, 2.0 - beta) * (1.0 - 1e-3);
        CHECK(sipm_pn(p, 2000) / sipm_pn(p, 1000) >= floor);
      }
    }
  }
}

TEST_CASE("beta = 2 is constant in n and rejected by the admissibility check") {
  const SipmParams p{2.0, 1, 3};
  for (int n = 1; n < 50; ++n) CHECK(sipm_pn(p, n) == doctest::Approx(2.0 / 9.0));
  try {
    check_admissible(PnSequence::sipm(p));
    FAIL("expected a DomainError");
  } catch (const sipm::DomainError& e) {
    CHECK(std::string(e.what()).find("sequence not unbounded") != std::string::npos);
  }
}

TEST_CASE("pn_from_symbol agrees with sipm_pn") {
  for (double beta : {0.5, 1.0, 1.5, 2.0}) {
    const auto sym = MultiplierSymbol::sipm(beta);
    for (int a : {1, 2}) {
      for (int k : {1, 4, 9}) {
        const std::vector<int> kp{k};
        for (int n : {1, 2, 5, 40}) {
          CHECK(pn_from_symbol(sym, a, kp, n) == doctest::Approx(sipm_pn({beta, a, k}, n)).epsilon(1e-14));
        }
      }
    }
  }
  const std::vector<int> one{1};
  CHECK(pn_from_symbol(MultiplierSymbol::sipm(1.0), 1, one, 1) == doctest::Approx(2.0 * std::sqrt(2.0)));
}

namespace {

MultiplierSymbol constant_symbol(double value) {
  MultiplierSymbol s;
  s.name = "constant";
  s.evaluate = [value](std::span<const int>) { return std::vector<double>{0.0, value}; };
  return s;
}

}  // namespace

TEST_CASE("pn_from_symbol trivial and degenerate symbols") {
  const std::vector<int> kp{3};
  for (int n : {1, 5, 9}) CHECK(pn_from_symbol(constant_symbol(1.0), 2, kp, n) == 1.0);
  try {
    pn_from_symbol(constant_symbol(0.0), 1, kp, 2);
    FAIL("expected a DomainError");
  } catch (const sipm::DomainError& e) {
    CHECK(std::string(e.what()).find("(3,2)") != std::string::npos);
  }
}

TEST_CASE("PnSequence sources") {
  const auto s = PnSequence::sipm({1.0, 1, 2});
  CHECK(s(3) == sipm_pn({1.0, 1, 2}, 3));
  CHECK(s.provenance() == Provenance::sipm);
  CHECK_FALSE(s.length().has_value());

  const auto t = PnSequence::from_values({1.0, 2.0, 5.0});
  CHECK(t.length() == 3);
  CHECK(t(2) == 2.0);
  CHECK_THROWS_AS(t(4), sipm::DomainError);
  CHECK_THROWS_AS(PnSequence::from_values({1.0, -1.0}), sipm::DomainError);

  const auto dir = std::filesystem::temp_directory_path() / "sipm_pn_table";
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "good.txt");
    f << "# n p_n\n1 1\n2 16\n3 81\n";
  }
  const auto loaded = PnSequence::load_table(dir / "good.txt");
  CHECK(loaded.length() == 3);
  CHECK(loaded(3) == 81.0);
  CHECK(loaded.provenance() == Provenance::user);
  {
    std::ofstream f(dir / "gap.txt");
    f << "1 1\n3 81\n";
  }
  CHECK_THROWS_AS(PnSequence::load_table(dir / "gap.txt"), sipm::DomainError);
  CHECK_THROWS_AS(PnSequence::load_table(dir / "missing.txt"), sipm::DomainError);
}

TEST_CASE("check_admissible") {
  CHECK_NOTHROW(check_admissible(PnSequence::sipm({1.0, 1, 1})));
  CHECK_THROWS_AS(check_admissible(PnSequence([](int) { return 2.0; }, Provenance::user)), sipm::DomainError);
  std::vector<double> dip{1.0, 3.0, 2.0};
  for (int n = 4; n <= 64; ++n) dip.push_back(n * n);
  CHECK_THROWS_AS(check_admissible(PnSequence::from_values(dip)), sipm::DomainError);
}

TEST_CASE("validate_symbol on the SIPM symbol") {
  SampleBox box;
  box.kprime = {{1, 64}};
  box.n = {1, 64};
  for (double beta : {0.25, 0.5, 1.0, 1.5, 1.9}) {
    const auto rep = validate_symbol(MultiplierSymbol::sipm(beta), 1, box);
    INFO("beta = " << beta);
    CHECK(rep.all_passed());
    CHECK(rep.eigensolver_ready());
    CHECK(rep.fitted_r0 < 16.0);
  }
}

TEST_CASE("validate_symbol at beta = 2: m_d no longer decays in n") {
  SampleBox box;
  box.kprime = {{1, 16}};
  const auto rep = validate_symbol(MultiplierSymbol::sipm(2.0), 1, box);
  CHECK(rep.condition("PM1").passed);
  CHECK(rep.condition("PM2").passed);
  CHECK_FALSE(rep.condition("PM4").passed);
  CHECK_FALSE(rep.condition("PM5").passed);
  CHECK_FALSE(rep.condition("PM5").witnesses.empty());
}

TEST_CASE("validate_symbol counterexamples carry witnesses") {
  SampleBox box;
  box.kprime = {{-4, 4}};
  box.n = {1, 16};

  auto shifted = MultiplierSymbol::sipm(1.0);
  const auto base = shifted.evaluate;
  shifted.evaluate = [base](std::span<const int> k) {
    auto m = base(k);
    m[1] += 0.5;
    return m;
  };
  const auto r1 = validate_symbol(shifted, 1, box);
  CHECK_FALSE(r1.condition("PM1").passed);
  REQUIRE_FALSE(r1.condition("PM1").witnesses.empty());
  CHECK(r1.condition("PM1").witnesses.front() == LatticePoint{0, 1});

  auto odd = MultiplierSymbol::sipm(1.0);
  odd.evaluate = [base](std::span<const int> k) {
    auto m = base(k);
    if (k[0] < 0) m[1] = -m[1];
    return m;
  };
  const auto r2 = validate_symbol(odd, 1, box);
  CHECK_FALSE(r2.condition("PM2").passed);
  CHECK_FALSE(r2.condition("PM2").witnesses.empty());
  CHECK_FALSE(r2.eigensolver_ready());
}
