#pragma once

// Recursion weights p_n for the three-term eigen-recursion of an even
// Fourier multiplier, and sampling checks on the multiplier itself.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sipm::multiplier {

/// Parameters of the SIPM linearization about sin(a x2), restricted to the
/// horizontal frequency k.
struct SipmParams {
  double beta = 1.0;  // derivative loss, 0 < beta <= 2
  int a = 1;          // steady-state frequency
  int k = 1;          // horizontal frequency k1

  void validate() const;
};

/// p_n = 2 (k^2 + n^2 a^2)^(1 - beta/2) / (a k^2).
double sipm_pn(const SipmParams& params, int n);

using LatticePoint = std::vector<int>;

/// A real d-vector valued symbol on Z^d. `distinguished` is the 0-based index
/// of the coordinate the steady state oscillates in (the last one for SIPM).
struct MultiplierSymbol {
  std::string name;
  int dimension = 2;
  int distinguished = 1;
  std::function<std::vector<double>(std::span<const int>)> evaluate;

  /// m_j(k) for the distinguished coordinate j.
  double distinguished_component(std::span<const int> k) const;

  /// Lattice point with `kprime` on the other coordinates and n*a on the
  /// distinguished one.
  LatticePoint embed(std::span<const int> kprime, int na) const;

  /// Velocity symbol of SIPM in d = 2, sign-normalized so that m_2 >= 0:
  /// m(k) = (-k1 k2, k1^2) |k|^(beta - 2), m(0) = 0.
  static MultiplierSymbol sipm(double beta);
};

/// p_n = (2/a) / m_d(k', n a). Throws DomainError if m_d <= 0 there.
double pn_from_symbol(const MultiplierSymbol& sym, int a, std::span<const int> kprime, int n);

enum class Provenance { sipm, from_symbol, user };

std::string to_string(Provenance p);

/// Lazily evaluated, cached sequence p_1, p_2, ...
///
/// The cache is a copy-on-write snapshot, so `prefix` may be called from
/// several threads on the same sequence. Copies share the cache.
class PnSequence {
 public:
  using Generator = std::function<double(int)>;

  PnSequence(Generator gen, Provenance provenance, std::optional<int> length = std::nullopt);

  static PnSequence sipm(const SipmParams& params);
  static PnSequence from_symbol(const MultiplierSymbol& sym, int a, std::vector<int> kprime);
  static PnSequence from_values(std::vector<double> values);
  /// Two-column text file "n p_n", n = 1, 2, 3, ... in order. '#' starts a comment.
  static PnSequence load_table(const std::filesystem::path& path);

  /// p_n, n >= 1.
  double operator()(int n) const;

  /// Snapshot holding at least p_1..p_n at indices 0..n-1.
  /// Throws DomainError if the sequence is a finite table shorter than n.
  std::shared_ptr<const std::vector<double>> prefix(int n) const;

  /// p_n straight from the generator, bypassing the cache.
  double probe(int n) const;

  /// Number of available terms for tables, nullopt for generators.
  std::optional<int> length() const { return length_; }
  Provenance provenance() const { return provenance_; }

 private:
  struct Cache;
  Generator gen_;
  Provenance provenance_;
  std::optional<int> length_;
  std::shared_ptr<Cache> cache_;
};

/// Checks that the sequence is admissible for the continued-fraction solver:
/// positive, strictly increasing on p_1..p_{check_prefix}, and p_N / p_2 >=
/// `unbounded_ratio` for N the sequence horizon (table length, or
/// `horizon` for generators, probed at powers of two).
struct AdmissibilityOptions {
  int check_prefix = 4096;
  int horizon = 1 << 22;
  double unbounded_ratio = 8.0;
};

/// Throws DomainError describing the first violated condition.
void check_admissible(const PnSequence& pseq, const AdmissibilityOptions& opts = {});

/// One sampled lattice range per k' coordinate, plus the n range.
struct SampleBox {
  std::vector<std::pair<int, int>> kprime;  // inclusive ranges
  std::pair<int, int> n{1, 64};
};

struct ConditionResult {
  std::string id;  // "PM1".."PM6"
  std::string description;
  bool passed = true;
  std::vector<LatticePoint> witnesses;
  std::string detail;
};

struct ValidationOptions {
  double growth_factor = 2.0;    // PM3: m_d at largest |k'| vs smallest
  double decay_slope_max = 0.0;  // PM4: fitted tail log-log slope in n must be below this
  double r0_max = 16.0;          // PM6: fitted growth exponent must be finite and below this
  double even_rel_tol = 1e-12;
  std::size_t max_witnesses = 4;
};

struct ValidationReport {
  std::vector<ConditionResult> conditions;
  double fitted_r0 = 0.0;

  bool all_passed() const;
  /// PM1..PM5, the ones the eigen construction relies on.
  bool eigensolver_ready() const;
  const ConditionResult& condition(const std::string& id) const;
};

ValidationReport validate_symbol(const MultiplierSymbol& sym, int a, const SampleBox& box,
                                 const ValidationOptions& opts = {});

}  // namespace sipm::multiplier
