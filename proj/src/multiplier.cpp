#include "sipm/multiplier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include "sipm/analysis.hpp"
#include "sipm/error.hpp"

namespace sipm::multiplier {

void SipmParams::validate() const {
  if (!(beta > 0.0 && beta <= 2.0)) {
    throw DomainError("beta must lie in (0, 2], got " + std::to_string(beta));
  }
  if (a < 1) throw DomainError("a must be a positive integer");
  if (k < 1) throw DomainError("k must be a positive integer");
}

double sipm_pn(const SipmParams& params, int n) {
  params.validate();
  if (n < 1) throw DomainError("p_n is defined for n >= 1");
  const double k2 = static_cast<double>(params.k) * params.k;
  const double na = static_cast<double>(n) * params.a;
  return 2.0 * std::pow(k2 + na * na, 1.0 - params.beta / 2.0) / (params.a * k2);
}

namespace {

std::string format_point(std::span<const int> k) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
  os << ')';
  return os.str();
}

}  // namespace

double MultiplierSymbol::distinguished_component(std::span<const int> k) const {
  const auto m = evaluate(k);
  if (static_cast<int>(m.size()) != dimension) {
    throw DomainError("symbol '" + name + "' returned a vector of wrong dimension");
  }
  return m[static_cast<std::size_t>(distinguished)];
}

LatticePoint MultiplierSymbol::embed(std::span<const int> kprime, int na) const {
  if (static_cast<int>(kprime.size()) != dimension - 1) {
    throw DomainError("k' must have dimension d - 1 = " + std::to_string(dimension - 1));
  }
  LatticePoint k;
  k.reserve(static_cast<std::size_t>(dimension));
  for (int i = 0, j = 0; i < dimension; ++i) {
    k.push_back(i == distinguished ? na : kprime[static_cast<std::size_t>(j++)]);
  }
  return k;
}

MultiplierSymbol MultiplierSymbol::sipm(double beta) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("beta must lie in (0, 2]");
  MultiplierSymbol sym;
  sym.name = "sipm";
  sym.dimension = 2;
  sym.distinguished = 1;
  sym.evaluate = [beta](std::span<const int> k) -> std::vector<double> {
    const double k1 = k[0];
    const double k2 = k[1];
    const double r2 = k1 * k1 + k2 * k2;
    if (r2 == 0.0) return {0.0, 0.0};
    const double w = std::pow(r2, beta / 2.0 - 1.0);
    return {-k1 * k2 * w, k1 * k1 * w};
  };
  return sym;
}

double pn_from_symbol(const MultiplierSymbol& sym, int a, std::span<const int> kprime, int n) {
  if (a < 1) throw DomainError("a must be a positive integer");
  if (n < 1) throw DomainError("p_n is defined for n >= 1");
  const auto k = sym.embed(kprime, n * a);
  const double md = sym.distinguished_component(k);
  if (!(md > 0.0) || !std::isfinite(md)) {
    throw DomainError("m_d is not positive at lattice point " + format_point(k));
  }
  return (2.0 / a) / md;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::sipm:
      return "sipm";
    case Provenance::from_symbol:
      return "from-symbol";
    case Provenance::user:
      return "user";
  }
  return "unknown";
}

struct PnSequence::Cache {
  std::mutex grow;
  std::shared_ptr<const std::vector<double>> values = std::make_shared<const std::vector<double>>();
};

PnSequence::PnSequence(Generator gen, Provenance provenance, std::optional<int> length)
    : gen_(std::move(gen)), provenance_(provenance), length_(length), cache_(std::make_shared<Cache>()) {}

PnSequence PnSequence::sipm(const SipmParams& params) {
  params.validate();
  return PnSequence([params](int n) { return sipm_pn(params, n); }, Provenance::sipm);
}

PnSequence PnSequence::from_symbol(const MultiplierSymbol& sym, int a, std::vector<int> kprime) {
  return PnSequence([sym, a, kprime](int n) { return pn_from_symbol(sym, a, kprime, n); },
                    Provenance::from_symbol);
}

PnSequence PnSequence::from_values(std::vector<double> values) {
  if (values.empty()) throw DomainError("empty p_n table");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw DomainError("p_" + std::to_string(i + 1) + " must be positive and finite");
    }
  }
  const int len = static_cast<int>(values.size());
  auto shared = std::make_shared<const std::vector<double>>(std::move(values));
  return PnSequence([shared](int n) { return (*shared)[static_cast<std::size_t>(n - 1)]; },
                    Provenance::user, len);
}

PnSequence PnSequence::load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open p_n table " + path.string());
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    long n = 0;
    double p = 0.0;
    if (!(ls >> n)) continue;  // blank line
    if (!(ls >> p)) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) + ": expected two columns");
    }
    if (n != static_cast<long>(values.size()) + 1) {
      throw DomainError(path.string() + ":" + std::to_string(lineno) +
                        ": n must start at 1 and increase by one");
    }
    values.push_back(p);
  }
  return from_values(std::move(values));
}

double PnSequence::operator()(int n) const {
  if (n < 1) throw DomainError("p_n is defined for n >= 1");
  auto snap = std::atomic_load(&cache_->values);
  if (static_cast<int>(snap->size()) >= n) return (*snap)[static_cast<std::size_t>(n - 1)];
  return (*prefix(n))[static_cast<std::size_t>(n - 1)];
}

std::shared_ptr<const std::vector<double>> PnSequence::prefix(int n) const {
  if (n < 0) throw DomainError("negative prefix length");
  auto snap = std::atomic_load(&cache_->values);
  if (static_cast<int>(snap->size()) >= n) return snap;
  if (length_ && n > *length_) {
    throw DomainError("p_n table has " + std::to_string(*length_) + " entries, " +
                      std::to_string(n) + " requested");
  }
  std::lock_guard lock(cache_->grow);
  snap = std::atomic_load(&cache_->values);
  if (static_cast<int>(snap->size()) >= n) return snap;
  int target = std::max(n, 2 * static_cast<int>(snap->size()));
  if (length_) target = std::min(target, *length_);
  auto grown = std::make_shared<std::vector<double>>(*snap);
  grown->reserve(static_cast<std::size_t>(target));
  for (int i = static_cast<int>(grown->size()) + 1; i <= target; ++i) grown->push_back(gen_(i));
  std::shared_ptr<const std::vector<double>> published = std::move(grown);
  std::atomic_store(&cache_->values, published);
  return published;
}

double PnSequence::probe(int n) const {
  if (n < 1) throw DomainError("p_n is defined for n >= 1");
  if (length_ && n > *length_) throw DomainError("index beyond p_n table");
  return gen_(n);
}

void check_admissible(const PnSequence& pseq, const AdmissibilityOptions& opts) {
  const int avail = pseq.length().value_or(std::numeric_limits<int>::max());
  if (avail < 3) throw DomainError("need at least p_1, p_2, p_3");
  const int prefix_len = std::min(opts.check_prefix, avail);
  const auto p = pseq.prefix(prefix_len);
  auto pn = [&](int n) { return (*p)[static_cast<std::size_t>(n - 1)]; };
  for (int n = 1; n <= prefix_len; ++n) {
    if (!(pn(n) > 0.0) || !std::isfinite(pn(n))) {
      throw DomainError("sequence not positive: p_" + std::to_string(n) + " = " + std::to_string(pn(n)));
    }
  }

  // Beyond the prefix, probe at powers of two up to the horizon.
  const int horizon = pseq.length() ? avail : std::max(opts.horizon, prefix_len);
  std::vector<std::pair<int, double>> probes;
  for (long n = 2L * prefix_len; n < horizon; n *= 2) {
    probes.emplace_back(static_cast<int>(n), pseq.probe(static_cast<int>(n)));
  }
  if (horizon > prefix_len) probes.emplace_back(horizon, pseq.probe(horizon));

  const double last = probes.empty() ? pn(prefix_len) : probes.back().second;
  const double ratio = last / pn(2);
  if (!(ratio >= opts.unbounded_ratio)) {
    std::ostringstream os;
    os << "sequence not unbounded: p_" << horizon << " / p_2 = " << ratio << " < " << opts.unbounded_ratio;
    throw DomainError(os.str());
  }

  for (int n = 2; n <= prefix_len; ++n) {
    if (!(pn(n) > pn(n - 1))) throw DomainError("sequence not increasing at n = " + std::to_string(n));
  }
  double prev = pn(prefix_len);
  for (const auto& [n, v] : probes) {
    if (!(v > prev)) throw DomainError("sequence not increasing near n = " + std::to_string(n));
    prev = v;
  }
}

namespace {

// Every lattice point of the k' box, in lexicographic order.
std::vector<LatticePoint> enumerate_box(const std::vector<std::pair<int, int>>& ranges) {
  std::vector<LatticePoint> out;
  LatticePoint cur;
  cur.reserve(ranges.size());
  auto rec = [&](auto&& self, std::size_t dim) -> void {
    if (dim == ranges.size()) {
      out.push_back(cur);
      return;
    }
    for (int v = ranges[dim].first; v <= ranges[dim].second; ++v) {
      cur.push_back(v);
      self(self, dim + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

double norm2(std::span<const int> k) {
  double s = 0.0;
  for (int v : k) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

void fail(ConditionResult& c, const LatticePoint& witness, std::size_t max_witnesses) {
  c.passed = false;
  if (c.witnesses.size() < max_witnesses) c.witnesses.push_back(witness);
}

}  // namespace

ValidationReport validate_symbol(const MultiplierSymbol& sym, int a, const SampleBox& box,
                                 const ValidationOptions& opts) {
  if (static_cast<int>(box.kprime.size()) != sym.dimension - 1) {
    throw DomainError("sample box must have d - 1 k' ranges");
  }
  if (box.n.first < 1 || box.n.second < box.n.first) throw DomainError("empty n range");
  for (const auto& [lo, hi] : box.kprime) {
    if (hi < lo) throw DomainError("empty k' range");
  }

  ValidationReport report;
  ConditionResult pm1{"PM1", "m(0', a) = 0: sin(a x_d) is a steady state", true, {}, {}};
  ConditionResult pm2{"PM2", "m_d even and positive", true, {}, {}};
  ConditionResult pm3{"PM3", "m_d(k', na) grows with |k'| at fixed n", true, {}, {}};
  ConditionResult pm4{"PM4", "m_d(k', na) decays as n grows at fixed k'", true, {}, {}};
  ConditionResult pm5{"PM5", "m_d(k', na) strictly decreasing in n", true, {}, {}};
  ConditionResult pm6{"PM6", "|m(k)| <= C (1 + |k|)^r0", true, {}, {}};

  {
    const LatticePoint zero(box.kprime.size(), 0);
    const auto k = sym.embed(zero, a);
    const auto m = sym.evaluate(k);
    for (double v : m) {
      if (v != 0.0) {
        fail(pm1, k, opts.max_witnesses);
        break;
      }
    }
  }

  auto kprimes = enumerate_box(box.kprime);
  std::erase_if(kprimes, [](const LatticePoint& k) {
    return std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
  });
  if (kprimes.empty()) throw DomainError("sample box contains only k' = 0");

  const int n_lo = box.n.first;
  const int n_hi = box.n.second;
  // md[i][n - n_lo] = m_d(k'_i, n a)
  std::vector<std::vector<double>> md(kprimes.size());
  std::vector<double> shell_norm;
  std::vector<double> shell_max;
  for (std::size_t i = 0; i < kprimes.size(); ++i) {
    md[i].reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
    for (int n = n_lo; n <= n_hi; ++n) {
      const auto k = sym.embed(kprimes[i], n * a);
      const auto m = sym.evaluate(k);
      const double v = m[static_cast<std::size_t>(sym.distinguished)];
      md[i].push_back(v);

      if (!(v > 0.0) || !std::isfinite(v)) fail(pm2, k, opts.max_witnesses);
      LatticePoint neg(k);
      for (int& c : neg) c = -c;
      const double vn = sym.distinguished_component(neg);
      if (std::abs(vn - v) > opts.even_rel_tol * std::max(std::abs(v), std::abs(vn))) {
        fail(pm2, k, opts.max_witnesses);
      }

      double mag = 0.0;
      for (double c : m) {
        if (!std::isfinite(c)) fail(pm6, k, opts.max_witnesses);
        mag += c * c;
      }
      shell_norm.push_back(1.0 + norm2(k));
      shell_max.push_back(std::sqrt(mag));
    }
  }

  // PM3: compare the smallest and largest |k'| samples at every n.
  std::size_t imin = 0;
  std::size_t imax = 0;
  for (std::size_t i = 1; i < kprimes.size(); ++i) {
    if (norm2(kprimes[i]) < norm2(kprimes[imin])) imin = i;
    if (norm2(kprimes[i]) > norm2(kprimes[imax])) imax = i;
  }
  for (int n = n_lo; n <= n_hi; ++n) {
    const auto j = static_cast<std::size_t>(n - n_lo);
    if (!(md[imax][j] >= opts.growth_factor * md[imin][j])) {
      fail(pm3, sym.embed(kprimes[imax], n * a), opts.max_witnesses);
    }
  }
  if (kprimes.size() < 2) {
    pm3.passed = false;
    pm3.detail = "box has a single k' sample";
  }

  // PM4 / PM5: per k', strict decrease in n and a negative log-log tail slope.
  const int tail_lo = n_lo + (n_hi - n_lo) / 2;
  for (std::size_t i = 0; i < kprimes.size(); ++i) {
    for (int n = n_lo + 1; n <= n_hi; ++n) {
      const auto j = static_cast<std::size_t>(n - n_lo);
      if (!(md[i][j] < md[i][j - 1])) fail(pm5, sym.embed(kprimes[i], n * a), opts.max_witnesses);
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (int n = tail_lo; n <= n_hi; ++n) {
      const double v = md[i][static_cast<std::size_t>(n - n_lo)];
      if (v > 0.0) {
        xs.push_back(n);
        ys.push_back(v);
      }
    }
    if (xs.size() < 3) {
      fail(pm4, sym.embed(kprimes[i], n_hi * a), opts.max_witnesses);
      pm4.detail = "n range too short to fit a decay rate";
      continue;
    }
    const auto fit = analysis::power_law_fit(xs, ys);
    if (!(fit.slope < opts.decay_slope_max)) fail(pm4, sym.embed(kprimes[i], n_hi * a), opts.max_witnesses);
  }

  // PM6: fit the envelope of |m| against 1 + |k| over shells.
  {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < shell_norm.size(); ++i) {
      if (shell_max[i] > 0.0 && std::isfinite(shell_max[i])) {
        xs.push_back(shell_norm[i]);
        ys.push_back(shell_max[i]);
      }
    }
    if (xs.size() >= 3) {
      const auto fit = analysis::power_law_fit(xs, ys);
      // Upper envelope exponent: the fit slope plus whatever is needed to
      // cover the largest residual at the largest |k|.
      double r0 = std::max(0.0, fit.slope);
      double logc = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < xs.size(); ++i) logc = std::max(logc, std::log(ys[i]) - r0 * std::log(xs[i]));
      report.fitted_r0 = r0;
      std::ostringstream os;
      os << "r0 = " << r0 << ", C = " << std::exp(logc);
      pm6.detail = os.str();
      if (!std::isfinite(r0) || r0 > opts.r0_max) pm6.passed = false;
    } else {
      report.fitted_r0 = 0.0;
      pm6.detail = "symbol vanishes on the box";
    }
  }

  report.conditions = {pm1, pm2, pm3, pm4, pm5, pm6};
  return report;
}

bool ValidationReport::all_passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const auto& c) { return c.passed; });
}

bool ValidationReport::eigensolver_ready() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const auto& c) { return c.id == "PM6" || c.passed; });
}

const ConditionResult& ValidationReport::condition(const std::string& id) const {
  for (const auto& c : conditions) {
    if (c.id == id) return c;
  }
  throw DomainError("no condition " + id);
}

}  // namespace sipm::multiplier
