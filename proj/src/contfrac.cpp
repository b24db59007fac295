#include "sipm/contfrac.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "sipm/csv.hpp"
#include "sipm/error.hpp"

namespace sipm::contfrac {

namespace {

using Prefix = std::shared_ptr<const std::vector<double>>;

// p_n from a snapshot, 1-based.
inline double at(const Prefix& p, int n) { return (*p)[static_cast<std::size_t>(n - 1)]; }

int available(const PnSequence& pseq) { return pseq.length().value_or(std::numeric_limits<int>::max()); }

}  // namespace

double g_n(double lambda, double p) {
  const double x = lambda * p;
  if (!(x >= 2.0)) {
    std::ostringstream os;
    os << "G requires lambda p >= 2, got " << x;
    throw DomainError(os.str());
  }
  return 2.0 / (x + std::sqrt((x - 2.0) * (x + 2.0)));
}

int min_depth(double lambda, const PnSequence& pseq) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const int avail = available(pseq);
  int size = 64;
  Prefix p;
  for (int n = 3;; ++n) {
    if (n > avail) return -1;
    if (n > size || !p) {
      size = std::max(size, 2 * n);
      p = pseq.prefix(std::min(size, avail));
      size = static_cast<int>(p->size());
    }
    if (lambda * at(p, n) >= 2.0) return n - 3;
  }
}

FValue f2_truncated(double lambda, const PnSequence& pseq, int depth) {
  if (depth < 0) throw DomainError("negative truncation depth");
  const int top = depth + 3;
  if (top > available(pseq)) throw DomainError("truncation depth exceeds the p_n table");
  const auto p = pseq.prefix(top);
  double x = g_n(lambda, at(p, top));
  FValue out{0.0, false, depth, 0};
  for (int j = top - 1; j >= 2; --j) {
    const double lp = lambda * at(p, j);
    const double den = lp - x;
    if (std::abs(den) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(lp, std::abs(x))) {
      out.asymptote = true;
      return out;
    }
    if (den < 0.0) ++out.negative_pivots;
    x = 1.0 / den;
  }
  out.value = x;
  return out;
}

FValue f2(double lambda, const PnSequence& pseq, const F2Options& opts) {
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  const int cap = std::min(opts.max_depth, available(pseq) == std::numeric_limits<int>::max()
                                               ? opts.max_depth
                                               : available(pseq) - 3);
  int depth = min_depth(lambda, pseq);
  if (depth < 0 || depth > cap) {
    throw NumericalError("F_2: no truncation depth within the limit reaches lambda p_n >= 2");
  }
  const double scale = 1.0 / (lambda * pseq(2));
  std::vector<double> trace;
  FValue prev = f2_truncated(lambda, pseq, depth);
  trace.push_back(prev.value);
  if (prev.asymptote) return prev;
  while (depth < cap) {
    depth = std::min(cap, depth + std::max(16, depth / 2));
    const FValue cur = f2_truncated(lambda, pseq, depth);
    trace.push_back(cur.value);
    if (cur.asymptote) return cur;
    if (std::abs(cur.value - prev.value) <= opts.tol * std::max(std::abs(cur.value), scale)) {
      if (std::abs(cur.value) > opts.divergence) return {0.0, true, depth, cur.negative_pivots};
      return cur;
    }
    prev = cur;
  }
  if (std::abs(prev.value) > opts.divergence) return {0.0, true, depth, prev.negative_pivots};
  throw NumericalError("F_2 truncations did not converge by depth " + std::to_string(depth), std::move(trace));
}

bool in_a2(double lambda, const PnSequence& pseq, const F2Options& opts) {
  const FValue v = f2(lambda, pseq, opts);
  return !v.asymptote && v.negative_pivots == 0;
}

std::string to_string(CaseTag c) { return c == CaseTag::direct ? "direct" : "asymptote"; }

std::string to_string(RowStatus s) {
  switch (s) {
    case RowStatus::ok:
      return "ok";
    case RowStatus::asymptote:
      return "asymptote";
    case RowStatus::unconverged:
      return "unconverged";
  }
  return "unknown";
}

LambdaStarResult solve_lambda_star(const PnSequence& pseq, const SolveOptions& opts) {
  multiplier::check_admissible(pseq, opts.admissibility);
  const double p1 = pseq(1);
  const double p2 = pseq(2);

  LambdaStarResult r;
  r.bracket_lo = 1.0 / std::sqrt(p1 * p2);
  r.bracket_hi = 1.0 / std::sqrt(p1 * p2 - p1 * p1);
  r.case_tag = p2 >= 4.0 * p1 ? CaseTag::direct : CaseTag::asymptote;

  const double lambda0 = r.bracket_lo;
  const double start = lambda0 * (1.0 + 1e-12);
  if (!in_a2(start, pseq, opts.f2)) {
    // 2/p2 lies in A_2, and A_2 is an interval, so the predicate is monotone.
    double lo = lambda0;
    double hi = 2.0 / p2;
    if (!in_a2(hi, pseq, opts.f2)) throw InvariantError("2/p_2 is not right of the asymptotes of F_2");
    while (hi - lo > 1e-14 * hi) {
      const double mid = 0.5 * (lo + hi);
      (in_a2(mid, pseq, opts.f2) ? hi : lo) = mid;
      ++r.iterations;
    }
    r.a2 = lo;
  }

  auto h = [&](double lambda) { return f2(lambda, pseq, opts.f2); };
  double lo = r.a2 ? *r.a2 : start;
  double hi = r.bracket_hi;
  {
    const FValue fh = h(hi);
    if (fh.asymptote || !(fh.value - hi * p1 < 0.0)) {
      std::ostringstream os;
      os << "no sign change of F_2 - lambda p1 on [" << lo << ", " << hi << "]";
      throw NumericalError(os.str());
    }
    if (!r.a2) {
      const FValue fl = h(lo);
      if (!fl.asymptote && !(fl.value - lo * p1 > 0.0)) {
        std::ostringstream os;
        os << "no sign change of F_2 - lambda p1 on [" << lo << ", " << hi << "]";
        throw NumericalError(os.str());
      }
    }
  }
  while (hi - lo > opts.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++r.iterations;
    const FValue fm = h(mid);
    const bool left = fm.asymptote || fm.negative_pivots > 0 || fm.value - mid * p1 > 0.0;
    (left ? lo : hi) = mid;
    if (r.iterations > 10000) throw NumericalError("root bisection did not terminate");
  }
  r.lambda_star = 0.5 * (lo + hi);
  const FValue fs = h(r.lambda_star);
  r.residual = fs.asymptote ? std::numeric_limits<double>::infinity() : std::abs(r.lambda_star * p1 - fs.value);

  std::ostringstream os;
  os.precision(17);
  if (!(r.residual <= opts.residual_tol)) {
    os << "residual " << r.residual << " exceeds " << opts.residual_tol << " at lambda* = " << r.lambda_star;
    throw NumericalError(os.str());
  }
  if (!(r.bracket_lo < r.lambda_star && r.lambda_star < r.bracket_hi)) {
    os << "lambda* = " << r.lambda_star << " outside (" << r.bracket_lo << ", " << r.bracket_hi << ")";
    throw InvariantError(os.str());
  }
  if (!(r.lambda_star <= std::max(2.0 / p2, 1.0 / p1))) {
    os << "lambda* = " << r.lambda_star << " above max(2/p2, 1/p1)";
    throw InvariantError(os.str());
  }
  return r;
}

double CoefficientTable::case_bound(CaseTag tag, int n0_case, double p2, int n) {
  if (tag == CaseTag::direct) return n <= n0_case ? p2 : std::ldexp(p2, n0_case + 1 - n);
  return n <= n0_case ? std::ldexp(p2, 3 * n0_case - 1) : std::ldexp(p2, 3 * n0_case - n);
}

namespace {

// Largest n with pred(p_n); p is increasing so the predicate holds on a prefix.
template <class Pred>
int last_index(const PnSequence& pseq, Pred pred) {
  const int avail = available(pseq);
  int n = 1;
  while (n + 1 <= avail && pred(pseq(n + 1))) ++n;
  return n;
}

int global_n0(const PnSequence& pseq) {
  const double p2 = pseq(2);
  return last_index(pseq, [p2](double p) { return p <= 4.0 * p2; });
}

}  // namespace

int default_length(const PnSequence& pseq) {
  const int n = std::max(64, 4 * global_n0(pseq) + 64);
  return std::min(n, available(pseq));
}

CoefficientTable coefficients(const LambdaStarResult& res, const PnSequence& pseq, int N) {
  if (N < 3) throw DomainError("coefficient table needs N >= 3");
  const int avail = available(pseq);
  if (N > avail) throw DomainError("N exceeds the p_n table");
  const double lambda = res.lambda_star;

  // Deep enough that the terminal G is defined and its error is damped by
  // at least 64 factors F_j^2 before reaching level N.
  int top = std::max(N + std::max(64, N / 2), min_depth(lambda, pseq) + 3 + 64);
  top = std::min(top, avail);
  const auto p = pseq.prefix(top);
  if (!(lambda * at(p, top) >= 2.0)) throw NumericalError("p_n table too short for the backward recursion");

  std::vector<double> F(static_cast<std::size_t>(top + 1), 0.0);
  double x = g_n(lambda, at(p, top));
  F[static_cast<std::size_t>(top)] = x;
  for (int j = top - 1; j >= 2; --j) {
    const double den = lambda * at(p, j) - x;
    if (!(std::abs(den) > 0.0)) throw NumericalError("zero partial denominator at n = " + std::to_string(j));
    x = 1.0 / den;
    F[static_cast<std::size_t>(j)] = x;
  }

  CoefficientTable t;
  t.eta.resize(static_cast<std::size_t>(N - 1));
  t.eta[0] = -lambda * at(p, 1);
  for (int n = 3; n <= N; ++n) t.eta[static_cast<std::size_t>(n - 2)] = -F[static_cast<std::size_t>(n)];
  for (double e : t.eta) {
    if (!(std::abs(e) > std::numeric_limits<double>::min())) throw NumericalError("degenerate eta_n = 0");
  }

  t.c.resize(static_cast<std::size_t>(N));
  t.c[0] = at(p, 1);
  for (int n = 2; n <= N; ++n) {
    t.c[static_cast<std::size_t>(n - 1)] =
        at(p, n) * t.eta[static_cast<std::size_t>(n - 2)] * (t.c[static_cast<std::size_t>(n - 2)] / at(p, n - 1));
  }

  double cmax = 0.0;
  for (double v : t.c) cmax = std::max(cmax, std::abs(v));
  t.certified_prefix = N;
  for (int n = 1; n < N; ++n) {
    const double prev = n > 1 ? t.c[static_cast<std::size_t>(n - 2)] / at(p, n - 1) : 0.0;
    const double r = std::abs(lambda * t.c[static_cast<std::size_t>(n - 1)] +
                              t.c[static_cast<std::size_t>(n)] / at(p, n + 1) + prev) /
                     cmax;
    if (n <= N / 2) t.recursion_residual = std::max(t.recursion_residual, r);
    if (r > 1e-6 && t.certified_prefix == N) t.certified_prefix = n - 1;
  }

  double fwd = -lambda * at(p, 1);
  t.forward_agreement = 1;
  for (int n = 3; n <= N; ++n) {
    fwd = -lambda * at(p, n - 1) - 1.0 / fwd;
    const double ref = t.eta[static_cast<std::size_t>(n - 2)];
    if (!(std::abs(fwd - ref) <= 1e-8 * std::abs(ref))) break;
    t.forward_agreement = n - 1;
  }

  const double p1 = at(p, 1);
  const double p2 = at(p, 2);
  t.n0 = global_n0(pseq);
  t.n0_case = res.case_tag == CaseTag::direct
                  ? last_index(pseq, [p2](double v) { return v <= 2.0 * p2; })
                  : last_index(pseq, [p1, p2](double v) { return v < 4.0 * std::sqrt(p1 * p2); });

  t.decay_certified = N >= 3 * t.n0;
  for (int n = 3 * t.n0; n <= N && t.decay_certified; ++n) {
    if (!(std::abs(t.c[static_cast<std::size_t>(n - 1)]) <= std::ldexp(p2, 3 * t.n0 - n))) t.decay_certified = false;
  }
  t.case_bound_holds = true;
  for (int n = 1; n <= N; ++n) {
    if (!(std::abs(t.c[static_cast<std::size_t>(n - 1)]) <= CoefficientTable::case_bound(res.case_tag, t.n0_case, p2, n))) {
      t.case_bound_holds = false;
    }
  }
  return t;
}

double weighted_norm(std::span<const double> c, double s) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = s == 0.0 ? 1.0 : std::pow(static_cast<double>(i + 1), s);
    sum += w * w * c[i] * c[i];
  }
  return std::sqrt(sum);
}

double sobolev_constant(const CoefficientTable& table, const PnSequence& pseq, double s) {
  const double base = weighted_norm(table.c, 0.0);
  if (!(base > 0.0)) throw DomainError("zero coefficient table");
  return weighted_norm(table.c, s) / ((std::pow(table.n0, s) + pseq(2) / pseq(1)) * base);
}

int sturm_count(const PnSequence& pseq, int N, double x) {
  const auto p = pseq.prefix(N);
  int count = 0;
  double d = -x;
  for (int i = 1; i <= N; ++i) {
    if (i > 1) {
      const double b2 = 1.0 / (at(p, i - 1) * at(p, i));
      d = -x - b2 / d;
    }
    if (d == 0.0) d = -std::numeric_limits<double>::min();
    if (d < 0.0) ++count;
  }
  return count;
}

double truncated_matrix_oracle(const PnSequence& pseq, int N) {
  if (N < 2) throw DomainError("oracle needs N >= 2");
  if (N > available(pseq)) throw DomainError("N exceeds the p_n table");
  const auto p = pseq.prefix(N);
  double bound = 0.0;
  for (int i = 1; i <= N; ++i) {
    double row = 0.0;
    if (i > 1) row += 1.0 / std::sqrt(at(p, i - 1) * at(p, i));
    if (i < N) row += 1.0 / std::sqrt(at(p, i) * at(p, i + 1));
    bound = std::max(bound, row);
  }
  double lo = 0.0;
  double hi = bound * (1.0 + 1e-12);
  for (int it = 0; it < 200 && hi - lo > 2.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count(pseq, N, mid) == N ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

int ScanTable::asymptotes() const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(),
                                        [](const ScanRow& r) { return r.status == RowStatus::asymptote; }));
}

int ScanTable::asymptotes_above(double lambda) const {
  return static_cast<int>(std::count_if(rows.begin(), rows.end(), [lambda](const ScanRow& r) {
    return r.status == RowStatus::asymptote && r.lambda > lambda;
  }));
}

ScanTable scan_f2(const PnSequence& pseq, std::span<const double> grid, const F2Options& opts) {
  const double p1 = pseq(1);
  const double lambda0 = 1.0 / std::sqrt(p1 * pseq(2));
  if (!std::is_sorted(grid.begin(), grid.end())) throw DomainError("scan grid must be sorted");
  if (!grid.empty() && grid.front() < lambda0) throw DomainError("scan grid starts below lambda_0");

  auto eval = [&](double lambda) {
    ScanRow row;
    row.lambda = lambda;
    row.lambda_p1 = lambda * p1;
    try {
      const FValue v = f2(lambda, pseq, opts);
      row.depth = v.depth;
      if (v.asymptote) {
        row.status = RowStatus::asymptote;
      } else {
        row.f2 = v.value;
        row.in_a2 = v.negative_pivots == 0;
      }
    } catch (const NumericalError&) {
      row.status = RowStatus::unconverged;
    }
    return row;
  };

  std::vector<ScanRow> base;
  base.reserve(grid.size());
  for (double lambda : grid) base.push_back(eval(lambda));

  ScanTable table;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (i > 0 && base[i - 1].f2 && base[i].f2 && *base[i - 1].f2 < 0.0 && *base[i].f2 > 0.0) {
      // F_2 decreases on each branch, so - to + across rows means a pole.
      double lo = base[i - 1].lambda;
      double hi = base[i].lambda;
      int depth = 0;
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const ScanRow r = eval(mid);
        depth = r.depth;
        if (r.status != RowStatus::ok) {
          lo = hi = mid;
          break;
        }
        (*r.f2 < 0.0 ? lo : hi) = mid;
      }
      ScanRow pole;
      pole.lambda = 0.5 * (lo + hi);
      pole.lambda_p1 = pole.lambda * p1;
      pole.status = RowStatus::asymptote;
      pole.depth = depth;
      table.rows.push_back(pole);
    }
    table.rows.push_back(base[i]);
  }

  auto hval = [p1](const ScanRow& r) { return *r.f2 - r.lambda * p1; };
  for (std::size_t i = 0; i < base.size() && !table.crossing; ++i) {
    const ScanRow& r = base[i];
    if (!r.in_a2 || !r.f2) continue;
    if (hval(r) == 0.0) {
      table.crossing = r.lambda;
    } else if (i + 1 < base.size() && base[i + 1].in_a2 && base[i + 1].f2 && hval(r) > 0.0 &&
               hval(base[i + 1]) < 0.0) {
      double lo = r.lambda;
      double hi = base[i + 1].lambda;
      while (hi - lo > 1e-13 * hi) {
        const double mid = 0.5 * (lo + hi);
        const FValue v = f2(mid, pseq, opts);
        (v.asymptote || v.value - mid * p1 > 0.0 ? lo : hi) = mid;
      }
      table.crossing = 0.5 * (lo + hi);
    }
  }
  return table;
}

void write_csv(std::ostream& out, const ScanTable& table) {
  out << "lambda,f2,lambda_p1,status,depth\n";
  for (const auto& r : table.rows) {
    csv::row(out, {csv::num(r.lambda), csv::num(r.f2), csv::num(r.lambda_p1), to_string(r.status),
                   std::to_string(r.depth)});
  }
}

}  // namespace sipm::contfrac
