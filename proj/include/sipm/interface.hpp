#pragma once

#include <vector>

namespace sipm {

/// Interface graph x2 = f(x1) sampled on [-L, L).
///
/// Node i sits at eta_i = -L + i h with h = 2L / N. f vanishes outside the
/// window, so the node at +L (index N) is an implicit zero.
struct InterfaceState {
  double L = 20.0;
  double beta = 0.5;
  double jump = 1.0;  // (rho2 - rho1) / C_beta
  double t = 0.0;
  std::vector<double> f;

  int n() const { return static_cast<int>(f.size()); }
  double h() const { return 2.0 * L / static_cast<double>(f.size()); }
  double eta(int i) const { return -L + i * h(); }

  /// Throws DomainError on N < 64, beta outside (0, 1), jump <= 0 or L <= 0.
  void validate() const;
};

}  // namespace sipm
