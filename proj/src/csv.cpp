#include "sipm/csv.hpp"

#include <cstdio>

namespace sipm::csv {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(std::optional<double> v) { return v ? num(*v) : std::string(); }

void row(std::ostream& out, std::initializer_list<std::string_view> fields) {
  bool first = true;
  for (auto f : fields) {
    if (!first) out << ',';
    out << f;
    first = false;
  }
  out << '\n';
}

}  // namespace sipm::csv
