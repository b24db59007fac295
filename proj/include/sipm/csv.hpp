#pragma once

#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace sipm::csv {

/// 17 significant digits, round-trips every double.
std::string num(double v);
std::string num(std::optional<double> v);  // empty field when absent

/// Writes comma-joined fields and a newline.
void row(std::ostream& out, std::initializer_list<std::string_view> fields);

}  // namespace sipm::csv
