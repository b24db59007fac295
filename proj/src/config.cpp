#include "sipm/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sipm/csv.hpp"
#include "sipm/error.hpp"

namespace sipm::config {

namespace {

using boost::property_tree::ptree;

// Calls f(key, field) for every configurable field.
template <class Cfg, class F>
void visit(Cfg& c, F&& f) {
  f("run.command", c.command);
  f("run.seed", c.seed);
  f("output.dir", c.out);
  f("multiplier.kind", c.multiplier.kind);
  f("multiplier.table", c.multiplier.table);
  f("multiplier.beta", c.multiplier.beta);
  f("multiplier.a", c.multiplier.a);
  f("multiplier.k", c.multiplier.k);
  f("multiplier.s", c.multiplier.s);
  f("contfrac.tol", c.contfrac.tol);
  f("contfrac.max_depth", c.contfrac.max_depth);
  f("contfrac.residual_tol", c.contfrac.residual_tol);
  f("contfrac.scan_min", c.contfrac.scan_min);
  f("contfrac.scan_max", c.contfrac.scan_max);
  f("contfrac.scan_points", c.contfrac.scan_points);
  f("linear.T", c.linear.T);
  f("linear.data", c.linear.data);
  f("linear.n_active", c.linear.n_active);
  f("linear.field_m1", c.linear.field_m1);
  f("linear.field_m2", c.linear.field_m2);
  f("beta2.t_samples", c.beta2.t_samples);
  f("patch.beta", c.patch.beta);
  f("patch.jump", c.patch.jump);
  f("patch.L", c.patch.L);
  f("patch.N", c.patch.N);
  f("patch.T", c.patch.T);
  f("patch.dt", c.patch.dt);
  f("patch.c_cfl", c.patch.c_cfl);
  f("patch.stability", c.patch.stability);
  f("patch.support_tol", c.patch.support_tol);
  f("patch.h4_ceiling", c.patch.h4_ceiling);
  f("patch.snapshot_every", c.patch.snapshot_every);
  f("patch.init", c.patch.init);
  f("verify.N", c.verify.N);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
void parse_value(const std::string& key, const std::string& raw, T& out) {
  const std::string text = trim(raw);
  if constexpr (std::is_same_v<T, std::string>) {
    out = text;
  } else if constexpr (std::is_same_v<T, double>) {
    try {
      std::size_t pos = 0;
      out = std::stod(text, &pos);
      if (pos != text.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
  } else {
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, double>) {
    return csv::num(v);
  } else {
    return std::to_string(v);
  }
}

}  // namespace

namespace {

// Inline comments start at ';' or '#' preceded by whitespace.
std::string strip_comment(const std::string& value) {
  for (std::size_t i = 1; i < value.size(); ++i) {
    if ((value[i] == ';' || value[i] == '#') && std::isspace(static_cast<unsigned char>(value[i - 1]))) {
      return trim(value.substr(0, i));
    }
  }
  return value;
}

}  // namespace

RunConfig parse(std::istream& in) {
  ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  std::set<std::string> known;
  visit(cfg, [&](const std::string& key, auto& field) {
    known.insert(key);
    if (auto v = tree.get_optional<std::string>(ptree::path_type(key, '.'))) parse_value(key, strip_comment(*v), field);
  });
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      if (!known.count(section + "." + key)) throw ConfigError("config: unknown key " + section + "." + key);
    }
  }
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse(in);
}

void write(std::ostream& out, const RunConfig& cfg) {
  ptree tree;
  visit(cfg, [&](const std::string& key, const auto& field) {
    tree.put(ptree::path_type(key, '.'), format_value(field));
  });
  boost::property_tree::write_ini(out, tree);
}

std::vector<int> parse_int_list(const std::string& raw) {
  const std::string text = trim(raw);
  std::vector<int> out;
  if (text.empty()) return out;
  static const std::regex range(R"((-?\d+)\s*\.\.\s*(-?\d+))");
  std::smatch m;
  if (std::regex_match(text, m, range)) {
    const int lo = std::stoi(m[1]);
    const int hi = std::stoi(m[2]);
    if (hi < lo) throw ConfigError("empty range '" + text + "'; leave the list blank for an empty sweep");
    for (int k = lo; k <= hi; ++k) out.push_back(k);
    return out;
  }
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    parse_value("integer list", item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& raw) {
  std::vector<double> out;
  std::istringstream ss(trim(raw));
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    parse_value("real list", item, v);
    out.push_back(v);
  }
  return out;
}

InitialData parse_init(const std::string& raw) {
  const std::string text = trim(raw);
  InitialData d;
  if (text == "zero") {
    d.kind = "zero";
    return d;
  }
  static const std::regex call(R"((\w+)\s*\((.*)\))");
  std::smatch m;
  if (!std::regex_match(text, m, call)) throw ConfigError("patch.init: cannot parse '" + text + "'");
  d.kind = m[1];
  const std::string args = m[2];
  if (d.kind == "file") {
    d.path = trim(args);
    if (d.path.empty()) throw ConfigError("patch.init: file() needs a path");
    return d;
  }
  if (d.kind != "gaussian" && d.kind != "bump") throw ConfigError("patch.init: unknown profile '" + d.kind + "'");
  const auto vals = parse_real_list(args);
  if (vals.size() != 2) throw ConfigError("patch.init: " + d.kind + "(amp,width) takes two numbers");
  d.amp = vals[0];
  d.width = vals[1];
  return d;
}

}  // namespace sipm::config
