#pragma once
// Run configuration: flat INI with one section per module. Every field has a
// default; the resolved configuration is echoed to the output directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sipm::config {

struct MultiplierConfig {
  std::string kind = "sipm";  // sipm | table
  std::string table;          // path, kind = table
  double beta = 1.0;
  int a = 1;
  std::string k = "1..32";    // "lo..hi", comma list, or empty
  double s = 2.0;             // Sobolev index of the eigenfunction norm
};

struct ContfracConfig {
  double tol = 1e-14;
  int max_depth = 100000;
  double residual_tol = 1e-10;
  double scan_min = 0.0;  // 0: 1/sqrt(p1 p2)
  double scan_max = 0.0;  // 0: 1.25 times the upper bracket
  int scan_points = 2001;
};

struct LinearConfig {
  double T = 0.0;             // 0: 3 / lambda
  std::string data = "eigen";  // eigen | random | zero
  int n_active = 16;
  int field_m1 = 0;  // 0: smallest power of two >= 64 resolving the slice
  int field_m2 = 0;
};

struct Beta2Config {
  std::string t_samples = "0.25,0.5,1,2";  // in units of 1 / lambda
};

struct PatchConfig {
  double beta = 0.5;
  double jump = 1.0;
  double L = 20.0;
  int N = 1024;
  double T = 1.0;
  double dt = 0.0;  // 0: stability limit at t = 0
  double c_cfl = 0.25;
  double stability = 0.8;
  double support_tol = 1e-2;
  double h4_ceiling = 1e6;
  int snapshot_every = 100;
  std::string init = "gaussian(0.1,1)";  // gaussian(amp,width) | bump(amp,width) | file(path) | zero
};

struct VerifyConfig {
  int N = 1024;
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string out = "out";
  MultiplierConfig multiplier;
  ContfracConfig contfrac;
  LinearConfig linear;
  Beta2Config beta2;
  PatchConfig patch;
  VerifyConfig verify;
};

/// Throws ConfigError on unknown keys or unparsable values.
RunConfig load(const std::filesystem::path& path);
RunConfig parse(std::istream& in);
void write(std::ostream& out, const RunConfig& cfg);

/// "1..32", "1,2,4" or "" (empty sweep).
std::vector<int> parse_int_list(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);

struct InitialData {
  std::string kind;  // gaussian | bump | file | zero
  double amp = 0.0;
  double width = 1.0;
  std::string path;
};
InitialData parse_init(const std::string& text);

}  // namespace sipm::config
