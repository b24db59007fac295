#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "sipm/commands.hpp"
#include "sipm/config.hpp"
#include "sipm/error.hpp"

using namespace sipm;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

config::RunConfig from(const std::string& text) {
  std::istringstream in(text);
  return config::parse(in);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

int run_quiet(const config::RunConfig& cfg, const std::filesystem::path& out, std::string* err_text = nullptr) {
  std::ostringstream err;
  commands::Context ctx{out, true, nullptr, &err};
  const int code = commands::run(cfg, ctx);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
  const auto d = from("");
  CHECK(d.multiplier.beta == 1.0);
  CHECK(d.multiplier.k == "1..32");
  CHECK(d.patch.N == 1024);
  CHECK(d.patch.c_cfl == 0.25);
  CHECK(d.seed == 1);

  const auto c = from("[run]\ncommand = scan-f2\nseed = 7\n[multiplier]\nbeta = 1.5\nk = 3\n[patch]\nN = 256\n");
  CHECK(c.command == "scan-f2");
  CHECK(c.seed == 7);
  CHECK(c.multiplier.beta == 1.5);
  CHECK(c.patch.N == 256);

  const auto commented = from("[multiplier]\nbeta = 0.5   ; inline\nk = 1..4 # also inline\n");
  CHECK(commented.multiplier.beta == 0.5);
  CHECK(commented.multiplier.k == "1..4");

  CHECK_THROWS_AS(from("[multiplier]\nbogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(from("[multiplier]\nbeta = one\n"), ConfigError);
  CHECK_THROWS_AS(from("[nowhere]\nbeta = 1\n"), ConfigError);
}

TEST_CASE("config echo round-trips") {
  auto c = from("[multiplier]\nbeta = 0.3\nk = 1,2,5\n[contfrac]\ntol = 1e-13\n[patch]\ninit = bump(0.2,3)\n");
  std::ostringstream a;
  config::write(a, c);
  const auto back = from(a.str());
  std::ostringstream b;
  config::write(b, back);
  CHECK(a.str() == b.str());
  CHECK(back.multiplier.beta == 0.3);
  CHECK(back.contfrac.tol == 1e-13);
}

TEST_CASE("list and init parsing") {
  CHECK(config::parse_int_list("1..4") == std::vector<int>{1, 2, 3, 4});
  CHECK(config::parse_int_list("2, 8,16") == std::vector<int>{2, 8, 16});
  CHECK(config::parse_int_list("").empty());
  CHECK_THROWS_AS(config::parse_int_list("4..1"), ConfigError);
  CHECK_THROWS_AS(config::parse_int_list("x"), ConfigError);
  CHECK(config::parse_real_list("0.25,2") == std::vector<double>{0.25, 2.0});

  const auto g = config::parse_init("gaussian(0.1, 2)");
  CHECK(g.kind == "gaussian");
  CHECK(g.amp == 0.1);
  CHECK(g.width == 2.0);
  CHECK(config::parse_init("zero").kind == "zero");
  CHECK(config::parse_init("file(data/p.txt)").path == "data/p.txt");
  CHECK_THROWS_AS(config::parse_init("sawtooth(1,1)"), ConfigError);
}

TEST_CASE("commands") {
  TempDir tmp("sipm_lab_cli_test");

  SUBCASE("beta = 2 is rejected with a usage error") {
    auto c = from("[run]\ncommand = spectrum\n[multiplier]\nbeta = 2\nk = 1\n");
    std::string err;
    CHECK(run_quiet(c, tmp.path, &err) == commands::usage_error);
    CHECK(err.find("not unbounded") != std::string::npos);
  }
  SUBCASE("empty sweep writes only the header") {
    auto c = from("[run]\ncommand = spectrum\n[multiplier]\nk =\n");
    CHECK(run_quiet(c, tmp.path) == commands::ok);
    const auto text = slurp(tmp.path / "spectrum.csv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
  SUBCASE("identical configurations give identical output") {
    auto c = from("[run]\ncommand = spectrum\n[multiplier]\nk = 1..6\n");
    CHECK(run_quiet(c, tmp.path / "a") == commands::ok);
    CHECK(run_quiet(c, tmp.path / "b") == commands::ok);
    CHECK(slurp(tmp.path / "a" / "spectrum.csv") == slurp(tmp.path / "b" / "spectrum.csv"));
    // The echoed configuration reproduces the run.
    auto echoed = config::load(tmp.path / "a" / "config.ini");
    CHECK(run_quiet(echoed, tmp.path / "c") == commands::ok);
    CHECK(slurp(tmp.path / "a" / "spectrum.csv") == slurp(tmp.path / "c" / "spectrum.csv"));
  }
  SUBCASE("single-point scan") {
    auto c = from("[run]\ncommand = scan-f2\n[multiplier]\nbeta = 1.5\nk = 1\n[contfrac]\nscan_points = 1\n");
    CHECK(run_quiet(c, tmp.path) == commands::ok);
    CHECK(std::filesystem::exists(tmp.path / "crossing.txt"));
  }
  SUBCASE("patch-run on flat data") {
    auto c = from("[run]\ncommand = patch-run\n[patch]\nN = 128\nT = 0.01\ninit = zero\nsnapshot_every = 1000\n");
    CHECK(run_quiet(c, tmp.path) == commands::ok);
    CHECK(std::filesystem::exists(tmp.path / "norms.csv"));
    CHECK(std::filesystem::exists(tmp.path / "snapshots"));
  }
  SUBCASE("unknown command") {
    auto c = from("[run]\ncommand = frobnicate\n");
    CHECK(run_quiet(c, tmp.path) == commands::usage_error);
  }
}
