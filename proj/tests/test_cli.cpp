#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "maglev/cli/cli.hpp"

namespace fs = std::filesystem;
using maglev::cli::run;

namespace {

const fs::path kScenarios = fs::path(MAGLEV_SOURCE_DIR) / "tools" / "scenarios";

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("maglev_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_scenario(const fs::path& dir, const std::string& body) {
  const auto p = dir / "scenario.json";
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("frequencies from gradients") {
  const auto r = invoke({"frequencies", "--scenario", (kScenarios / "trap.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("fx_Hz,fy_Hz,fz_Hz") != std::string::npos);
  CHECK(r.out.find("244.8") != std::string::npos);
}

TEST_CASE("budget prints the thermal force") {
  const auto r = invoke({"budget", "--scenario", (kScenarios / "budget.json").string(), "--format", "json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"maglev-report\"") != std::string::npos);
  CHECK(r.out.find("4.87") != std::string::npos);
}

TEST_CASE("validation failures exit with 1 and name the key") {
  const auto dir = scratch("validation");
  auto r = invoke({"frequencies", "--scenario",
                   write_scenario(dir, R"({"sphere": {"R": -5e-5, "rho": 10.9e3}, "field": {"gradients": [57, 90, 147]}})")
                       .string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("sphere.R") != std::string::npos);

  r = invoke({"frequencies", "--scenario",
              write_scenario(dir, R"({"sphere": {"R": 5e-5, "rho": 10.9e3, "colour": 1}, "field": {"gradients": [57, 90, 147]}})")
                  .string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("colour") != std::string::npos);

  r = invoke({"frequencies", "--scenario",
              write_scenario(dir, R"({"sphere": {"R": 5e-5, "rho": 10.9e3}, "field": {"gradients": [57, 90, 150]}})").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("field.gradients") != std::string::npos);

  CHECK(invoke({"frequencies"}).code == 1);
  CHECK(invoke({"frequencies", "--scenario", (dir / "missing.json").string()}).code == 1);
  CHECK(invoke({"frequencies", "--format", "xml", "--scenario", (kScenarios / "trap.json").string()}).code == 1);
  CHECK(invoke({"teleport"}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("numerical failures exit with 2") {
  const auto dir = scratch("numerical");
  const auto r = invoke({"budget", "--scenario",
                         write_scenario(dir, R"({"mode": {"f0": 212, "Q": 1e3, "T0": 0.015, "mass": 5.6e-9},
                                                 "noise": {"S_nn": 1e-18, "S_deltadelta": 1.0}})")
                             .string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("UnstableHeating") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("constants") {
  const auto r = invoke({"--constants", "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("mu0") != std::string::npos);
}

TEST_CASE("repeated runs write identical files") {
  const auto a = scratch("idem_a"), b = scratch("idem_b");
  for (const auto& dir : {a, b}) {
    const auto r = invoke({"simulate", "--scenario", (kScenarios / "simulate.json").string(), "--out", dir.string()});
    REQUIRE(r.code == 0);
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(files >= 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("sweep output does not depend on the worker count") {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const auto sc = (kScenarios / "simulate.json").string();
  REQUIRE(invoke({"simulate", "--scenario", sc, "--sweep", "3", "--workers", "1", "--out", a.string()}).code == 0);
  REQUIRE(invoke({"simulate", "--scenario", sc, "--sweep", "3", "--workers", "3", "--out", b.string()}).code == 0);
  for (const auto& e : fs::directory_iterator(a)) CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("analyze reads a simulated record") {
  const auto dir = scratch("analyze");
  REQUIRE(invoke({"simulate", "--scenario", (kScenarios / "simulate.json").string(), "--out", dir.string()}).code == 0);
  const auto sc = write_scenario(dir, R"({"analysis": {"input": "timeseries_z.csv", "column": "x",
                                                       "f_lo": 150, "f_hi": 280}})");
  const auto r = invoke({"analyze", "--scenario", sc.string(), "--format", "json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("gamma") != std::string::npos);
  fs::remove_all(dir);
}

}
