#include "mtjfp/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mtjfp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "mtjfp_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  const auto p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kDevice = R"({
  "device": {"msat_a_per_m": 1.2e6, "alpha": 0.01, "hk_eff_a_per_m": 177415,
             "diameter_m": 50e-9, "thickness_m": 1e-9, "delta": 63},
  "drive": {"i": 2.0, "pulse_tau": 10},
  "solver": {"order": 80, "cells": 128}
})";

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"wer", "--no-such-flag"}).code == kExitUsage);
  const auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("compare-solvers") != std::string::npos);
}

TEST_CASE("configuration errors exit 2") {
  CHECK(cli({"wer", "--pulses", "1e-9"}).code == kExitConfig);
  const auto bad = write("bad.json", R"({"drive": {"i": 1}, "bogus": 1})");
  const auto r = cli({"solve-fpe", "-c", bad});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("$.bogus") != std::string::npos);
  CHECK(cli({"solve-fpe", "-c", scratch().string() + "/missing.json"}).code == kExitConfig);
  const auto cfg = write("dev.json", kDevice);
  CHECK(cli({"solve-fpe", "-c", cfg, "--solver", "quantum"}).code == kExitConfig);
}

TEST_CASE("fit needs at least three points") {
  const auto cfg = write("dev.json", kDevice);
  const auto data = write("two.csv",
                          "current_A,pulse_s,temp_K,rate,kind,solver\n"
                          "5e-5,1e-8,300,0.1,WER,measured\n"
                          "5e-5,2e-8,300,0.01,WER,measured\n");
  const auto r = cli({"fit", "-c", cfg, "--data", data});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("need >= 3 points") != std::string::npos);
}

TEST_CASE("calibration without a crossing exits 5") {
  const auto cfg = write("dev.json", kDevice);
  const auto r = cli({"calibrate", "-c", cfg, "--i", "0.3", "--targets", "1e-8"});
  CHECK(r.code == kExitCalibration);
  CHECK(r.err.find("1e-08") != std::string::npos);
}

TEST_CASE("seeded commands are byte-identical on rerun") {
  const auto cfg = write("dev.json", kDevice);
  const std::vector<std::vector<std::string>> runs{
      {"solve-fpe", "-c", cfg, "--samples", "20"},
      {"solve-fpe", "-c", cfg, "--samples", "5", "--solver", "fvm"},
      {"wer", "-c", cfg, "--currents", "5e-5,8e-5", "--pulses", "5e-9,1e-8"},
      {"rer", "-c", cfg, "--read-currents", "1e-5,2e-5", "--t-read", "1e-8"},
      {"transient", "-c", cfg, "--stochastic", "--seed", "9", "--decimation", "100"},
      {"compare-solvers", "-c", cfg, "--walks", "20", "--samples", "10", "--tau-end", "4"},
  };
  for (const auto& args : runs) {
    CAPTURE(args[0]);
    const auto a = cli(args);
    const auto b = cli(args);
    REQUIRE(a.code == kExitOk);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());
  }
  auto threaded = std::vector<std::string>{"wer", "-c", cfg, "--currents", "5e-5,8e-5,1e-4",
                                           "--pulses", "5e-9,1e-8", "-j", "3"};
  auto serial = threaded;
  serial.back() = "1";
  CHECK(cli(threaded).out == cli(serial).out);
}

TEST_CASE("calibrate writes a deck that drives a transient") {
  const auto cfg = write("dev.json", kDevice);
  const auto deck = (scratch() / "card.txt").string();
  const auto r = cli({"calibrate", "-c", cfg, "--targets", "0.5,1e-3", "-o", deck});
  REQUIRE(r.code == kExitOk);
  const std::string text = slurp(deck);
  CHECK(text.find("cf_wer_0.5 = ") != std::string::npos);
  CHECK(text.find("cf_wer_0.001 = ") != std::string::npos);
  CHECK(text.find("# calibration_current_a: ") != std::string::npos);

  const auto t = cli({"transient", "--deck", deck, "--wer", "0.5", "--decimation", "200"});
  CHECK(t.code == kExitOk);
  CHECK(t.out.rfind("t_s,mx,my,mz\n", 0) == 0);
  CHECK(t.err.find("switch_time_s=") != std::string::npos);
  CHECK(cli({"transient", "--deck", deck, "--wer", "0.25"}).code == kExitConfig);
}
