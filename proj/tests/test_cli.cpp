#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "jitcert/cli.hpp"

using namespace jitcert;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_file(const std::string& name) {
  return std::string(TEST_DATA_DIR) + "/" + name;
}

int spawn_verify(const std::string& args) {
  const std::string cmd =
      std::string(VERIFY_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config parse -> serialize -> parse is the identity") {
  const cli::JobConfig a = cli::parse_config(slurp(data_file("stable.json")));
  const std::string text = cli::serialize_config(a);
  const cli::JobConfig b = cli::parse_config(text);
  CHECK(a.system.A_p == b.system.A_p);
  CHECK(a.system.B_p == b.system.B_p);
  CHECK(a.system.C_p == b.system.C_p);
  CHECK(a.system.A_d == b.system.A_d);
  CHECK(a.system.B_d == b.system.B_d);
  CHECK(a.system.C_d == b.system.C_d);
  CHECK(a.system.T == b.system.T);
  CHECK(a.system.dt_u_lo == b.system.dt_u_lo);
  CHECK(a.system.dt_u_hi == b.system.dt_u_hi);
  CHECK(a.system.dt_y_lo == b.system.dt_y_lo);
  CHECK(a.system.dt_y_hi == b.system.dt_y_hi);
  CHECK(a.options.taylor_order == b.options.taylor_order);
  CHECK(a.options.approx_samples == b.options.approx_samples);
  CHECK(a.options.lmi_tolerance == b.options.lmi_tolerance);
  CHECK(a.options.heuristic_iterations == b.options.heuristic_iterations);
  CHECK(a.options.mode == b.options.mode);
}

TEST_CASE("decimal strings in configs parse to exact doubles") {
  const cli::JobConfig cfg = cli::parse_config(slurp(data_file("stable.json")));
  CHECK(cfg.system.C_d(0, 0) == -4.6);
  CHECK(cfg.system.T == 0.1);
}

TEST_CASE("config validation failures carry the field name") {
  CHECK_THROWS_WITH_AS(
      cli::parse_config(slurp(data_file("bad_halfperiod.json"))),
      doctest::Contains("less than half a period"), cli::ConfigError);
  CHECK_THROWS_WITH_AS(cli::parse_config(slurp(data_file("bad_key.json"))),
                       doctest::Contains("taylor_orderr"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config(slurp(data_file("bad_syntax.json"))),
                  cli::ConfigError);
  CHECK_THROWS_WITH_AS(cli::parse_config("{\"system\": {}, \"extra\": 1}"),
                       doctest::Contains("extra"), cli::ConfigError);
}

TEST_CASE("shortest round-trip decimal strings") {
  for (double v : {0.1, -4.6, 1.0, 0.0, 1e-9, 3.141592653589793,
                   0.30000000000000004}) {
    const std::string s = cli::decimal_string(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(cli::decimal_string(0.1) == "0.1");
  CHECK(cli::decimal_string(1.0) == "1");
}

TEST_CASE("run_job: stable instance exits 0 with a JSON report") {
  const cli::JobConfig cfg = cli::parse_config(slurp(data_file("stable.json")));
  const cli::RunResult r = cli::run_job(cfg);
  CHECK(r.exit_code == cli::kExitStable);

  const json report = json::parse(r.json_report);
  CHECK(report["verdict"] == "stable");
  const double hi =
      std::strtod(report["rho_tilde"]["hi"].get<std::string>().c_str(), nullptr);
  CHECK(hi < 1.0);
  // Sensitivity rows: m + p + mp = 1 + 2 + 2.
  CHECK(report["sensitivity"].size() == 5);
  // mode = both also reports the approximation and its wall time.
  CHECK(report.contains("rho_tilde_approx"));
  CHECK(report.contains("time_approx_s"));
  const double approx = std::strtod(
      report["rho_tilde_approx"].get<std::string>().c_str(), nullptr);
  CHECK(approx <= hi);
}

TEST_CASE("run_job: unknown instance exits 2 with a reason") {
  const cli::JobConfig cfg = cli::parse_config(slurp(data_file("unknown.json")));
  const cli::RunResult r = cli::run_job(cfg);
  CHECK(r.exit_code == cli::kExitUnknown);
  const json report = json::parse(r.json_report);
  CHECK(report["verdict"] == "unknown");
  CHECK(report.contains("reason"));
}

TEST_CASE("report interval endpoints round outward") {
  const cli::JobConfig cfg = cli::parse_config(slurp(data_file("stable.json")));
  const cli::RunResult r = cli::run_job(cfg);
  const json report = json::parse(r.json_report);
  const double lo =
      std::strtod(report["rho_tilde"]["lo"].get<std::string>().c_str(), nullptr);
  const double hi =
      std::strtod(report["rho_tilde"]["hi"].get<std::string>().c_str(), nullptr);
  CHECK(lo <= hi);
  const double nlo =
      std::strtod(report["rho_n"]["lo"].get<std::string>().c_str(), nullptr);
  CHECK(nlo <= hi);
}

TEST_CASE("binary exit codes: 0 stable, 2 unknown, 1 input error") {
  CHECK(spawn_verify(data_file("stable.json")) == 0);
  CHECK(spawn_verify(data_file("unknown.json")) == 2);
  CHECK(spawn_verify(data_file("bad_halfperiod.json")) == 1);
  CHECK(spawn_verify(data_file("bad_syntax.json")) == 1);
  CHECK(spawn_verify(data_file("bad_key.json")) == 1);
  CHECK(spawn_verify("missing_file.json") == 1);
  CHECK(spawn_verify(data_file("stable.json") + " --mode nonsense") == 1);
  CHECK(spawn_verify(data_file("stable.json") + " --mode approx") == 0);
  CHECK(spawn_verify(data_file("stable.json") +
                     " --mode verified --json --samples 10") == 0);
}

TEST_CASE("--out writes the JSON report to a file") {
  const std::string out = "/tmp/jitcert_cli_report.json";
  std::remove(out.c_str());
  CHECK(spawn_verify(data_file("stable.json") + " --out " + out) == 0);
  const json report = json::parse(slurp(out));
  CHECK(report["verdict"] == "stable");
  std::remove(out.c_str());
}
