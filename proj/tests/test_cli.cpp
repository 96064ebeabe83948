// End-to-end checks of the installed command surface: exit codes, output
// files, reproducibility. Commands run through std::system against the
// freshly built binary.
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kBin = ACTMON_CLI_BIN;
const std::string kScenarios = ACTMON_SCENARIO_DIR;

int run_cmd(const std::string& args) {
  std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("check: exit 0 schedulable, 2 unschedulable, 1 on bad input") {
  CHECK(run_cmd("check " + kScenarios + "/taskset3.json") == 0);

  write("/tmp/actmon_overload.json", R"({
    "sim": {"horizon_ms": 12},
    "tasks": [
      {"name": "t1", "wcet_ms": 3, "period_ms": 4},
      {"name": "t2", "wcet_ms": 3, "period_ms": 6}
    ]})");
  CHECK(run_cmd("check /tmp/actmon_overload.json") == 2);

  CHECK(run_cmd("check /tmp/definitely_missing.json") == 1);
}

TEST_CASE("run: writes the trace files deterministically") {
  std::string out1 = "/tmp/actmon_cli_run1";
  std::string out2 = "/tmp/actmon_cli_run2";
  CHECK(run_cmd("run " + kScenarios + "/rover_spoof.json --out " + out1) == 0);
  CHECK(run_cmd("run " + kScenarios + "/rover_spoof.json --out " + out2) == 0);
  for (const char* f : {"/decisions.csv", "/plant.csv", "/distance.dat"})
    CHECK(slurp(out1 + f) == slurp(out2 + f));

  // with/without traces stay column-compatible
  CHECK(run_cmd("run " + kScenarios + "/rover_spoof.json --monitor off --out " + out2) == 0);
  std::string on_header = slurp(out1 + "/decisions.csv").substr(0, 60);
  std::string off_header = slurp(out2 + "/decisions.csv").substr(0, 60);
  CHECK(on_header == off_header);
}

TEST_CASE("run: --fail-on-miss turns misses into exit 2") {
  write("/tmp/actmon_miss.json", R"({
    "sim": {"horizon_ms": 12},
    "tasks": [
      {"name": "t1", "wcet_ms": 3, "period_ms": 4},
      {"name": "t2", "wcet_ms": 3, "period_ms": 6}
    ]})");
  CHECK(run_cmd("run /tmp/actmon_miss.json") == 0);
  CHECK(run_cmd("run /tmp/actmon_miss.json --fail-on-miss") == 2);
}

TEST_CASE("lint-rules: clean, broken and contextually wrong rule files") {
  CHECK(run_cmd("lint-rules " + kScenarios + "/rover.rules --scenario " + kScenarios +
                "/rover_dos.json") == 0);

  write("/tmp/actmon_bad.rules", "X :: s_LF < -> motor = fwd\n");
  CHECK(run_cmd("lint-rules /tmp/actmon_bad.rules") == 2);

  write("/tmp/actmon_unknown.rules", "X :: s_WIBBLE < 1 -> motor = fwd\n");
  CHECK(run_cmd("lint-rules /tmp/actmon_unknown.rules") == 0);  // no scenario context
  CHECK(run_cmd("lint-rules /tmp/actmon_unknown.rules --scenario " + kScenarios +
                "/rover_dos.json") == 2);

  write("/tmp/actmon_dup.rules",
        "A :: rate(task ctrl, motor) < 2 per period -> check : ignore\n"
        "B :: rate(task ctrl, motor) < 3 per period -> check : ignore\n");
  CHECK(run_cmd("lint-rules /tmp/actmon_dup.rules") == 2);

  CHECK(run_cmd("lint-rules /tmp/no_such.rules") == 1);
}

TEST_CASE("cross-validate: exit 0 when the bounds hold") {
  CHECK(run_cmd("cross-validate " + kScenarios + "/taskset3.json") == 0);
  CHECK(run_cmd("cross-validate " + kScenarios + "/rover_dos.json") == 0);
}
