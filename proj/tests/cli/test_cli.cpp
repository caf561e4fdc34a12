#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "droneplan/ingest.hpp"

namespace fs = std::filesystem;
using namespace droneplan;

namespace {

const fs::path kWork = fs::path(CLI_WORK_DIR);
const std::string kToy = std::string(DRONEPLAN_TEST_DATA) + "/trust_toy.json";

struct Result {
  int code;
  std::string err;
};

Result cli(const std::string& args, const std::string& out) {
  const auto dir = kWork / out;
  fs::remove_all(dir);
  fs::create_directories(kWork);
  const auto err_file = kWork / (out + ".stderr");
  const auto cmd = std::string(DRONEPLAN_CLI) + " " + args + " --out " + dir.string() + " >/dev/null 2>" +
                   err_file.string();
  const int status = std::system(cmd.c_str());
  std::ifstream in(err_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::vector<std::string> lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("assign writes a solution and breakdown") {
  const auto r = cli("assign " + kToy + " --coalition p3", "assign_single");
  CHECK(r.code == 0);
  CHECK(fs::exists(kWork / "assign_single" / "solution.json"));
  CHECK(fs::exists(kWork / "assign_single" / "breakdown.csv"));
  CHECK(fs::exists(kWork / "assign_single" / "manifest.json"));
}

TEST_CASE("input errors exit 2, missing files exit 4") {
  auto r = cli("assign " + kToy + " --coalition p1,p9", "assign_bad");
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown shipper") != std::string::npos);
  CHECK(cli("coalition " + kToy + " --initial 'p1,p2'", "partial").code == 2);
  CHECK(cli("assign " + kToy + " --mode fuzzy", "bad_mode").code == 2);
  CHECK(cli("assign /nonexistent/scenario.json", "missing").code == 4);
  CHECK(cli("no-such-command", "unknown_cmd").code == 2);

  auto doc = read_scenario(R"({"v": 1, "shippers": [{"id": "p1", "depot": {"x": 0, "y": 0}}],
    "customers": [{"id": "c1", "x": 1, "y": 0, "weight": 0, "service_time": 0.25, "owner": "p1"}],
    "drones": [], "costs": {"routing_rate": "1", "transfer_cost": "30", "outsource_cost": "16",
    "penalty_cost": "16", "big_m": 100}})");
  const auto bad = kWork / "bad_weight.json";
  std::ofstream(bad) << write_scenario(doc);
  r = cli("validate " + bad.string(), "validate_bad");
  CHECK(r.code == 2);
  CHECK(r.err.find("weight must be positive") != std::string::npos);
  const auto report = lines(kWork / "validate_bad" / "validation.csv");
  REQUIRE(report.size() == 2);
  CHECK(report[1].find("customers[c1].weight") != std::string::npos);
  CHECK(cli("assign " + bad.string(), "assign_invalid").code == 2);
}

TEST_CASE("merge-split trace and stability") {
  REQUIRE(cli("coalition " + kToy, "coalition").code == 0);
  const auto trace = lines(kWork / "coalition" / "trace.csv");
  REQUIRE(trace.size() >= 2);
  CHECK(trace[0] == "iteration,from,to,to_id,mover,before,after");
  const auto summary = Json::parse(std::ifstream(kWork / "coalition" / "summary.json"));
  CHECK(summary["stable"] == true);
  CHECK(summary["capped"] == false);
  CHECK(summary["structure"] == "p1,p3|p2,p4");
  // Every structure the trace visits gets one allocation row per shipper.
  const auto alloc = lines(kWork / "coalition" / "allocations.csv");
  CHECK(alloc.size() == 1 + 4 * trace.size());
}

TEST_CASE("markov writes one probability per structure") {
  REQUIRE(cli("markov " + kToy, "markov").code == 0);
  const auto pi = lines(kWork / "markov" / "pi.csv");
  REQUIRE(pi.size() == 16);
  double sum = 0.0;
  for (std::size_t k = 1; k < pi.size(); ++k) sum += std::stod(pi[k].substr(pi[k].rfind(',') + 1));
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(pi[8].rfind("Phi8,\"p1,p2|p3,p4\",", 0) == 0);
}

TEST_CASE("dynamic with truthful partners keeps beliefs at one") {
  REQUIRE(cli("dynamic " + kToy + " --error-prob 0", "dynamic_truthful").code == 0);
  const auto rows = lines(kWork / "dynamic_truthful" / "beliefs.csv");
  REQUIRE(rows.size() > 1);
  CHECK(rows[0] == "iteration,from,to,theta,theta_ok,lambda");
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].substr(rows[k].rfind(',') + 1) == "1.000000");
}

TEST_CASE("solomon synthesis and event log") {
  REQUIRE(cli("solomon " + std::string(DRONEPLAN_TEST_DATA) + "/syn80.txt --customers 12", "solomon").code == 0);
  const auto doc = read_scenario([] {
    std::ifstream in(kWork / "solomon" / "scenario.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }());
  CHECK(doc.scenario.customers().size() == 12);
  CHECK(validate_scenario(doc.scenario).empty());
  REQUIRE(cli("simulate " + kToy + " --structure 'p1,p3|p2,p4' --runs 50 --events", "events").code == 0);
  const auto events = Json::parse(std::ifstream(kWork / "events" / "events.json"));
  CHECK(events.size() > 50);
}
