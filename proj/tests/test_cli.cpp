#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flexgrid/app.hpp"
#include "helpers.hpp"

using flexgrid::testing::fixture;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = flexgrid::app::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> with_inputs(std::vector<std::string> args,
                                     const std::string& measurements = "day.csv") {
  args.insert(args.begin(), {"--grid", fixture("feeder7.json").string(), "--measurements",
                             fixture(measurements).string()});
  return args;
}

std::filesystem::path temp(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("flexgrid_cli_" + name);
}

nlohmann::json metadata_line(const std::string& text) {
  const std::string prefix = "# metadata: ";
  REQUIRE(text.rfind(prefix, 0) == 0);
  return nlohmann::json::parse(text.substr(prefix.size(), text.find('\n') - prefix.size()));
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("compute on the evening slot reports inadequacy") {
  const Run r = run(with_inputs({"--slot", "2021-11-28T18:00:00Z", "compute", "--dump-state"}));
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK(doc["adequate"] == false);
  CHECK(doc["F"].get<double>() < 1.0);
  CHECK(doc["binding_constraint"] == "i_max:L1");
  CHECK(doc["timestamp"] == "2021-11-28T18:00:00Z");
  CHECK(doc["metadata"]["sens"]["mode"] == "model_based");
  CHECK(doc.contains("state"));
  CHECK(doc["critical_direction"].size() == 7);
}

TEST_CASE("exit codes") {
  CHECK(run({"--grid", "/nonexistent.json", "--measurements", "x.csv", "--slot",
             "2021-11-28T18:00:00Z", "compute"})
            .code == 2);
  CHECK(run(with_inputs({"compute"})).code == 2);  // missing --slot
  CHECK(run(with_inputs({"--slot", "2030-01-01T00:00:00Z", "compute"})).code == 2);
  CHECK(run(with_inputs({"--slot", "2021-11-28T18:00:00Z", "region", "--params",
                         "load@106,pv@999"}))
            .code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);

  const auto empty = temp("empty.csv");
  std::ofstream(empty) << "";
  const Run series = run({"--grid", fixture("feeder7.json").string(), "--measurements",
                          empty.string(), "run-series"});
  CHECK(series.code == 2);
  CHECK(series.err.find("input error") != std::string::npos);

  // Ten frames are far below the model-less window.
  std::ifstream day(fixture("day.csv"));
  std::ostringstream head;
  std::string line;
  for (int k = 0; k < 1 + 10 * 13 && std::getline(day, line); ++k) head << line << '\n';
  const auto short_csv = temp("short.csv");
  std::ofstream(short_csv) << head.str();
  const Run ml = run({"--grid", fixture("feeder7.json").string(), "--measurements",
                      short_csv.string(), "estimate-sensitivities", "--method", "model_less"});
  CHECK(ml.code == 3);
  CHECK(ml.err.find("frames") != std::string::npos);
}

TEST_CASE("run-series CSV, JSON and metadata") {
  const Run csv = run(with_inputs({"--window", "48", "run-series"}));
  REQUIRE(csv.code == 0);
  const auto meta = metadata_line(csv.out);
  CHECK(meta["sens"]["window"] == 48);
  CHECK(meta["command"] == "run-series");
  CHECK(count_lines(csv.out) == 2 + 144);
  CHECK(csv.err.find("Nov 28, 2021, 17:40") != std::string::npos);
  CHECK(csv.err.find("Nov 28, 2021, 17:30") == std::string::npos);

  const Run json = run(with_inputs({"run-series", "--format", "json"}));
  REQUIRE(json.code == 0);
  const auto arr = nlohmann::json::parse(json.out);
  REQUIRE(arr.is_array());
  CHECK(arr.size() == 144);

  const auto path = temp("report.csv");
  const Run file = run(with_inputs({"run-series", "--output", path.string()}));
  REQUIRE(file.code == 0);
  CHECK(file.out.find("Flexibility results for insecure time slots") != std::string::npos);
  std::ifstream in(path);
  std::stringstream body;
  body << in.rdbuf();
  CHECK(body.str() == csv.out);
}

TEST_CASE("config file supplies defaults that flags override") {
  const auto cfg = temp("config.toml");
  std::ofstream(cfg) << "window = 60\npolicy = \"absolute\"\nload-abs = 0.01\n";
  const Run a = run(with_inputs({"--config", cfg.string(), "run-series"}));
  REQUIRE(a.code == 0);
  CHECK(metadata_line(a.out)["sens"]["window"] == 60);
  CHECK(metadata_line(a.out)["policy"]["mode"] == "absolute");
  const Run b = run(with_inputs({"--config", cfg.string(), "--window", "50", "run-series"}));
  CHECK(metadata_line(b.out)["sens"]["window"] == 50);
}

TEST_CASE("region output is closed and deterministic") {
  const auto args =
      with_inputs({"--slot", "2021-11-28T18:00:00Z", "region", "--params", "load@106,pv@101"});
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  // Metadata line, header, 361 points.
  CHECK(count_lines(a.out) == 2 + 361);
  CHECK(a.out.find("theta,param1_value,param2_value\n") != std::string::npos);
}

TEST_CASE("estimate-sensitivities") {
  const Run mb = run(with_inputs({"--slot", "2021-11-28T18:00:00Z", "estimate-sensitivities"}));
  REQUIRE(mb.code == 0);
  const auto s = nlohmann::json::parse(mb.out)["sensitivities"];
  const auto& kvp = s["K_VP"];
  for (std::size_t b = 1; b < 7; ++b) CHECK(kvp[b][b].get<double>() < 0.0);

  const Run ml = run(with_inputs({"estimate-sensitivities", "--method", "model_less"}, "probe.csv"));
  const Run ref = run(with_inputs({"estimate-sensitivities"}, "probe.csv"));
  REQUIRE(ml.code == 0);
  REQUIRE(ref.code == 0);
  const auto a = nlohmann::json::parse(ml.out)["sensitivities"];
  const auto c = nlohmann::json::parse(ref.out)["sensitivities"];
  for (const char* key : {"K_VP", "K_VQ", "K_IP", "K_IQ"}) {
    for (std::size_t r = 0; r < a[key].size(); ++r) {
      for (std::size_t col = 0; col < a[key][r].size(); ++col) {
        CHECK(std::abs(a[key][r][col].get<double>() - c[key][r][col].get<double>()) <= 1e-4);
      }
    }
  }
}

TEST_CASE("generate writes loadable files") {
  const auto grid = temp("gen.json");
  const auto csv = temp("gen.csv");
  const Run r = run({"--grid", grid.string(), "--measurements", csv.string(), "generate",
                     "--bus-count", "5", "--days", "2"});
  REQUIRE(r.code == 0);
  const Run series = run({"--grid", grid.string(), "--measurements", csv.string(), "run-series"});
  CHECK(series.code == 0);
  CHECK(count_lines(series.out) == 2 + 288);
  CHECK(run({"--grid", grid.string(), "--measurements", csv.string(), "generate", "--ampacity",
             "0"})
            .code == 2);
}

TEST_CASE("installed binary returns the documented exit code") {
  const std::string cmd = std::string("\"") + FLEXGRID_CLI_PATH +
                          "\" --grid /nonexistent.json --measurements x.csv run-series "
                          "> /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}
