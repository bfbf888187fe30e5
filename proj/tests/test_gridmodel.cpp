#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "flexgrid/errors.hpp"
#include "flexgrid/gridmodel.hpp"
#include "helpers.hpp"

using namespace flexgrid;
using flexgrid::testing::fixture;

namespace {

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Random tree on n buses: bus k attaches to a uniformly chosen earlier bus.
GridModel random_tree(std::mt19937_64& rng, std::size_t n) {
  std::vector<Bus> buses(n);
  for (std::size_t k = 0; k < n; ++k) buses[k].id = "b" + std::to_string(k);
  std::vector<Branch> branches;
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> parent(0, k - 1);
    branches.push_back({"l" + std::to_string(k), buses[parent(rng)].id, buses[k].id, 0.01, 0.01, 1.0});
  }
  std::shuffle(branches.begin(), branches.end(), rng);
  return GridModel(std::move(buses), std::move(branches), TransformerSpec{1.0, "b0"}, "b0", 1e5,
                   400.0);
}

}  // namespace

TEST_CASE("load_grid reads the shipped 7-bus feeder") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  CHECK(g.bus_count() == 7);
  CHECK(g.branch_count() == 6);
  CHECK(g.slack_bus_id() == "100");
  CHECK(g.buses()[g.bus_index("101")].has(Resource::pv));
  CHECK(g.buses()[g.bus_index("102")].has(Resource::ev));
  CHECK(g.buses()[g.bus_index("106")].has(Resource::ev));
  CHECK(g.description().find("72 kVA") != std::string::npos);
}

TEST_CASE("load_grid accepts the minimal 2-bus grid") {
  const GridModel g = load_grid(fixture("two_bus.json"));
  CHECK(g.bus_count() == 2);
  CHECK(g.branch_count() == 1);
  CHECK(g.buses()[1].v_min == 0.95);
  CHECK(g.buses()[0].v_min == kDefaultVMin);
  CHECK(g.buses()[0].v_max == kDefaultVMax);
}

TEST_CASE("load_grid rejects a cycle as non-radial") {
  try {
    load_grid(fixture("cycle.json"));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("non-radial") != std::string::npos);
  }
}

TEST_CASE("grid validation names the offending element") {
  const std::string base = read(fixture("two_bus.json"));
  const auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_grid(text);
      FAIL("expected an error for " << needle);
    } catch (const InputError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  auto replaced = [&](const std::string& from, const std::string& to) {
    std::string s = base;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  expect_error(replaced("\"i_max_pu\": 1.0", "\"i_max_pu\": 0.0"), "'L'");
  expect_error(replaced("\"r_pu\": 0.01, \"x_pu\": 0.01", "\"r_pu\": 0.0, \"x_pu\": 0.0"), "'L'");
  expect_error(replaced("{\"id\": \"0\"}", "{\"id\": \"1\"}"), "duplicate bus id '1'");
  expect_error(replaced("\"s_max_pu\": 1.0", "\"s_max_pu\": -1.0"), "s_max");
  expect_error(replaced("\"lv_bus\": \"0\"", "\"lv_bus\": \"1\""), "transformer");
  expect_error(replaced("\"to\": \"1\"", "\"to\": \"0\""), "itself");
  expect_error(replaced("\"v_min\": 0.95", "\"v_min\": 1.2"), "bus '1'");
  CHECK_THROWS_AS(parse_grid("{\"buses\": ["), ParseError);
  CHECK_THROWS_AS(parse_grid(replaced("\"slack_bus\": \"0\",", "")), ParseError);
  CHECK_THROWS_AS(load_grid("/nonexistent/grid.json"), ParseError);
}

TEST_CASE("radiality check accepts random trees and rejects wrong edge counts") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    const GridModel g = random_tree(rng, n);
    CHECK(g.bfs_order().size() == n);

    // One extra edge closes a cycle.
    std::vector<Branch> extra = g.branches();
    extra.push_back({"extra", g.buses()[0].id, g.buses()[n - 1].id, 0.01, 0.01, 1.0});
    if (g.buses()[0].id != g.buses()[n - 1].id) {
      CHECK_THROWS_AS(GridModel(g.buses(), extra, g.transformer(), g.slack_bus_id(), 1e5, 400.0),
                      ValidationError);
    }
    // Dropping an edge disconnects the tree.
    std::vector<Branch> fewer = g.branches();
    fewer.pop_back();
    CHECK_THROWS_AS(GridModel(g.buses(), fewer, g.transformer(), g.slack_bus_id(), 1e5, 400.0),
                    ValidationError);
  }
}

TEST_CASE("grid JSON round-trips field by field") {
  std::mt19937_64 rng(11);
  for (const char* name : {"feeder7.json", "two_bus.json"}) {
    const GridModel g = load_grid(fixture(name));
    CHECK(parse_grid(grid_to_json(g)) == g);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const GridModel g = random_tree(rng, 2 + rng() % 30);
    const auto path = std::filesystem::temp_directory_path() / "flexgrid_roundtrip.json";
    save_grid(g, path);
    CHECK(load_grid(path) == g);
  }
}

TEST_CASE("per-unit conversion") {
  CHECK(to_per_unit(72e3, 250e3) == doctest::Approx(0.288).epsilon(1e-15));
  CHECK(to_per_unit(0.0, 123.0) == 0.0);
  CHECK_THROWS_AS(to_per_unit(1.0, 0.0), ZeroBaseError);
  CHECK_THROWS_AS(from_per_unit(1.0, 0.0), ZeroBaseError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> value(-1e6, 1e6);
  std::uniform_real_distribution<double> base(1.0, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double a = value(rng);
    const double b = value(rng);
    const double s = base(rng);
    CHECK(std::abs(from_per_unit(to_per_unit(a, s), s) - a) <= 1e-12 * std::max(1.0, std::abs(a)));
    // Linearity holds up to one rounding of each operand.
    const double lhs = to_per_unit(a + b, s);
    const double rhs = to_per_unit(a, s) + to_per_unit(b, s);
    CHECK(std::abs(lhs - rhs) <=
          4.0 * std::numeric_limits<double>::epsilon() * (std::abs(a) + std::abs(b)) / s);
  }
}

TEST_CASE("load_measurements groups rows into per-unit frames") {
  const GridModel g = load_grid(fixture("two_bus.json"));
  std::ostringstream csv;
  csv << "timestamp,bus_id,p_kw,q_kvar,v_pu,branch_id,i_pu\n";
  for (int s = 0; s < 144; ++s) {
    const Timestamp ts = make_timestamp(2021, 11, 28) + kSlotLength * s;
    csv << format_rfc3339(ts) << ",1," << 10.0 + s << ",2,,,\n";
  }
  const auto path = std::filesystem::temp_directory_path() / "flexgrid_144.csv";
  std::ofstream(path) << csv.str();
  const auto frames = load_measurements(path, g);
  REQUIRE(frames.size() == 144);
  // base_power 100 kVA
  CHECK(frames[5].p[1] == doctest::Approx(15.0 / 100.0).epsilon(1e-12));
  CHECK(frames[5].q[1] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(frames[5].load_p[1] == frames[5].p[1]);
  for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i - 1].timestamp < frames[i].timestamp);
}

TEST_CASE("measurement kW convert on a 250 kVA base") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  const auto frames = parse_measurements(
      "timestamp,bus_id,p_kw,q_kvar,v_pu,branch_id,i_pu\n"
      "2021-11-28T18:00:00Z,103,37.5,,0.97,L3,0.1\n"
      "2021-11-28T18:00:00Z,101,12,1,,,\n"
      "2021-11-28T18:00:00Z,101,-20.4,,,,\n",
      g);
  REQUIRE(frames.size() == 1);
  const auto& f = frames[0];
  CHECK(std::abs(f.p[g.bus_index("103")] - 37.5 / 250.0) <= 1e-12);
  CHECK(f.v_measured[g.bus_index("103")] == 0.97);
  CHECK(f.i_measured[g.branch_index("L3")] == 0.1);
  const std::size_t b101 = g.bus_index("101");
  CHECK(std::abs(f.load_p[b101] - 12.0 / 250.0) <= 1e-12);
  CHECK(std::abs(f.gen_p[b101] - 20.4 / 250.0) <= 1e-12);
  CHECK(std::abs(f.p[b101] - (12.0 - 20.4) / 250.0) <= 1e-12);
}

TEST_CASE("measurement errors") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  const std::string header = "timestamp,bus_id,p_kw,q_kvar,v_pu,branch_id,i_pu\n";
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,999,1,0,,,\n", g),
                  UnknownIdError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,,,,,L9,0.1\n", g),
                  UnknownIdError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:10:00Z,101,1,0,,,\n"
                                              "2021-11-28T18:00:00Z,101,1,0,,,\n",
                                     g),
                  NonMonotonicTimestampError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:05:00Z,101,1,0,,,\n", g), ParseError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,101,abc,0,,,\n", g),
                  ParseError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,101,nan,0,,,\n", g),
                  ParseError);
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,101,1,0\n", g), ParseError);
  CHECK_THROWS_AS(parse_measurements("", g), ParseError);
  CHECK_THROWS_AS(parse_measurements(header, g), ParseError);
  CHECK_THROWS_AS(parse_measurements("a,b\n", g), ParseError);
  // Monitored set must be constant through the series.
  CHECK_THROWS_AS(parse_measurements(header + "2021-11-28T18:00:00Z,101,1,0,0.99,,\n"
                                              "2021-11-28T18:10:00Z,101,1,0,,,\n",
                                     g),
                  ParseError);
}

TEST_CASE("RFC 3339 timestamps") {
  const Timestamp t = parse_rfc3339("2021-11-28T18:00:00Z");
  CHECK(format_rfc3339(t) == "2021-11-28T18:00:00Z");
  CHECK(parse_rfc3339("2021-11-28T19:00:00+01:00") == t);
  CHECK(parse_rfc3339("2021-11-28T17:30:00.000-00:30") == t);
  CHECK(format_table_slot(t) == "Nov 28, 2021, 18:00");
  CHECK(seconds_of_day(t) == 18 * 3600);
  CHECK(format_rfc3339(parse_rfc3339("2024-02-29T00:00:00Z")) == "2024-02-29T00:00:00Z");
  CHECK_THROWS_AS(parse_rfc3339("2023-02-29T00:00:00Z"), ParseError);
  CHECK_THROWS_AS(parse_rfc3339("2021-11-28 18:00"), ParseError);
  CHECK_THROWS_AS(parse_rfc3339("2021-11-28T18:00:00"), ParseError);
  CHECK_THROWS_AS(parse_rfc3339("2021-11-28T18:00:00Zjunk"), ParseError);
}
