#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "flexgrid/errors.hpp"
#include "flexgrid/powerflow.hpp"
#include "flexgrid/synthgen.hpp"
#include "helpers.hpp"

using namespace flexgrid;
using namespace flexgrid::testing;

TEST_CASE("zero injections give a flat profile") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  const std::vector<double> zero(g.bus_count(), 0.0);
  const OperatingPoint op = solve_power_flow(g, zero, zero);
  for (double v : op.v_mag) CHECK(std::abs(v - 1.0) <= 1e-12);
  for (double i : op.i_mag) CHECK(std::abs(i) <= 1e-12);
  CHECK(std::abs(op.s_grid) <= 1e-12);
  CHECK(op.source == StateSource::solved);
}

TEST_CASE("2-bus voltage agrees with the quartic oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> imp(0.005, 0.05);
  std::uniform_real_distribution<double> load(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double r = imp(rng);
    const double x = imp(rng);
    const double p = load(rng);
    const double q = 0.3 * load(rng);
    const GridModel g = two_bus_grid(r, x);
    const std::vector<double> pv{0.0, p};
    const std::vector<double> qv{0.0, q};
    const OperatingPoint op = solve_power_flow(g, pv, qv);
    CHECK(std::abs(op.v_mag[1] - two_bus_voltage_bisection(r, x, p, q)) <= 1e-8);
    // Sending-end power covers the load plus r |I|^2.
    const double i2 = op.i_mag[0] * op.i_mag[0];
    CHECK(std::abs(op.p_slack - (p + r * i2)) <= 1e-8);
    CHECK(std::abs(op.q_slack - (q + x * i2)) <= 1e-8);
  }
}

TEST_CASE("2-bus example at P = 0.5, Q = 0.1") {
  const GridModel g = two_bus_grid(0.01, 0.01);
  const OperatingPoint op = solve_power_flow(g, std::vector<double>{0.0, 0.5},
                                             std::vector<double>{0.0, 0.1});
  CHECK(std::abs(op.v_mag[1] - two_bus_voltage_bisection(0.01, 0.01, 0.5, 0.1)) <= 1e-8);
  CHECK(op.v_mag[1] < 1.0);
  CHECK(op.mismatch <= 1e-8);
}

TEST_CASE("an infeasible load stalls the solver") {
  const GridModel g = two_bus_grid(0.01, 0.01);
  try {
    solve_power_flow(g, std::vector<double>{0.0, 100.0}, std::vector<double>{0.0, 0.0});
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.iterations() > 0);
    CHECK(e.last_mismatch() > 1e-8);
  }
}

TEST_CASE("injection vectors must match the bus count") {
  const GridModel g = two_bus_grid();
  CHECK_THROWS_AS(solve_power_flow(g, std::vector<double>{0.0}, std::vector<double>{0.0}),
                  InputError);
}

TEST_CASE("measured values overwrite solved ones") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  MeasurementFrame f = MeasurementFrame::empty(g, make_timestamp(2021, 11, 28, 18));
  f.add_power(g.bus_index("103"), 0.05, 0.01);
  f.v_measured[g.bus_index("103")] = 0.97;
  const OperatingPoint op = operating_point_from_frame(g, f);
  CHECK(op.v_mag[g.bus_index("103")] == 0.97);
  CHECK(op.source == StateSource::measured);
  REQUIRE(op.timestamp.has_value());
  CHECK(*op.timestamp == f.timestamp);

  MeasurementFrame plain = MeasurementFrame::empty(g, f.timestamp);
  plain.add_power(g.bus_index("103"), 0.05, 0.01);
  CHECK(operating_point_from_frame(g, plain).source == StateSource::solved);
}

TEST_CASE("evening peak of the fixture day sags voltages below nominal") {
  const GridModel g = load_grid(fixture("feeder7.json"));
  const auto frames = load_measurements(fixture("day.csv"), g);
  const auto it = std::find_if(frames.begin(), frames.end(), [](const MeasurementFrame& f) {
    return seconds_of_day(f.timestamp) == 18 * 3600;
  });
  REQUIRE(it != frames.end());
  const OperatingPoint op = solve_power_flow(g, it->p, it->q);
  for (std::size_t b = 0; b < g.bus_count(); ++b) {
    if (b != g.slack_index()) CHECK(op.v_mag[b] < 1.0);
  }
}

TEST_CASE("property: energy balance and voltage ordering on random feeders") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> load(0.0, 0.08);
  for (int trial = 0; trial < 100; ++trial) {
    FeederSpec spec;
    spec.bus_count = 3 + rng() % 10;
    spec.r_pu = 0.005 + 0.03 * std::uniform_real_distribution<double>(0, 1)(rng);
    spec.x_pu = 0.5 * spec.r_pu;
    const GridModel g = generate_feeder(spec);
    std::vector<double> p(g.bus_count(), 0.0);
    std::vector<double> q(g.bus_count(), 0.0);
    double total_p = 0.0;
    double total_q = 0.0;
    for (std::size_t b = 0; b < g.bus_count(); ++b) {
      if (b == g.slack_index()) continue;
      p[b] = load(rng);
      q[b] = 0.2 * p[b];
      total_p += p[b];
      total_q += q[b];
    }
    const OperatingPoint op = solve_power_flow(g, p, q);
    CHECK(std::abs(op.p_slack - (total_p + op.losses)) <= 1e-8);
    double reactive_losses = 0.0;
    for (std::size_t k = 0; k < g.branch_count(); ++k) {
      reactive_losses += g.branches()[k].reactance * op.i_mag[k] * op.i_mag[k];
    }
    CHECK(std::abs(op.q_slack - (total_q + reactive_losses)) <= 1e-8);
    CHECK(op.losses >= 0.0);
    // A pure-load radial feeder: voltage never rises moving away from the slack.
    for (std::size_t k = 0; k < g.branch_count(); ++k) {
      CHECK(op.v_mag[g.to_index(k)] <= op.v_mag[g.from_index(k)] + 1e-12);
    }
  }
}

TEST_CASE("property: near-ideal lines keep voltages at nominal") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> load(-0.1, 0.1);
  const GridModel base = load_grid(fixture("feeder7.json"));
  const GridModel g = base.with_scaled_impedances(1e-5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(g.bus_count(), 0.0);
    std::vector<double> q(g.bus_count(), 0.0);
    for (std::size_t b = 0; b < g.bus_count(); ++b) {
      if (b == g.slack_index()) continue;
      p[b] = load(rng);
      q[b] = load(rng);
    }
    const OperatingPoint op = solve_power_flow(g, p, q);
    for (double v : op.v_mag) CHECK(std::abs(v - 1.0) <= 1e-6);
    CHECK(op.losses <= 1e-7);
  }
}
