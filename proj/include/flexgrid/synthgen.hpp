#pragma once

#include <cstdint>
#include <vector>

#include "flexgrid/gridmodel.hpp"

namespace flexgrid {

/// Radial test feeder: slack "100", a main chain and one lateral leaving bus "101".
/// PV is tagged at "101", EV charging at "102" and "106" when those buses exist.
struct FeederSpec {
  std::size_t bus_count = 7;
  double r_pu = 0.02;
  double x_pu = 0.01;
  double ampacity_pu = 1.0;
  /// Ampacity of the transformer-to-"101" segment, which carries the whole feeder.
  double trunk_ampacity_pu = 0.58;
  double s_max_pu = 1.6;
  double base_power_va = 250e3;
  double base_voltage_v = 400.0;
  double pv_capacity_kva = 72.0;
  bool monitor_all = true;
};

/// Throws InvalidSpecError.
GridModel generate_feeder(const FeederSpec& spec);

/// One day of 10-minute load and PV readings built from Gaussian bumps plus seeded noise.
/// Hours are UTC hours of day.
struct DaySpec {
  int year = 2021;
  unsigned month = 11;
  unsigned day = 28;
  std::size_t days = 1;

  double base_load_kw = 40.0;  // feeder total
  double morning_peak_h = 9.0 + 40.0 / 60.0;
  double morning_amplitude_kw = 85.0;
  double morning_width_h = 1.2;
  double evening_peak_h = 18.0;
  double evening_amplitude_kw = 70.0;
  double evening_width_h = 1.0;

  double ev_peak_h = 18.0;
  double ev_amplitude_kw = 8.0;  // per EV bus
  double ev_width_h = 0.8;

  double pv_amplitude_kw = 60.0;
  double pv_capacity_kw = 72.0;
  double pv_center_h = 12.5;
  double pv_width_h = 1.93;
  double daylight_start_h = 7.0;
  double daylight_end_h = 17.0;

  double load_tan_phi = 0.2;
  double noise_fraction = 0.01;
  std::uint64_t seed = 1;
  /// Attach power-flow voltages of monitored buses and all branch currents.
  bool with_state = true;
};

/// Throws InvalidSpecError.
std::vector<MeasurementFrame> generate_profiles(const GridModel& grid, const DaySpec& spec);

/// Small random injection perturbations around `base` with solved voltages and currents,
/// which is the excitation model-less estimation needs. The last frame equals `base`.
struct ProbeSpec {
  std::size_t frames = 96;
  double amplitude_pu = 1e-5;
  std::uint64_t seed = 1;
};

std::vector<MeasurementFrame> generate_probe_series(const GridModel& grid,
                                                    const MeasurementFrame& base,
                                                    const ProbeSpec& spec);

/// Fills v_measured (monitored buses) and i_measured (all branches) from a power flow.
void attach_solved_state(const GridModel& grid, MeasurementFrame& frame);

}  // namespace flexgrid
