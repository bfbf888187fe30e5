#include "flexgrid/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "flexgrid/errors.hpp"
#include "flexgrid/powerflow.hpp"

namespace flexgrid {

GridModel generate_feeder(const FeederSpec& spec) {
  if (spec.bus_count < 2) throw InvalidSpecError("feeder needs at least two buses");
  if (spec.bus_count > 900) throw InvalidSpecError("feeder bus count too large");
  if (!(spec.ampacity_pu > 0.0) || !(spec.trunk_ampacity_pu > 0.0)) {
    throw InvalidSpecError("ampacities must be positive");
  }
  if (!(spec.r_pu >= 0.0) || !(std::hypot(spec.r_pu, spec.x_pu) > 0.0)) {
    throw InvalidSpecError("segment impedance must be nonzero with r >= 0");
  }
  if (!(spec.s_max_pu > 0.0) || !(spec.base_power_va > 0.0) || !(spec.base_voltage_v > 0.0)) {
    throw InvalidSpecError("transformer rating and bases must be positive");
  }
  if (!(spec.pv_capacity_kva >= 0.0)) throw InvalidSpecError("PV capacity must be nonnegative");

  const auto id_of = [](std::size_t k) { return std::to_string(100 + k); };
  std::vector<Bus> buses;
  for (std::size_t k = 0; k < spec.bus_count; ++k) {
    Bus b;
    b.id = id_of(k);
    b.monitored = spec.monitor_all;
    if (k > 0) b.resources.push_back(Resource::load);
    if (k == 1) b.resources.push_back(Resource::pv);
    if (k == 2 || k == 6) b.resources.push_back(Resource::ev);
    buses.push_back(std::move(b));
  }
  // Buses 101..(100 + main) form the main chain; the rest hang off 101 as a lateral.
  const std::size_t main = spec.bus_count / 2;
  std::vector<Branch> branches;
  for (std::size_t k = 1; k < spec.bus_count; ++k) {
    std::size_t parent = k - 1;
    if (k == main + 1) parent = 1;
    Branch br;
    br.id = "L" + std::to_string(k);
    br.from_bus = id_of(parent);
    br.to_bus = id_of(k);
    br.resistance = spec.r_pu;
    br.reactance = spec.x_pu;
    br.i_max = k == 1 ? spec.trunk_ampacity_pu : spec.ampacity_pu;
    branches.push_back(std::move(br));
  }
  const std::string description =
      "Synthetic LV feeder; impedances, ampacities and transformer rating are invented "
      "fixture values. PV at bus 101 rated " +
      format_double(spec.pv_capacity_kva) + " kVA (" +
      format_double(to_per_unit(spec.pv_capacity_kva * 1000.0, spec.base_power_va)) + " p.u.).";
  return GridModel(std::move(buses), std::move(branches), TransformerSpec{spec.s_max_pu, id_of(0)},
                   id_of(0), spec.base_power_va, spec.base_voltage_v, description);
}

void attach_solved_state(const GridModel& grid, MeasurementFrame& frame) {
  const OperatingPoint op = solve_power_flow(grid, frame.p, frame.q);
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    if (grid.buses()[b].monitored) frame.v_measured[b] = op.v_mag[b];
  }
  for (std::size_t l = 0; l < grid.branch_count(); ++l) frame.i_measured[l] = op.i_mag[l];
}

namespace {

double bump(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

std::vector<MeasurementFrame> generate_profiles(const GridModel& grid, const DaySpec& spec) {
  const double amplitudes[] = {spec.base_load_kw, spec.morning_amplitude_kw,
                               spec.evening_amplitude_kw, spec.ev_amplitude_kw,
                               spec.pv_amplitude_kw};
  for (double a : amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidSpecError("amplitudes must be nonnegative");
  }
  if (!(spec.morning_width_h > 0.0) || !(spec.evening_width_h > 0.0) ||
      !(spec.ev_width_h > 0.0) || !(spec.pv_width_h > 0.0)) {
    throw InvalidSpecError("profile widths must be positive");
  }
  if (!(spec.noise_fraction >= 0.0) || spec.days == 0) {
    throw InvalidSpecError("noise must be nonnegative and at least one day generated");
  }
  if (!(spec.daylight_start_h < spec.daylight_end_h)) {
    throw InvalidSpecError("daylight window is empty");
  }
  if (spec.month < 1 || spec.month > 12 || spec.day < 1 || spec.day > 31) {
    throw InvalidSpecError("invalid start date");
  }

  std::vector<std::size_t> load_buses;
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    if (grid.buses()[b].carries_load()) load_buses.push_back(b);
  }
  // Fixed uneven split of the feeder load, repeated for larger feeders.
  static constexpr double kShares[] = {0.14, 0.18, 0.16, 0.17, 0.15, 0.20};
  std::vector<double> share(grid.bus_count(), 0.0);
  double share_sum = 0.0;
  for (std::size_t k = 0; k < load_buses.size(); ++k) {
    share[load_buses[k]] = kShares[k % std::size(kShares)];
    share_sum += share[load_buses[k]];
  }

  const double base_kva = grid.base_power_va() / 1000.0;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<MeasurementFrame> frames;
  const Timestamp start = make_timestamp(spec.year, spec.month, spec.day);
  const std::size_t slots = 144 * spec.days;
  for (std::size_t s = 0; s < slots; ++s) {
    const Timestamp ts = start + kSlotLength * static_cast<long>(s);
    const double t = static_cast<double>(seconds_of_day(ts)) / 3600.0;
    MeasurementFrame frame = MeasurementFrame::empty(grid, ts);
    const double feeder_kw = spec.base_load_kw +
                             spec.morning_amplitude_kw * bump(t, spec.morning_peak_h, spec.morning_width_h) +
                             spec.evening_amplitude_kw * bump(t, spec.evening_peak_h, spec.evening_width_h);
    for (std::size_t b : load_buses) {
      double kw = feeder_kw * share[b] / share_sum;
      if (grid.buses()[b].has(Resource::ev)) {
        kw += spec.ev_amplitude_kw * bump(t, spec.ev_peak_h, spec.ev_width_h);
      }
      kw = std::max(0.0, kw * (1.0 + spec.noise_fraction * noise(rng)));
      const double tan_phi = spec.load_tan_phi + spec.noise_fraction * noise(rng);
      frame.add_power(b, to_per_unit(kw, base_kva), to_per_unit(kw * tan_phi, base_kva));
    }
    for (std::size_t b = 0; b < grid.bus_count(); ++b) {
      if (!grid.buses()[b].carries_pv()) continue;
      double kw = 0.0;
      if (t >= spec.daylight_start_h && t <= spec.daylight_end_h && spec.pv_amplitude_kw > 0.0) {
        kw = spec.pv_amplitude_kw * bump(t, spec.pv_center_h, spec.pv_width_h);
        kw = std::clamp(kw * (1.0 + spec.noise_fraction * noise(rng)), 0.0, spec.pv_capacity_kw);
      }
      if (kw > 0.0) frame.add_power(b, -to_per_unit(kw, base_kva), 0.0);
    }
    if (spec.with_state) attach_solved_state(grid, frame);
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<MeasurementFrame> generate_probe_series(const GridModel& grid,
                                                    const MeasurementFrame& base,
                                                    const ProbeSpec& spec) {
  if (spec.frames < 2 || !(spec.amplitude_pu > 0.0)) {
    throw InvalidSpecError("probe series needs >= 2 frames and a positive amplitude");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<MeasurementFrame> frames;
  for (std::size_t s = 0; s < spec.frames; ++s) {
    MeasurementFrame frame = MeasurementFrame::empty(grid, base.timestamp + kSlotLength * static_cast<long>(s));
    // The final frame is the unperturbed base point, so it can anchor both estimators.
    const double amplitude = s + 1 == spec.frames ? 0.0 : spec.amplitude_pu;
    for (std::size_t b = 0; b < grid.bus_count(); ++b) {
      if (b == grid.slack_index()) continue;
      const double dp = amplitude * unit(rng);
      const double dq = amplitude * unit(rng);
      frame.add_power(b, std::max(0.0, base.load_p[b] + dp), base.load_q[b] + dq);
      if (base.gen_p[b] > 0.0) frame.add_power(b, -base.gen_p[b], -base.gen_q[b]);
    }
    attach_solved_state(grid, frame);
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace flexgrid
