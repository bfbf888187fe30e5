#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "flexgrid/gridmodel.hpp"

namespace flexgrid {

enum class StateSource { solved, measured };

/// Grid state for one slot. Injections are load-positive, like the measurements.
struct OperatingPoint {
  std::vector<double> v_mag;  // per bus, p.u.
  std::vector<double> v_ang;  // per bus, rad
  std::vector<double> i_mag;  // per branch, from-end magnitude, p.u.
  std::vector<std::complex<double>> i_from;  // per branch, from-end phasor
  std::vector<double> p;      // per bus
  std::vector<double> q;
  double p_slack = 0.0;       // power imported through the transformer
  double q_slack = 0.0;
  double s_grid = 0.0;
  double losses = 0.0;        // total series active losses
  double mismatch = 0.0;      // final nodal mismatch infinity-norm
  int iterations = 0;
  StateSource source = StateSource::solved;
  std::optional<Timestamp> timestamp;
};

struct PowerFlowOptions {
  double tolerance = 1e-8;
  int max_iterations = 50;
};

/// Newton-Raphson from a flat start. The slack is held at 1.0 p.u., angle 0.
/// Throws NonConvergenceError carrying the last mismatch norm.
OperatingPoint solve_power_flow(const GridModel& grid, std::span<const double> p,
                                std::span<const double> q, const PowerFlowOptions& options = {});

/// Solves the frame injections, then overwrites monitored voltages/currents with
/// their measured values (tagging the point as measured when anything was replaced).
OperatingPoint operating_point_from_frame(const GridModel& grid, const MeasurementFrame& frame,
                                          const PowerFlowOptions& options = {});

}  // namespace flexgrid
