#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexgrid/flexcore.hpp"
#include "flexgrid/gridmodel.hpp"
#include "flexgrid/powerflow.hpp"
#include "flexgrid/sensitivity.hpp"

namespace flexgrid {

enum class PolicyMode { fractional, absolute, forecast_band };

std::string_view to_string(PolicyMode m);
PolicyMode policy_mode_from_string(std::string_view text);

/// How the uncertainty box of each slot is derived from its frame.
struct UncertaintyPolicy {
  PolicyMode mode = PolicyMode::fractional;
  double load_fraction = 0.2;
  double pv_fraction = 0.2;
  double load_absolute = 0.0;  // p.u.
  double pv_absolute = 0.0;    // p.u.
  /// forecast_band: frames whose time of day matches the slot supply min/max.
  std::vector<MeasurementFrame> history;
};

/// One parameter per load-tagged bus ("load@<bus>") and per PV bus ("pv@<bus>"),
/// expected values from the frame. Lower excursions never go below zero.
/// Throws EmptyUncertaintyError when the grid tags no resources.
UncertaintyModel build_uncertainty(const MeasurementFrame& frame, const UncertaintyPolicy& policy,
                                   const GridModel& grid);

struct SeriesOptions {
  SensitivityMethod sens_mode = SensitivityMethod::model_based;
  UncertaintyPolicy policy;
  ModelLessOptions model_less;
  double fd_step = 1e-4;
  PowerFlowOptions power_flow;
  AssemblyOptions assembly;
};

/// Every intermediate of a single slot evaluation.
struct SlotEvaluation {
  OperatingPoint point;
  SensitivitySet sensitivities;
  UncertaintyModel uncertainty;
  LinearConstraintSystem system;
  FlexibilityResult result;
};

/// Evaluates frames[index]. Model-less sensitivities use the window ending at `index`.
SlotEvaluation evaluate_slot(const GridModel& grid, std::span<const MeasurementFrame> frames,
                             std::size_t index, const SeriesOptions& options,
                             Execution inner = Execution::serial);

struct SlotReport {
  Timestamp timestamp;
  double f_raw = 0.0;
  double f_display = 0.0;
  bool adequate = false;
  bool origin_feasible = true;
  std::string binding_constraint;
  double load_total = 0.0;
  double pv_total = 0.0;
  std::string error;  // non-empty when the slot could not be evaluated

  bool failed() const { return !error.empty(); }
};

/// min(raw, 1) rounded to two decimals.
double display_flexibility(double raw);

/// One report per frame, in input order. Per-slot failures are embedded, not thrown.
std::vector<SlotReport> run_series(const GridModel& grid, std::span<const MeasurementFrame> frames,
                                   const SeriesOptions& options,
                                   Execution execution = Execution::parallel);

struct SeriesSummary {
  std::vector<SlotReport> insecure;    // adequate == false, by timestamp
  std::optional<SlotReport> min_slot;  // lowest F, earliest on ties
  std::size_t failed_slots = 0;
  std::size_t total_slots = 0;
};

SeriesSummary summarize(std::span<const SlotReport> reports);

/// Two-column text table (time slot, flexibility) plus the lowest-F line.
std::string format_summary(const SeriesSummary& summary);

std::string reports_to_csv(std::span<const SlotReport> reports);

}  // namespace flexgrid
