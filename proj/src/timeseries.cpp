#include "flexgrid/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "flexgrid/errors.hpp"

namespace flexgrid {

std::string_view to_string(PolicyMode m) {
  switch (m) {
    case PolicyMode::fractional:
      return "fractional";
    case PolicyMode::absolute:
      return "absolute";
    case PolicyMode::forecast_band:
      return "forecast_band";
  }
  return "fractional";
}

PolicyMode policy_mode_from_string(std::string_view text) {
  if (text == "fractional") return PolicyMode::fractional;
  if (text == "absolute") return PolicyMode::absolute;
  if (text == "forecast_band") return PolicyMode::forecast_band;
  throw ValidationError("unknown uncertainty policy '" + std::string(text) + "'");
}

namespace {

struct Band {
  double up = 0.0;
  double down = 0.0;
};

Band history_band(const UncertaintyPolicy& policy, Timestamp ts, double expected,
                  std::size_t bus, bool pv, const GridModel& grid) {
  const long tod = seconds_of_day(ts);
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const MeasurementFrame& h : policy.history) {
    if (seconds_of_day(h.timestamp) != tod || bus >= h.load_p.size()) continue;
    const double v = pv ? h.gen_p[bus] : h.load_p[bus];
    lo = any ? std::min(lo, v) : v;
    hi = any ? std::max(hi, v) : v;
    any = true;
  }
  if (!any) {
    throw ValidationError("forecast band has no history at " + format_rfc3339(ts).substr(11, 5) +
                          " for bus '" + grid.buses()[bus].id + "'");
  }
  return {std::abs(hi - expected), std::abs(expected - lo)};
}

Band band_for(const UncertaintyPolicy& policy, const MeasurementFrame& frame, double expected,
              std::size_t bus, bool pv, const GridModel& grid) {
  Band band;
  switch (policy.mode) {
    case PolicyMode::fractional: {
      const double f = pv ? policy.pv_fraction : policy.load_fraction;
      band = {f * expected, f * expected};
      break;
    }
    case PolicyMode::absolute: {
      const double a = pv ? policy.pv_absolute : policy.load_absolute;
      band = {a, a};
      break;
    }
    case PolicyMode::forecast_band:
      band = history_band(policy, frame.timestamp, expected, bus, pv, grid);
      break;
  }
  band.up = std::max(band.up, 0.0);
  // Neither consumption nor production can go negative.
  band.down = std::clamp(band.down, 0.0, std::max(expected, 0.0));
  return band;
}

}  // namespace

UncertaintyModel build_uncertainty(const MeasurementFrame& frame, const UncertaintyPolicy& policy,
                                   const GridModel& grid) {
  if (policy.load_fraction < 0.0 || policy.pv_fraction < 0.0 || policy.load_absolute < 0.0 ||
      policy.pv_absolute < 0.0) {
    throw ValidationError("uncertainty policy widths must be nonnegative");
  }
  std::vector<UncertainParameter> params;
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    const Bus& bus = grid.buses()[b];
    if (bus.carries_load()) {
      UncertainParameter p;
      p.id = "load@" + bus.id;
      p.bus_id = bus.id;
      p.kind = ParameterKind::load_p;
      p.expected = frame.load_p[b];
      p.reactive_coupling = frame.load_p[b] > 0.0 ? frame.load_q[b] / frame.load_p[b] : 0.0;
      const Band band = band_for(policy, frame, p.expected, b, false, grid);
      p.up_half_width = band.up;
      p.down_half_width = band.down;
      params.push_back(std::move(p));
    }
    if (bus.carries_pv()) {
      UncertainParameter p;
      p.id = "pv@" + bus.id;
      p.bus_id = bus.id;
      p.kind = ParameterKind::pv_p;
      p.expected = frame.gen_p[b];
      p.reactive_coupling = 0.0;
      const Band band = band_for(policy, frame, p.expected, b, true, grid);
      p.up_half_width = band.up;
      p.down_half_width = band.down;
      params.push_back(std::move(p));
    }
  }
  if (params.empty()) throw EmptyUncertaintyError("grid tags no load, EV or PV resources");
  return UncertaintyModel(std::move(params));
}

SlotEvaluation evaluate_slot(const GridModel& grid, std::span<const MeasurementFrame> frames,
                             std::size_t index, const SeriesOptions& options, Execution inner) {
  if (index >= frames.size()) throw ValidationError("slot index out of range");
  const MeasurementFrame& frame = frames[index];
  OperatingPoint point = operating_point_from_frame(grid, frame, options.power_flow);
  SensitivitySet sens =
      options.sens_mode == SensitivityMethod::model_based
          ? sensitivities_model_based(grid, point, options.fd_step, inner, options.power_flow)
          : sensitivities_model_less(grid, frames.first(index + 1), options.model_less);
  UncertaintyModel unc = build_uncertainty(frame, options.policy, grid);
  LinearConstraintSystem sys = assemble_constraints(grid, point, sens, unc, options.assembly);
  FlexibilityResult result = flexibility_index(sys, unc);
  return {std::move(point), std::move(sens), std::move(unc), std::move(sys), std::move(result)};
}

double display_flexibility(double raw) {
  if (!(raw < 1.0)) return 1.0;
  return std::round(raw * 100.0) / 100.0;
}

namespace {

SlotReport report_slot(const GridModel& grid, std::span<const MeasurementFrame> frames,
                       std::size_t index, const SeriesOptions& options) {
  SlotReport r;
  const MeasurementFrame& frame = frames[index];
  r.timestamp = frame.timestamp;
  r.load_total = frame.total_load();
  r.pv_total = frame.total_generation();
  try {
    const SlotEvaluation eval = evaluate_slot(grid, frames, index, options, Execution::serial);
    r.f_raw = eval.result.flexibility;
    r.f_display = display_flexibility(r.f_raw);
    r.adequate = eval.result.adequate;
    r.origin_feasible = eval.result.origin_feasible;
    r.binding_constraint = eval.result.binding_constraint;
  } catch (const Error& e) {
    r.error = e.what();
    r.f_raw = std::numeric_limits<double>::quiet_NaN();
    r.f_display = std::numeric_limits<double>::quiet_NaN();
    r.adequate = false;
  }
  return r;
}

}  // namespace

std::vector<SlotReport> run_series(const GridModel& grid, std::span<const MeasurementFrame> frames,
                                   const SeriesOptions& options, Execution execution) {
  std::vector<SlotReport> reports(frames.size());
  const auto count = static_cast<long>(frames.size());
  if (execution == Execution::serial) {
    for (long s = 0; s < count; ++s) {
      reports[static_cast<std::size_t>(s)] =
          report_slot(grid, frames, static_cast<std::size_t>(s), options);
    }
    return reports;
  }
#if defined(FLEXGRID_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (long s = 0; s < count; ++s) {
    reports[static_cast<std::size_t>(s)] =
        report_slot(grid, frames, static_cast<std::size_t>(s), options);
  }
  return reports;
}

SeriesSummary summarize(std::span<const SlotReport> reports) {
  SeriesSummary summary;
  summary.total_slots = reports.size();
  for (const SlotReport& r : reports) {
    if (r.failed()) {
      ++summary.failed_slots;
      continue;
    }
    if (!r.adequate) summary.insecure.push_back(r);
    if (!summary.min_slot || r.f_raw < summary.min_slot->f_raw ||
        (r.f_raw == summary.min_slot->f_raw && r.timestamp < summary.min_slot->timestamp)) {
      summary.min_slot = r;
    }
  }
  std::stable_sort(summary.insecure.begin(), summary.insecure.end(),
                   [](const SlotReport& a, const SlotReport& b) { return a.timestamp < b.timestamp; });
  return summary;
}

namespace {

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string raw_cell(double v) {
  if (std::isnan(v)) return "error";
  if (v == kUnbounded) return "inf";
  return format_double(v);
}

}  // namespace

std::string format_summary(const SeriesSummary& summary) {
  std::ostringstream out;
  const std::string slot_header = "Time slot";
  std::size_t width = slot_header.size();
  for (const SlotReport& r : summary.insecure) {
    width = std::max(width, format_table_slot(r.timestamp).size());
  }
  const auto pad = [width](const std::string& s) { return s + std::string(width - s.size() + 4, ' '); };
  out << "Flexibility results for insecure time slots\n";
  out << pad(slot_header) << "Flexibility\n";
  if (summary.insecure.empty()) out << "(none)\n";
  for (const SlotReport& r : summary.insecure) {
    out << pad(format_table_slot(r.timestamp)) << fixed2(r.f_display) << '\n';
  }
  if (summary.min_slot) {
    const SlotReport& m = *summary.min_slot;
    out << "\nLowest flexibility: " << fixed2(m.f_display) << " (raw " << raw_cell(m.f_raw)
        << ") at " << format_table_slot(m.timestamp);
    if (!m.binding_constraint.empty()) out << ", binding " << m.binding_constraint;
    out << '\n';
  }
  out << "Slots: " << summary.total_slots << " evaluated, " << summary.insecure.size()
      << " insecure, " << summary.failed_slots << " failed\n";
  return out.str();
}

std::string reports_to_csv(std::span<const SlotReport> reports) {
  std::ostringstream out;
  out << "timestamp,F_display,F_raw,adequate,binding_constraint,load_total_pu,pv_total_pu\n";
  for (const SlotReport& r : reports) {
    std::string binding = r.failed() ? "error: " + r.error : r.binding_constraint;
    std::replace(binding.begin(), binding.end(), ',', ';');
    std::replace(binding.begin(), binding.end(), '\n', ' ');
    out << format_rfc3339(r.timestamp) << ',' << (r.failed() ? "" : fixed2(r.f_display)) << ','
        << raw_cell(r.f_raw) << ',' << (r.adequate ? "true" : "false") << ',' << binding << ','
        << format_double(r.load_total) << ',' << format_double(r.pv_total) << '\n';
  }
  return out.str();
}

}  // namespace flexgrid
