#include "flexgrid/app.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "flexgrid/errors.hpp"
#include "flexgrid/flexcore.hpp"
#include "flexgrid/gridmodel.hpp"
#include "flexgrid/serialize.hpp"
#include "flexgrid/synthgen.hpp"
#include "flexgrid/timeseries.hpp"

#if defined(FLEXGRID_HAVE_OPENMP)
#include <omp.h>
#endif

namespace flexgrid::app {
namespace {

struct Config {
  std::string grid;
  std::string measurements;
  std::string slot;
  std::string sens = "model_based";
  std::size_t window = 0;
  double ridge = 1e-8;
  double fd_step = 1e-4;
  std::string policy = "fractional";
  double load_fraction = 0.2;
  double pv_fraction = 0.2;
  double load_abs = 0.0;
  double pv_abs = 0.0;
  int threads = 0;
  std::uint64_t seed = 1;
  bool dump_state = false;

  // run-series
  std::string format = "csv";
  std::string output;

  // region
  std::string params;
  std::size_t samples = 360;
  double cap = 3.0;

  // estimate-sensitivities
  std::string method = "model_based";

  // generate
  std::string kind = "day";
  FeederSpec feeder;
  DaySpec day;
  ProbeSpec probe;
};

struct Inputs {
  GridModel grid;
  std::vector<MeasurementFrame> frames;
};

Inputs load_inputs(const Config& cfg) {
  if (cfg.grid.empty()) throw InputError("--grid is required");
  if (cfg.measurements.empty()) throw InputError("--measurements is required");
  GridModel grid = load_grid(cfg.grid);
  auto frames = load_measurements(cfg.measurements, grid);
  return {std::move(grid), std::move(frames)};
}

std::size_t slot_index(const Config& cfg, const std::vector<MeasurementFrame>& frames,
                       bool default_last) {
  if (cfg.slot.empty()) {
    if (default_last) return frames.size() - 1;
    throw InputError("--slot is required");
  }
  const Timestamp ts = parse_rfc3339(cfg.slot);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].timestamp == ts) return i;
  }
  throw InputError("slot " + format_rfc3339(ts) + " is not in the measurement series");
}

SeriesOptions series_options(const Config& cfg, const GridModel& grid,
                             const std::vector<MeasurementFrame>& frames) {
  SeriesOptions o;
  o.sens_mode = sensitivity_method_from_string(cfg.sens);
  o.fd_step = cfg.fd_step;
  o.model_less.window = cfg.window == 0 ? 4 * model_less_regressor_count(grid) : cfg.window;
  o.model_less.ridge = cfg.ridge;
  o.policy.mode = policy_mode_from_string(cfg.policy);
  o.policy.load_fraction = cfg.load_fraction;
  o.policy.pv_fraction = cfg.pv_fraction;
  o.policy.load_absolute = cfg.load_abs;
  o.policy.pv_absolute = cfg.pv_abs;
  if (o.policy.mode == PolicyMode::forecast_band) o.policy.history = frames;
  return o;
}

Json metadata(const Config& cfg, const std::string& command, const GridModel* grid) {
  Json m;
  m["command"] = command;
  m["grid"] = cfg.grid;
  m["measurements"] = cfg.measurements;
  if (!cfg.slot.empty()) m["slot"] = cfg.slot;
  const std::size_t window =
      cfg.window == 0 && grid ? 4 * model_less_regressor_count(*grid) : cfg.window;
  m["sens"] = {{"mode", command == "estimate-sensitivities" ? cfg.method : cfg.sens},
               {"window", window},
               {"ridge", cfg.ridge},
               {"fd_step", cfg.fd_step}};
  m["policy"] = {{"mode", cfg.policy},
                 {"load_fraction", cfg.load_fraction},
                 {"pv_fraction", cfg.pv_fraction},
                 {"load_abs_pu", cfg.load_abs},
                 {"pv_abs_pu", cfg.pv_abs}};
  m["seed"] = cfg.seed;
  return m;
}

void apply_threads(const Config& cfg) {
#if defined(FLEXGRID_HAVE_OPENMP)
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#else
  (void)cfg;
#endif
}

int cmd_compute(const Config& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const std::size_t idx = slot_index(cfg, in.frames, false);
  const SeriesOptions opts = series_options(cfg, in.grid, in.frames);
  const SlotEvaluation eval = evaluate_slot(in.grid, in.frames, idx, opts, Execution::parallel);
  Json doc;
  doc["metadata"] = metadata(cfg, "compute", &in.grid);
  const Json result = to_json(eval.result, in.frames[idx].timestamp);
  for (const auto& [key, value] : result.items()) doc[key] = value;
  if (cfg.dump_state) doc["state"] = to_json(eval.point, in.grid);
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_run_series(const Config& cfg, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(cfg);
  const SeriesOptions opts = series_options(cfg, in.grid, in.frames);
  const auto reports = run_series(in.grid, in.frames, opts, Execution::parallel);
  std::string body;
  if (cfg.format == "json") {
    Json arr = Json::array();
    for (const SlotReport& r : reports) arr.push_back(to_json(r));
    body = arr.dump(2) + "\n";
  } else if (cfg.format == "csv") {
    body = "# metadata: " + metadata(cfg, "run-series", &in.grid).dump() + "\n" +
           reports_to_csv(reports);
  } else {
    throw InputError("unknown --format '" + cfg.format + "' (csv or json)");
  }
  const std::string table = format_summary(summarize(reports));
  if (!cfg.output.empty()) {
    std::ofstream file(cfg.output, std::ios::binary);
    if (!file) throw InputError("cannot write '" + cfg.output + "'");
    file << body;
    out << table;
  } else {
    out << body;
    err << table;
  }
  return kExitOk;
}

int cmd_region(const Config& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const std::size_t idx = slot_index(cfg, in.frames, false);
  const auto comma = cfg.params.find(',');
  if (comma == std::string::npos) {
    throw InputError("--params needs two comma-separated parameter ids");
  }
  const std::string first = cfg.params.substr(0, comma);
  const std::string second = cfg.params.substr(comma + 1);
  const SeriesOptions opts = series_options(cfg, in.grid, in.frames);
  const SlotEvaluation eval = evaluate_slot(in.grid, in.frames, idx, opts, Execution::parallel);
  RegionOptions ro;
  ro.samples = cfg.samples;
  ro.cap = cfg.cap;
  const auto polygon = trace_feasible_region_2d(eval.system, eval.uncertainty, first, second, ro);
  Json meta = metadata(cfg, "region", &in.grid);
  meta["param1"] = first;
  meta["param2"] = second;
  meta["samples"] = cfg.samples;
  meta["cap"] = cfg.cap;
  out << "# metadata: " << meta.dump() << '\n' << region_to_csv(polygon);
  return kExitOk;
}

int cmd_estimate_sensitivities(const Config& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const std::size_t idx = slot_index(cfg, in.frames, true);
  const SeriesOptions opts = series_options(cfg, in.grid, in.frames);
  SensitivitySet sens;
  if (sensitivity_method_from_string(cfg.method) == SensitivityMethod::model_based) {
    const OperatingPoint point = operating_point_from_frame(in.grid, in.frames[idx]);
    sens = sensitivities_model_based(in.grid, point, cfg.fd_step, Execution::parallel);
  } else {
    sens = sensitivities_model_less(in.grid, std::span(in.frames).first(idx + 1), opts.model_less);
  }
  Json doc;
  doc["metadata"] = metadata(cfg, "estimate-sensitivities", &in.grid);
  doc["sensitivities"] = to_json(sens);
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_generate(Config cfg, std::ostream& out) {
  if (cfg.grid.empty() || cfg.measurements.empty()) {
    throw InputError("generate needs --grid and --measurements output paths");
  }
  cfg.day.seed = cfg.seed;
  cfg.probe.seed = cfg.seed;
  const GridModel grid = generate_feeder(cfg.feeder);
  std::vector<MeasurementFrame> frames;
  if (cfg.kind == "day") {
    frames = generate_profiles(grid, cfg.day);
  } else if (cfg.kind == "probe") {
    DaySpec base_day = cfg.day;
    base_day.with_state = false;
    const auto day = generate_profiles(grid, base_day);
    std::size_t idx = 108;  // 18:00
    if (!cfg.slot.empty()) idx = slot_index(cfg, day, false);
    frames = generate_probe_series(grid, day[idx], cfg.probe);
  } else {
    throw InputError("unknown --kind '" + cfg.kind + "' (day or probe)");
  }
  save_grid(grid, cfg.grid);
  std::ofstream csv(cfg.measurements, std::ios::binary);
  if (!csv) throw InputError("cannot write '" + cfg.measurements + "'");
  csv << measurements_to_csv(frames, grid);
  out << "wrote " << cfg.grid << " (" << grid.bus_count() << " buses, " << grid.branch_count()
      << " branches) and " << cfg.measurements << " (" << frames.size() << " frames)\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App cli{"flexgrid: flexibility analysis of LV distribution grids under load and PV uncertainty",
               "flexgrid"};
  cli.require_subcommand(1);
  cli.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  cli.add_option("--grid", cfg.grid, "Grid JSON file (output path for generate)");
  cli.add_option("--measurements", cfg.measurements,
                 "Measurement CSV file (output path for generate)");
  cli.add_option("--slot", cfg.slot, "Time slot, RFC 3339 (e.g. 2021-11-28T18:00:00Z)");
  cli.add_option("--sens", cfg.sens, "Sensitivity estimator: model_based or model_less")
      ->check(CLI::IsMember({"model_based", "model_less"}))
      ->capture_default_str();
  cli.add_option("--window", cfg.window,
                 "Model-less window in frames (0: four times the regressor count)")
      ->capture_default_str();
  cli.add_option("--ridge", cfg.ridge, "Model-less ridge weight")->capture_default_str();
  cli.add_option("--fd-step", cfg.fd_step, "Finite-difference step in p.u.")->capture_default_str();
  cli.add_option("--policy", cfg.policy, "Uncertainty policy: fractional, absolute, forecast_band")
      ->check(CLI::IsMember({"fractional", "absolute", "forecast_band"}))
      ->capture_default_str();
  cli.add_option("--load-fraction", cfg.load_fraction, "Fractional load half-width")
      ->capture_default_str();
  cli.add_option("--pv-fraction", cfg.pv_fraction, "Fractional PV half-width")
      ->capture_default_str();
  cli.add_option("--load-abs", cfg.load_abs, "Absolute load half-width in p.u.")
      ->capture_default_str();
  cli.add_option("--pv-abs", cfg.pv_abs, "Absolute PV half-width in p.u.")->capture_default_str();
  cli.add_option("--threads", cfg.threads, "Worker threads (0: OpenMP default)")
      ->capture_default_str();
  cli.add_option("--seed", cfg.seed, "Seed for every random draw")->capture_default_str();
  cli.fallthrough();

  auto* compute = cli.add_subcommand("compute", "Flexibility index of one slot as JSON");
  compute->add_flag("--dump-state", cfg.dump_state, "Include the operating point in the output");

  auto* series = cli.add_subcommand("run-series", "Evaluate every slot; report plus summary table");
  series->add_option("--format", cfg.format, "Report format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  series->add_option("--output", cfg.output,
                     "Write the report here and the summary to stdout "
                     "(default: report to stdout, summary to stderr)");

  auto* region = cli.add_subcommand("region", "Feasible-region polygon in a parameter plane (CSV)");
  region->add_option("--params", cfg.params, "Two parameter ids, e.g. load@106,pv@101")
      ->required();
  region->add_option("--samples", cfg.samples, "Number of angular samples")->capture_default_str();
  region->add_option("--cap", cfg.cap, "Largest plotted step in box units")->capture_default_str();

  auto* estimate =
      cli.add_subcommand("estimate-sensitivities", "Sensitivity matrices as JSON");
  estimate->add_option("--method", cfg.method, "model_based or model_less")
      ->check(CLI::IsMember({"model_based", "model_less"}))
      ->capture_default_str();

  auto* generate = cli.add_subcommand("generate", "Write the synthetic feeder and profiles");
  generate->add_option("--kind", cfg.kind, "day (daily profiles) or probe (small perturbations)")
      ->check(CLI::IsMember({"day", "probe"}))
      ->capture_default_str();
  generate->add_option("--bus-count", cfg.feeder.bus_count, "Feeder bus count")
      ->capture_default_str();
  generate->add_option("--r-pu", cfg.feeder.r_pu, "Segment resistance")->capture_default_str();
  generate->add_option("--x-pu", cfg.feeder.x_pu, "Segment reactance")->capture_default_str();
  generate->add_option("--ampacity", cfg.feeder.ampacity_pu, "Branch ampacity in p.u.")
      ->capture_default_str();
  generate->add_option("--trunk-ampacity", cfg.feeder.trunk_ampacity_pu,
                       "Ampacity of the first segment in p.u.")
      ->capture_default_str();
  generate->add_option("--s-max", cfg.feeder.s_max_pu, "Transformer rating in p.u.")
      ->capture_default_str();
  generate->add_option("--days", cfg.day.days, "Number of days")->capture_default_str();
  generate->add_option("--morning-amplitude-kw", cfg.day.morning_amplitude_kw,
                       "Morning load bump")
      ->capture_default_str();
  generate->add_option("--evening-amplitude-kw", cfg.day.evening_amplitude_kw,
                       "Evening load bump")
      ->capture_default_str();
  generate->add_option("--pv-amplitude-kw", cfg.day.pv_amplitude_kw, "PV peak")
      ->capture_default_str();
  generate->add_option("--noise", cfg.day.noise_fraction, "Relative noise level")
      ->capture_default_str();
  generate->add_option("--probe-frames", cfg.probe.frames, "Frames in a probe series")
      ->capture_default_str();
  generate->add_option("--probe-amplitude", cfg.probe.amplitude_pu,
                       "Probe perturbation amplitude in p.u.")
      ->capture_default_str();

  std::vector<const char*> argv{"flexgrid"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    cli.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << cli.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "flexgrid: " << e.what() << '\n';
    return kExitInput;
  }

  apply_threads(cfg);
  try {
    if (compute->parsed()) return cmd_compute(cfg, out);
    if (series->parsed()) return cmd_run_series(cfg, out, err);
    if (region->parsed()) return cmd_region(cfg, out);
    if (estimate->parsed()) return cmd_estimate_sensitivities(cfg, out);
    if (generate->parsed()) return cmd_generate(cfg, out);
  } catch (const InputError& e) {
    err << "flexgrid: input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ComputationError& e) {
    err << "flexgrid: computation error: " << e.what() << '\n';
    return kExitComputation;
  } catch (const Error& e) {
    err << "flexgrid: error: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitInput;
}

}  // namespace flexgrid::app
