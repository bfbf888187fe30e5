#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flexgrid/timestamp.hpp"

namespace flexgrid {

enum class Resource { load, pv, ev };

std::string_view to_string(Resource r);
Resource resource_from_string(std::string_view text);

inline constexpr double kDefaultVMin = 0.9;
inline constexpr double kDefaultVMax = 1.1;

struct Bus {
  std::string id;
  double v_min = kDefaultVMin;  // p.u.
  double v_max = kDefaultVMax;  // p.u.
  bool monitored = false;
  std::vector<Resource> resources;

  bool has(Resource r) const;
  /// Buses tagged load or ev carry an aggregated load parameter.
  bool carries_load() const { return has(Resource::load) || has(Resource::ev); }
  bool carries_pv() const { return has(Resource::pv); }

  friend bool operator==(const Bus&, const Bus&) = default;
};

struct Branch {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double resistance = 0.0;  // p.u.
  double reactance = 0.0;   // p.u.
  double i_max = 0.0;       // p.u. current

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct TransformerSpec {
  double s_max = 0.0;  // p.u. apparent power
  std::string lv_bus;

  friend bool operator==(const TransformerSpec&, const TransformerSpec&) = default;
};

/// Validated radial low-voltage grid in per-unit. Immutable after construction.
class GridModel {
 public:
  /// Throws ValidationError naming the offending element.
  GridModel(std::vector<Bus> buses, std::vector<Branch> branches, TransformerSpec transformer,
            std::string slack_bus_id, double base_power_va, double base_voltage_v,
            std::string description = {});

  const std::vector<Bus>& buses() const noexcept { return buses_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const TransformerSpec& transformer() const noexcept { return transformer_; }
  const std::string& slack_bus_id() const noexcept { return slack_bus_id_; }
  const std::string& description() const noexcept { return description_; }
  double base_power_va() const noexcept { return base_power_va_; }
  double base_voltage_v() const noexcept { return base_voltage_v_; }

  std::size_t bus_count() const noexcept { return buses_.size(); }
  std::size_t branch_count() const noexcept { return branches_.size(); }
  std::size_t slack_index() const noexcept { return slack_index_; }

  std::optional<std::size_t> find_bus(std::string_view id) const;
  std::optional<std::size_t> find_branch(std::string_view id) const;
  /// Throws UnknownIdError.
  std::size_t bus_index(std::string_view id) const;
  std::size_t branch_index(std::string_view id) const;

  std::size_t from_index(std::size_t branch) const { return from_index_[branch]; }
  std::size_t to_index(std::size_t branch) const { return to_index_[branch]; }

  /// Breadth-first bus order starting at the slack.
  const std::vector<std::size_t>& bfs_order() const noexcept { return bfs_order_; }
  /// Electrical path resistance from the slack to every bus.
  std::vector<double> path_resistance() const;

  /// Copy with every series impedance multiplied by `factor` (> 0).
  GridModel with_scaled_impedances(double factor) const;

  friend bool operator==(const GridModel& a, const GridModel& b);

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  TransformerSpec transformer_;
  std::string slack_bus_id_;
  double base_power_va_;
  double base_voltage_v_;
  std::string description_;

  std::map<std::string, std::size_t, std::less<>> bus_lookup_;
  std::map<std::string, std::size_t, std::less<>> branch_lookup_;
  std::vector<std::size_t> from_index_;
  std::vector<std::size_t> to_index_;
  std::vector<std::size_t> bfs_order_;
  std::size_t slack_index_ = 0;
};

/// Conversion to per-unit. Throws ZeroBaseError when base <= 0.
double to_per_unit(double value, double base);
double from_per_unit(double value_pu, double base);

GridModel parse_grid(std::string_view json_text);
GridModel load_grid(const std::filesystem::path& path);
std::string grid_to_json(const GridModel& grid);
void save_grid(const GridModel& grid, const std::filesystem::path& path);

/// One 10-minute slot of monitoring data, in per-unit, load-positive.
struct MeasurementFrame {
  Timestamp timestamp;
  std::vector<double> p;       // net active load per bus
  std::vector<double> q;       // net reactive load per bus
  std::vector<double> load_p;  // consumption component (>= 0)
  std::vector<double> load_q;
  std::vector<double> gen_p;   // production magnitude (>= 0); p = load_p - gen_p
  std::vector<double> gen_q;
  std::vector<std::optional<double>> v_measured;  // per bus
  std::vector<std::optional<double>> i_measured;  // per branch

  static MeasurementFrame empty(const GridModel& grid, Timestamp ts);
  /// Adds one consumption (p >= 0) or production (p < 0) reading at a bus.
  void add_power(std::size_t bus, double p_pu, double q_pu);
  double total_load() const;
  double total_generation() const;
};

/// Parses measurement CSV text. Rows sharing a timestamp form one frame.
std::vector<MeasurementFrame> parse_measurements(std::string_view csv_text,
                                                 const GridModel& grid);
std::vector<MeasurementFrame> load_measurements(const std::filesystem::path& path,
                                                const GridModel& grid);
std::string measurements_to_csv(const std::vector<MeasurementFrame>& frames,
                                const GridModel& grid);

/// Shortest decimal representation that round-trips.
std::string format_double(double value);

}  // namespace flexgrid
