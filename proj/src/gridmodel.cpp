#include "flexgrid/gridmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flexgrid/errors.hpp"

namespace flexgrid {

using nlohmann::json;

std::string_view to_string(Resource r) {
  switch (r) {
    case Resource::load:
      return "load";
    case Resource::pv:
      return "pv";
    case Resource::ev:
      return "ev";
  }
  return "load";
}

Resource resource_from_string(std::string_view text) {
  if (text == "load") return Resource::load;
  if (text == "pv") return Resource::pv;
  if (text == "ev") return Resource::ev;
  throw ValidationError("unknown resource tag '" + std::string(text) + "'");
}

bool Bus::has(Resource r) const {
  return std::find(resources.begin(), resources.end(), r) != resources.end();
}

GridModel::GridModel(std::vector<Bus> buses, std::vector<Branch> branches,
                     TransformerSpec transformer, std::string slack_bus_id, double base_power_va,
                     double base_voltage_v, std::string description)
    : buses_(std::move(buses)),
      branches_(std::move(branches)),
      transformer_(std::move(transformer)),
      slack_bus_id_(std::move(slack_bus_id)),
      base_power_va_(base_power_va),
      base_voltage_v_(base_voltage_v),
      description_(std::move(description)) {
  if (!(base_power_va_ > 0.0) || !std::isfinite(base_power_va_)) {
    throw ValidationError("base_power_va must be positive");
  }
  if (!(base_voltage_v_ > 0.0) || !std::isfinite(base_voltage_v_)) {
    throw ValidationError("base_voltage_v must be positive");
  }
  if (buses_.empty()) {
    throw ValidationError("grid has no buses");
  }
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (b.id.empty()) throw ValidationError("bus #" + std::to_string(i) + " has an empty id");
    if (!bus_lookup_.emplace(b.id, i).second) {
      throw ValidationError("duplicate bus id '" + b.id + "'");
    }
    if (!(b.v_min > 0.0) || !(b.v_min < b.v_max) || !std::isfinite(b.v_max)) {
      throw ValidationError("bus '" + b.id + "' needs 0 < v_min < v_max");
    }
  }
  const auto slack = bus_lookup_.find(slack_bus_id_);
  if (slack == bus_lookup_.end()) {
    throw ValidationError("slack bus '" + slack_bus_id_ + "' does not exist");
  }
  slack_index_ = slack->second;
  if (transformer_.lv_bus != slack_bus_id_) {
    throw ValidationError("transformer LV bus '" + transformer_.lv_bus +
                          "' must be the slack bus '" + slack_bus_id_ + "'");
  }
  if (!(transformer_.s_max > 0.0) || !std::isfinite(transformer_.s_max)) {
    throw ValidationError("transformer s_max must be positive");
  }

  for (std::size_t k = 0; k < branches_.size(); ++k) {
    const Branch& br = branches_[k];
    if (br.id.empty()) throw ValidationError("branch #" + std::to_string(k) + " has an empty id");
    if (!branch_lookup_.emplace(br.id, k).second) {
      throw ValidationError("duplicate branch id '" + br.id + "'");
    }
    const auto f = bus_lookup_.find(br.from_bus);
    const auto t = bus_lookup_.find(br.to_bus);
    if (f == bus_lookup_.end() || t == bus_lookup_.end()) {
      throw ValidationError("branch '" + br.id + "' references an unknown bus");
    }
    if (f->second == t->second) {
      throw ValidationError("branch '" + br.id + "' connects bus '" + br.from_bus + "' to itself");
    }
    if (!(br.resistance >= 0.0) || !std::isfinite(br.reactance) ||
        !(std::hypot(br.resistance, br.reactance) > 0.0)) {
      throw ValidationError("branch '" + br.id + "' needs r >= 0 and a nonzero impedance");
    }
    if (!(br.i_max > 0.0) || !std::isfinite(br.i_max)) {
      throw ValidationError("branch '" + br.id + "' needs a positive ampacity");
    }
    from_index_.push_back(f->second);
    to_index_.push_back(t->second);
  }

  if (branches_.size() + 1 != buses_.size()) {
    throw ValidationError("non-radial grid: " + std::to_string(buses_.size()) + " buses and " +
                          std::to_string(branches_.size()) + " branches");
  }
  std::vector<std::vector<std::size_t>> adjacency(buses_.size());
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    adjacency[from_index_[k]].push_back(to_index_[k]);
    adjacency[to_index_[k]].push_back(from_index_[k]);
  }
  std::vector<bool> seen(buses_.size(), false);
  std::queue<std::size_t> pending;
  pending.push(slack_index_);
  seen[slack_index_] = true;
  while (!pending.empty()) {
    const std::size_t u = pending.front();
    pending.pop();
    bfs_order_.push_back(u);
    for (std::size_t v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = true;
        pending.push(v);
      }
    }
  }
  if (bfs_order_.size() != buses_.size()) {
    const auto it = std::find(seen.begin(), seen.end(), false);
    throw ValidationError("non-radial grid: bus '" +
                          buses_[static_cast<std::size_t>(it - seen.begin())].id +
                          "' is not connected to the slack");
  }
}

std::optional<std::size_t> GridModel::find_bus(std::string_view id) const {
  const auto it = bus_lookup_.find(id);
  if (it == bus_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> GridModel::find_branch(std::string_view id) const {
  const auto it = branch_lookup_.find(id);
  if (it == branch_lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t GridModel::bus_index(std::string_view id) const {
  if (auto i = find_bus(id)) return *i;
  throw UnknownIdError("unknown bus id '" + std::string(id) + "'");
}

std::size_t GridModel::branch_index(std::string_view id) const {
  if (auto i = find_branch(id)) return *i;
  throw UnknownIdError("unknown branch id '" + std::string(id) + "'");
}

std::vector<double> GridModel::path_resistance() const {
  std::vector<double> dist(buses_.size(), -1.0);
  dist[slack_index_] = 0.0;
  // Radial: relax along BFS order until every bus is reached.
  for (std::size_t u : bfs_order_) {
    for (std::size_t k = 0; k < branches_.size(); ++k) {
      const std::size_t f = from_index_[k];
      const std::size_t t = to_index_[k];
      if (f == u && dist[t] < 0.0) dist[t] = dist[u] + branches_[k].resistance;
      if (t == u && dist[f] < 0.0) dist[f] = dist[u] + branches_[k].resistance;
    }
  }
  return dist;
}

GridModel GridModel::with_scaled_impedances(double factor) const {
  std::vector<Branch> scaled = branches_;
  for (Branch& br : scaled) {
    br.resistance *= factor;
    br.reactance *= factor;
  }
  return GridModel(buses_, std::move(scaled), transformer_, slack_bus_id_, base_power_va_,
                   base_voltage_v_, description_);
}

bool operator==(const GridModel& a, const GridModel& b) {
  return a.buses_ == b.buses_ && a.branches_ == b.branches_ && a.transformer_ == b.transformer_ &&
         a.slack_bus_id_ == b.slack_bus_id_ && a.base_power_va_ == b.base_power_va_ &&
         a.base_voltage_v_ == b.base_voltage_v_ && a.description_ == b.description_;
}

double to_per_unit(double value, double base) {
  if (!(base > 0.0)) throw ZeroBaseError("per-unit base must be positive");
  return value / base;
}

double from_per_unit(double value_pu, double base) {
  if (!(base > 0.0)) throw ZeroBaseError("per-unit base must be positive");
  return value_pu * base;
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw ParseError(where + ": missing key '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_value(const json& obj, const char* key, T fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

GridModel parse_grid(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("grid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("grid JSON: top level must be an object");

  const auto buses_json = doc.find("buses");
  const auto branches_json = doc.find("branches");
  const auto trafo_json = doc.find("transformer");
  if (buses_json == doc.end() || !buses_json->is_array()) {
    throw ParseError("grid JSON: 'buses' must be an array");
  }
  if (branches_json == doc.end() || !branches_json->is_array()) {
    throw ParseError("grid JSON: 'branches' must be an array");
  }
  if (trafo_json == doc.end() || !trafo_json->is_object()) {
    throw ParseError("grid JSON: 'transformer' must be an object");
  }

  std::vector<Bus> buses;
  for (std::size_t i = 0; i < buses_json->size(); ++i) {
    const json& b = (*buses_json)[i];
    const std::string where = "bus #" + std::to_string(i);
    if (!b.is_object()) throw ParseError(where + ": must be an object");
    Bus bus;
    bus.id = required<std::string>(b, "id", where);
    bus.v_min = optional_value<double>(b, "v_min", kDefaultVMin, where);
    bus.v_max = optional_value<double>(b, "v_max", kDefaultVMax, where);
    bus.monitored = optional_value<bool>(b, "monitored", false, where);
    for (const auto& tag :
         optional_value<std::vector<std::string>>(b, "resources", {}, "bus '" + bus.id + "'")) {
      bus.resources.push_back(resource_from_string(tag));
    }
    buses.push_back(std::move(bus));
  }

  std::vector<Branch> branches;
  for (std::size_t k = 0; k < branches_json->size(); ++k) {
    const json& br = (*branches_json)[k];
    const std::string where = "branch #" + std::to_string(k);
    if (!br.is_object()) throw ParseError(where + ": must be an object");
    Branch branch;
    branch.id = required<std::string>(br, "id", where);
    branch.from_bus = required<std::string>(br, "from", where);
    branch.to_bus = required<std::string>(br, "to", where);
    branch.resistance = required<double>(br, "r_pu", where);
    branch.reactance = required<double>(br, "x_pu", where);
    branch.i_max = required<double>(br, "i_max_pu", where);
    branches.push_back(std::move(branch));
  }

  TransformerSpec trafo;
  trafo.s_max = required<double>(*trafo_json, "s_max_pu", "transformer");
  trafo.lv_bus = required<std::string>(*trafo_json, "lv_bus", "transformer");

  return GridModel(std::move(buses), std::move(branches), std::move(trafo),
                   required<std::string>(doc, "slack_bus", "grid"),
                   required<double>(doc, "base_power_va", "grid"),
                   required<double>(doc, "base_voltage_v", "grid"),
                   optional_value<std::string>(doc, "description", "", "grid"));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

GridModel load_grid(const std::filesystem::path& path) { return parse_grid(read_file(path)); }

std::string grid_to_json(const GridModel& grid) {
  json doc = json::object();
  if (!grid.description().empty()) doc["description"] = grid.description();
  doc["base_power_va"] = grid.base_power_va();
  doc["base_voltage_v"] = grid.base_voltage_v();
  doc["slack_bus"] = grid.slack_bus_id();
  json buses = json::array();
  for (const Bus& b : grid.buses()) {
    json tags = json::array();
    for (Resource r : b.resources) tags.push_back(std::string(to_string(r)));
    buses.push_back({{"id", b.id},
                     {"v_min", b.v_min},
                     {"v_max", b.v_max},
                     {"monitored", b.monitored},
                     {"resources", tags}});
  }
  doc["buses"] = buses;
  json branches = json::array();
  for (const Branch& br : grid.branches()) {
    branches.push_back({{"id", br.id},
                        {"from", br.from_bus},
                        {"to", br.to_bus},
                        {"r_pu", br.resistance},
                        {"x_pu", br.reactance},
                        {"i_max_pu", br.i_max}});
  }
  doc["branches"] = branches;
  doc["transformer"] = {{"s_max_pu", grid.transformer().s_max},
                        {"lv_bus", grid.transformer().lv_bus}};
  return doc.dump(2) + "\n";
}

void save_grid(const GridModel& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << grid_to_json(grid);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

}  // namespace flexgrid
