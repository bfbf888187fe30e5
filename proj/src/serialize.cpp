#include "flexgrid/serialize.hpp"

#include <cmath>
#include <sstream>

namespace flexgrid {
namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

Json to_json(const OperatingPoint& point, const GridModel& grid) {
  Json doc;
  if (point.timestamp) doc["timestamp"] = format_rfc3339(*point.timestamp);
  doc["source"] = point.source == StateSource::measured ? "measured" : "solved";
  Json buses = Json::array();
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    buses.push_back({{"id", grid.buses()[b].id},
                     {"v_pu", point.v_mag[b]},
                     {"angle_rad", point.v_ang[b]},
                     {"p_pu", point.p[b]},
                     {"q_pu", point.q[b]}});
  }
  doc["buses"] = std::move(buses);
  Json branches = Json::array();
  for (std::size_t l = 0; l < grid.branch_count(); ++l) {
    branches.push_back({{"id", grid.branches()[l].id}, {"i_pu", point.i_mag[l]}});
  }
  doc["branches"] = std::move(branches);
  doc["p_slack_pu"] = point.p_slack;
  doc["q_slack_pu"] = point.q_slack;
  doc["s_grid_pu"] = point.s_grid;
  doc["losses_pu"] = point.losses;
  doc["mismatch_pu"] = point.mismatch;
  doc["iterations"] = point.iterations;
  return doc;
}

Json to_json(const SensitivitySet& sens) {
  Json doc;
  doc["method"] = std::string(to_string(sens.method));
  doc["anchor_timestamp"] =
      sens.anchor_timestamp ? Json(format_rfc3339(*sens.anchor_timestamp)) : Json(nullptr);
  doc["bus_ids"] = sens.bus_ids;
  doc["branch_ids"] = sens.branch_ids;
  doc["K_VP"] = matrix_json(sens.k_vp);
  doc["K_VQ"] = matrix_json(sens.k_vq);
  doc["K_IP"] = matrix_json(sens.k_ip);
  doc["K_IQ"] = matrix_json(sens.k_iq);
  doc["voltage_rows_available"] = sens.voltage_row_available;
  doc["current_rows_available"] = sens.current_row_available;
  doc["current_rows_near_zero"] = sens.current_row_near_zero;
  if (sens.method == SensitivityMethod::model_less) {
    Json cond = Json::array();
    for (double c : sens.row_condition) cond.push_back(number_or_null(c));
    doc["row_condition"] = std::move(cond);
    doc["window"] = sens.window;
    doc["ridge"] = sens.ridge;
  } else {
    doc["step"] = sens.step;
  }
  return doc;
}

Json to_json(const FlexibilityResult& result, std::optional<Timestamp> timestamp) {
  Json doc;
  doc["timestamp"] = timestamp ? Json(format_rfc3339(*timestamp)) : Json(nullptr);
  doc["F"] = number_or_null(result.flexibility);
  doc["F_unbounded"] = result.unbounded();
  doc["adequate"] = result.adequate;
  doc["binding_constraint"] =
      result.binding_constraint.empty() ? Json(nullptr) : Json(result.binding_constraint);
  Json direction = Json::object();
  Json point = Json::object();
  for (std::size_t i = 0; i < result.parameter_ids.size(); ++i) {
    direction[result.parameter_ids[i]] = result.critical_direction[i];
    point[result.parameter_ids[i]] = result.boundary_point[i];
  }
  doc["critical_direction"] = std::move(direction);
  doc["boundary_point"] = std::move(point);
  doc["origin_feasible"] = result.origin_feasible;
  return doc;
}

Json to_json(const SlotReport& report) {
  Json doc;
  doc["timestamp"] = format_rfc3339(report.timestamp);
  doc["F_display"] = number_or_null(report.f_display);
  doc["F_raw"] = number_or_null(report.f_raw);
  doc["F_unbounded"] = report.f_raw == kUnbounded;
  doc["adequate"] = report.adequate;
  doc["origin_feasible"] = report.origin_feasible;
  doc["binding_constraint"] =
      report.binding_constraint.empty() ? Json(nullptr) : Json(report.binding_constraint);
  doc["load_total_pu"] = report.load_total;
  doc["pv_total_pu"] = report.pv_total;
  if (report.failed()) doc["error"] = report.error;
  return doc;
}

Json to_json(std::span<const RegionPoint> polygon) {
  Json doc = Json::array();
  for (const RegionPoint& p : polygon) doc.push_back({p.theta, p.first, p.second});
  return doc;
}

std::string region_to_csv(std::span<const RegionPoint> polygon) {
  std::ostringstream out;
  out << "theta,param1_value,param2_value\n";
  for (const RegionPoint& p : polygon) {
    out << format_double(p.theta) << ',' << format_double(p.first) << ','
        << format_double(p.second) << '\n';
  }
  return out.str();
}

}  // namespace flexgrid
