#include "flexgrid/flexcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "flexgrid/errors.hpp"

namespace flexgrid {

std::string_view to_string(ParameterKind k) { return k == ParameterKind::pv_p ? "pv_p" : "load_p"; }

UncertaintyModel::UncertaintyModel(std::vector<UncertainParameter> parameters)
    : parameters_(std::move(parameters)) {
  if (parameters_.empty()) throw EmptyUncertaintyError("uncertainty model has no parameters");
  std::set<std::string, std::less<>> ids;
  for (const UncertainParameter& p : parameters_) {
    if (!ids.insert(p.id).second) {
      throw ValidationError("duplicate uncertain parameter id '" + p.id + "'");
    }
    if (!(p.up_half_width >= 0.0) || !(p.down_half_width >= 0.0) ||
        !std::isfinite(p.up_half_width) || !std::isfinite(p.down_half_width) ||
        !std::isfinite(p.expected) || !std::isfinite(p.reactive_coupling)) {
      throw ValidationError("uncertain parameter '" + p.id +
                            "' needs finite, nonnegative half-widths");
    }
  }
}

std::size_t UncertaintyModel::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    if (parameters_[i].id == id) return i;
  }
  throw UnknownParameterError("unknown uncertain parameter '" + std::string(id) + "'");
}

UncertaintyModel UncertaintyModel::scaled(double factor) const {
  std::vector<UncertainParameter> out = parameters_;
  for (auto& p : out) {
    p.up_half_width *= factor;
    p.down_half_width *= factor;
  }
  return UncertaintyModel(std::move(out));
}

UncertaintyModel UncertaintyModel::restricted_to(std::span<const std::string> keep) const {
  for (const auto& id : keep) index_of(id);
  std::vector<UncertainParameter> out = parameters_;
  for (auto& p : out) {
    if (std::find(keep.begin(), keep.end(), p.id) == keep.end()) {
      p.up_half_width = 0.0;
      p.down_half_width = 0.0;
    }
  }
  return UncertaintyModel(std::move(out));
}

Direction::Direction(std::vector<double> d) : d_(std::move(d)) {
  if (d_.empty()) throw ValidationError("direction must have at least one entry");
  double largest = 0.0;
  for (double v : d_) {
    if (!(v >= -1.0 && v <= 1.0)) throw ValidationError("direction entries must lie in [-1, 1]");
    largest = std::max(largest, std::abs(v));
  }
  if (largest != 1.0) throw ValidationError("direction must have one entry at -1 or 1");
}

Direction Direction::normalized(std::vector<double> d) {
  double largest = 0.0;
  for (double v : d) largest = std::max(largest, std::abs(v));
  if (!(largest > 0.0) || !std::isfinite(largest)) {
    throw ValidationError("cannot normalize a zero direction");
  }
  for (double& v : d) v = std::clamp(v / largest, -1.0, 1.0);
  // Round-off may leave no entry exactly at +/-1.
  const auto it = std::max_element(d.begin(), d.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  *it = *it < 0.0 ? -1.0 : 1.0;
  return Direction(std::move(d));
}

bool LinearConstraintSystem::origin_feasible() const {
  return std::all_of(rows.begin(), rows.end(), [](const ConstraintRow& r) { return r.slack >= 0.0; });
}

LinearConstraintSystem assemble_constraints(const GridModel& grid, const OperatingPoint& point,
                                            const SensitivitySet& sens,
                                            const UncertaintyModel& unc,
                                            const AssemblyOptions& options) {
  const std::size_t nb = grid.bus_count();
  const std::size_t nl = grid.branch_count();
  if (static_cast<std::size_t>(sens.k_vp.rows()) != nb ||
      static_cast<std::size_t>(sens.k_vp.cols()) != nb ||
      static_cast<std::size_t>(sens.k_ip.rows()) != nl || point.v_mag.size() != nb ||
      point.i_mag.size() != nl) {
    throw AnchorMismatchError("sensitivity set, operating point and grid dimensions disagree");
  }
  if (sens.anchor_timestamp && point.timestamp && *sens.anchor_timestamp != *point.timestamp) {
    throw AnchorMismatchError("sensitivities anchored at " +
                              format_rfc3339(*sens.anchor_timestamp) +
                              " used with operating point at " + format_rfc3339(*point.timestamp));
  }

  const std::size_t n = unc.size();
  std::vector<std::size_t> bus_of(n);
  for (std::size_t i = 0; i < n; ++i) bus_of[i] = grid.bus_index(unc[i].bus_id);

  const auto row_coeff = [&](const Eigen::MatrixXd& kp, const Eigen::MatrixXd& kq,
                             std::size_t row) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(row);
      const auto c = static_cast<Eigen::Index>(bus_of[i]);
      a[i] = unc[i].injection_sign() * (kp(r, c) + unc[i].reactive_coupling * kq(r, c));
    }
    return a;
  };
  const auto negated = [](std::vector<double> a) {
    for (double& v : a) v = -v;
    return a;
  };

  LinearConstraintSystem sys;
  sys.anchor_timestamp = point.timestamp;
  sys.method = sens.method;
  for (const auto& p : unc.parameters()) sys.parameter_ids.push_back(p.id);

  for (std::size_t m = 0; m < nb; ++m) {
    const Bus& bus = grid.buses()[m];
    if (!sens.voltage_row_available[m]) {
      throw MissingSensitivityRowError("no voltage sensitivity row for bus '" + bus.id + "'");
    }
    auto a = row_coeff(sens.k_vp, sens.k_vq, m);
    sys.rows.push_back({"v_max:" + bus.id, a, bus.v_max - point.v_mag[m]});
    sys.rows.push_back({"v_min:" + bus.id, negated(std::move(a)), point.v_mag[m] - bus.v_min});
  }
  for (std::size_t l = 0; l < nl; ++l) {
    const Branch& br = grid.branches()[l];
    if (!sens.current_row_available[l]) {
      throw MissingSensitivityRowError("no current sensitivity row for branch '" + br.id + "'");
    }
    const bool real_part =
        sens.method == SensitivityMethod::model_based && sens.current_row_near_zero[l];
    const double i0 = real_part ? point.i_from[l].real() : point.i_mag[l];
    auto a = row_coeff(sens.k_ip, sens.k_iq, l);
    sys.rows.push_back({"i_max:" + br.id, a, br.i_max - i0});
    sys.rows.push_back({"i_min:" + br.id, negated(std::move(a)), br.i_max + i0});
  }

  // Transformer loading: aggregate P/Q change is the sum of parameter changes (lossless).
  const double s_max = grid.transformer().s_max;
  const std::string trafo_label = "s_max:" + grid.transformer().lv_bus;
  std::vector<double> dp(n);
  std::vector<double> dq(n);
  for (std::size_t i = 0; i < n; ++i) {
    dp[i] = unc[i].injection_sign();
    dq[i] = unc[i].injection_sign() * unc[i].reactive_coupling;
  }
  if (point.s_grid >= options.transformer_linearization_floor) {
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = (point.p_slack * dp[i] + point.q_slack * dq[i]) / point.s_grid;
    }
    sys.rows.push_back({trafo_label, std::move(a), s_max - point.s_grid});
  } else {
    // Regular octagon inscribed in the |S| <= s_max disc: facet normals every 45 degrees
    // at distance s_max * cos(pi/8).
    const double apothem = s_max * std::cos(std::numbers::pi / 8.0);
    for (int k = 0; k < 8; ++k) {
      const double angle = k * std::numbers::pi / 4.0;
      const double cp = std::cos(angle);
      const double cq = std::sin(angle);
      std::vector<double> a(n);
      for (std::size_t i = 0; i < n; ++i) a[i] = cp * dp[i] + cq * dq[i];
      sys.rows.push_back({trafo_label + "#" + std::to_string(k), std::move(a),
                          apothem - (cp * point.p_slack + cq * point.q_slack)});
    }
  }
  return sys;
}

namespace {

void check_dimensions(const LinearConstraintSystem& sys, const UncertaintyModel& unc) {
  for (const ConstraintRow& row : sys.rows) {
    if (row.coeff.size() != unc.size()) {
      throw ValidationError("constraint row '" + row.label +
                            "' does not match the uncertainty model size");
    }
  }
}

}  // namespace

double beta_max(const LinearConstraintSystem& sys, const UncertaintyModel& unc,
                const Direction& d) {
  check_dimensions(sys, unc);
  if (d.size() != unc.size()) throw ValidationError("direction size differs from parameter count");
  std::vector<double> excursion(unc.size());
  for (std::size_t i = 0; i < unc.size(); ++i) excursion[i] = unc[i].excursion(d[i]);

  double best = kUnbounded;
  for (const ConstraintRow& row : sys.rows) {
    if (row.slack < 0.0) {
      throw OriginInfeasibleError("anchor violates constraint '" + row.label + "'");
    }
    double growth = 0.0;
    for (std::size_t i = 0; i < unc.size(); ++i) growth += row.coeff[i] * excursion[i];
    if (growth > 0.0) best = std::min(best, row.slack / growth);
  }
  return best;
}

namespace {

// Worst-case increase of a row over the unit box and the sign pattern attaining it.
double worst_case_growth(const ConstraintRow& row, const UncertaintyModel& unc,
                         std::vector<double>* pattern) {
  double growth = 0.0;
  for (std::size_t i = 0; i < unc.size(); ++i) {
    const double up = row.coeff[i] * unc[i].up_half_width;
    const double down = -row.coeff[i] * unc[i].down_half_width;
    double d = 0.0;
    double term = 0.0;
    if (up > term) {
      term = up;
      d = 1.0;
    }
    if (down > term) {
      term = down;
      d = -1.0;
    }
    growth += term;
    if (pattern) (*pattern)[i] = d;
  }
  return growth;
}

bool lexicographically_before(const ConstraintRow& a, const ConstraintRow& b) {
  return a.label < b.label;
}

}  // namespace

FlexibilityResult flexibility_index(const LinearConstraintSystem& sys,
                                    const UncertaintyModel& unc) {
  check_dimensions(sys, unc);
  const std::size_t n = unc.size();
  FlexibilityResult result;
  result.parameter_ids.reserve(n);
  for (const auto& p : unc.parameters()) result.parameter_ids.push_back(p.id);
  result.boundary_point.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.boundary_point[i] = unc[i].expected;

  const ConstraintRow* binding = nullptr;
  if (!sys.origin_feasible()) {
    for (const ConstraintRow& row : sys.rows) {
      if (!binding || row.slack < binding->slack ||
          (row.slack == binding->slack && lexicographically_before(row, *binding))) {
        binding = &row;
      }
    }
    result.flexibility = 0.0;
    result.origin_feasible = false;
  } else {
    double best = kUnbounded;
    for (const ConstraintRow& row : sys.rows) {
      const double growth = worst_case_growth(row, unc, nullptr);
      if (!(growth > 0.0)) continue;
      const double ratio = row.slack / growth;
      if (ratio < best || (ratio == best && binding && lexicographically_before(row, *binding))) {
        best = ratio;
        binding = &row;
      }
    }
    result.flexibility = best;
  }
  result.adequate = result.origin_feasible && result.flexibility >= 1.0;

  std::vector<double> pattern(n, 1.0);
  if (binding) {
    result.binding_constraint = binding->label;
    worst_case_growth(*binding, unc, &pattern);
    if (std::all_of(pattern.begin(), pattern.end(), [](double v) { return v == 0.0; })) {
      std::fill(pattern.begin(), pattern.end(), 1.0);
    }
  }
  result.critical_direction = Direction(pattern);
  if (result.origin_feasible && !result.unbounded()) {
    for (std::size_t i = 0; i < n; ++i) {
      result.boundary_point[i] =
          unc[i].expected + result.flexibility * unc[i].excursion(pattern[i]);
    }
  }
  return result;
}

std::vector<RegionPoint> trace_feasible_region_2d(const LinearConstraintSystem& sys,
                                                  const UncertaintyModel& unc,
                                                  std::string_view first_id,
                                                  std::string_view second_id,
                                                  const RegionOptions& options) {
  const std::size_t a = unc.index_of(first_id);
  const std::size_t b = unc.index_of(second_id);
  if (a == b) throw UnknownParameterError("region needs two distinct parameters");
  if (options.samples == 0) throw ValidationError("region needs at least one sample");
  if (!(options.cap > 0.0)) throw ValidationError("region cap must be positive");
  if (!sys.origin_feasible()) {
    throw OriginInfeasibleError("anchor is infeasible; the feasible region is empty");
  }

  std::vector<RegionPoint> polygon;
  polygon.reserve(options.samples + 1);
  for (std::size_t k = 0; k < options.samples; ++k) {
    const double theta =
        2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(options.samples);
    std::vector<double> d(unc.size(), 0.0);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double scale = std::max(std::abs(c), std::abs(s));
    d[a] = c / scale;
    d[b] = s / scale;
    const Direction dir = Direction::normalized(std::move(d));
    const double step = std::min(beta_max(sys, unc, dir), options.cap);
    polygon.push_back({theta, unc[a].expected + step * unc[a].excursion(dir[a]),
                       unc[b].expected + step * unc[b].excursion(dir[b])});
  }
  polygon.push_back(polygon.front());
  return polygon;
}

}  // namespace flexgrid
