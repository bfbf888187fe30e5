#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flexgrid/gridmodel.hpp"
#include "flexgrid/powerflow.hpp"
#include "flexgrid/sensitivity.hpp"

namespace flexgrid {

enum class ParameterKind { load_p, pv_p };

std::string_view to_string(ParameterKind k);

/// One uncertain quantity in natural units: aggregated bus load, or PV production
/// magnitude. Its box is [expected - down_half_width, expected + up_half_width].
struct UncertainParameter {
  std::string id;
  std::string bus_id;
  ParameterKind kind = ParameterKind::load_p;
  double expected = 0.0;
  double up_half_width = 0.0;
  double down_half_width = 0.0;
  double reactive_coupling = 0.0;  // tan(phi): dQ = tan(phi) * dP

  /// +1 when an increase raises the bus load, -1 for production.
  double injection_sign() const { return kind == ParameterKind::pv_p ? -1.0 : 1.0; }
  /// Signed excursion of the parameter for a direction component d in [-1, 1].
  double excursion(double d) const { return d >= 0.0 ? d * up_half_width : d * down_half_width; }
};

/// Ordered set of uncertain parameters. Zero-width parameters are allowed and
/// behave as pinned at their expected value.
class UncertaintyModel {
 public:
  explicit UncertaintyModel(std::vector<UncertainParameter> parameters);

  const std::vector<UncertainParameter>& parameters() const noexcept { return parameters_; }
  std::size_t size() const noexcept { return parameters_.size(); }
  const UncertainParameter& operator[](std::size_t i) const { return parameters_[i]; }
  /// Throws UnknownParameterError.
  std::size_t index_of(std::string_view id) const;

  /// Same model with every half-width multiplied by `factor`.
  UncertaintyModel scaled(double factor) const;
  /// Same model with all parameters except `keep` pinned (zero half-widths).
  UncertaintyModel restricted_to(std::span<const std::string> keep) const;

 private:
  std::vector<UncertainParameter> parameters_;
};

/// Diagonal of the direction matrix: entries in [-1, 1], at least one saturated.
class Direction {
 public:
  /// Throws ValidationError when the entries violate the invariants.
  explicit Direction(std::vector<double> d);
  /// Rescales a nonzero vector so that its largest magnitude is exactly 1.
  static Direction normalized(std::vector<double> d);

  const std::vector<double>& values() const noexcept { return d_; }
  std::size_t size() const noexcept { return d_.size(); }
  double operator[](std::size_t i) const { return d_[i]; }

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  std::vector<double> d_;
};

/// a . (X - X_expected) <= slack. A negative slack means the anchor violates the row.
struct ConstraintRow {
  std::string label;
  std::vector<double> coeff;
  double slack = 0.0;
};

struct LinearConstraintSystem {
  std::vector<ConstraintRow> rows;
  std::vector<std::string> parameter_ids;
  std::optional<Timestamp> anchor_timestamp;
  SensitivityMethod method = SensitivityMethod::model_based;

  bool origin_feasible() const;
};

struct AssemblyOptions {
  /// Below this anchor loading the transformer disc is replaced by an inscribed octagon.
  double transformer_linearization_floor = 1e-3;
};

/// Builds voltage, branch-current and transformer rows around the anchor point.
/// Throws MissingSensitivityRowError, AnchorMismatchError, UnknownIdError.
LinearConstraintSystem assemble_constraints(const GridModel& grid, const OperatingPoint& point,
                                            const SensitivitySet& sens,
                                            const UncertaintyModel& unc,
                                            const AssemblyOptions& options = {});

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Largest step along `d` before a row is violated; kUnbounded when none binds.
/// Throws OriginInfeasibleError.
double beta_max(const LinearConstraintSystem& sys, const UncertaintyModel& unc,
                const Direction& d);

struct FlexibilityResult {
  double flexibility = 0.0;  // kUnbounded when no row limits the box
  Direction critical_direction{std::vector<double>{1.0}};
  std::vector<std::string> parameter_ids;
  std::vector<double> boundary_point;
  std::string binding_constraint;  // empty when unbounded
  bool origin_feasible = true;
  bool adequate = true;

  bool unbounded() const { return flexibility == kUnbounded; }
};

/// Exact minimum of beta_max over all valid directions, via per-row worst-case
/// growth over the box. Handles an infeasible anchor by returning F = 0.
FlexibilityResult flexibility_index(const LinearConstraintSystem& sys,
                                    const UncertaintyModel& unc);

struct RegionPoint {
  double theta = 0.0;
  double first = 0.0;
  double second = 0.0;
};

struct RegionOptions {
  std::size_t samples = 360;
  /// Largest step drawn, in units of the uncertainty box.
  double cap = 3.0;
};

/// Star-shaped boundary of the feasible region in the plane of two parameters,
/// all others pinned. Returns samples + 1 points; the last repeats the first.
/// Throws UnknownParameterError, OriginInfeasibleError.
std::vector<RegionPoint> trace_feasible_region_2d(const LinearConstraintSystem& sys,
                                                  const UncertaintyModel& unc,
                                                  std::string_view first_id,
                                                  std::string_view second_id,
                                                  const RegionOptions& options = {});

}  // namespace flexgrid
