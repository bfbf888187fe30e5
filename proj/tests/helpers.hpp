#pragma once

// Shared fixtures and independent oracles for the test binaries.

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "flexgrid/flexcore.hpp"
#include "flexgrid/gridmodel.hpp"

namespace flexgrid::testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(FLEXGRID_FIXTURE_DIR) / name;
}

/// Slack "0" feeding one load bus "1" through r + jx.
inline GridModel two_bus_grid(double r = 0.01, double x = 0.01, double i_max = 1.0) {
  std::vector<Bus> buses(2);
  buses[0].id = "0";
  buses[1].id = "1";
  buses[1].resources = {Resource::load};
  buses[1].monitored = true;
  std::vector<Branch> branches{{"L", "0", "1", r, x, i_max}};
  return GridModel(std::move(buses), std::move(branches), TransformerSpec{1.0, "0"}, "0", 100e3,
                   400.0);
}

/// Receiving-end voltage of the 2-bus system: upper root of
///   V^4 + (2(rP + xQ) - 1) V^2 + (r^2 + x^2)(P^2 + Q^2) = 0,
/// located by bisection on [lo, 1].
inline double two_bus_voltage_bisection(double r, double x, double p, double q) {
  const auto f = [&](double v) {
    const double v2 = v * v;
    return v2 * v2 + (2.0 * (r * p + x * q) - 1.0) * v2 + (r * r + x * x) * (p * p + q * q);
  };
  // f(1) >= 0; the upper root lies where f changes sign above the turning point.
  const double turning = std::sqrt(std::max(0.0, (1.0 - 2.0 * (r * p + x * q)) / 2.0));
  double lo = turning;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// dV/dP of the 2-bus system by implicit differentiation of the quartic.
inline double two_bus_dv_dp(double r, double x, double p, double q) {
  const double v = two_bus_voltage_bisection(r, x, p, q);
  const double df_dp = 2.0 * r * v * v + 2.0 * (r * r + x * x) * p;
  const double df_dv = 4.0 * v * v * v + 2.0 * (2.0 * (r * p + x * q) - 1.0) * v;
  return -df_dp / df_dv;
}

struct RandomInstance {
  LinearConstraintSystem system;
  UncertaintyModel uncertainty;
};

/// Random linear system over n parameters with nonnegative slacks and asymmetric widths.
inline RandomInstance random_instance(std::mt19937_64& rng, std::size_t n, std::size_t rows) {
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  std::uniform_real_distribution<double> slack(0.0, 1.0);
  std::uniform_real_distribution<double> width(0.0, 0.5);
  std::bernoulli_distribution sparse(0.15);
  std::vector<UncertainParameter> params;
  for (std::size_t i = 0; i < n; ++i) {
    UncertainParameter p;
    p.id = "x" + std::to_string(i);
    p.bus_id = "b";
    p.expected = coeff(rng);
    p.up_half_width = sparse(rng) ? 0.0 : width(rng);
    p.down_half_width = width(rng) + 1e-3;
    params.push_back(p);
  }
  LinearConstraintSystem sys;
  for (const auto& p : params) sys.parameter_ids.push_back(p.id);
  for (std::size_t j = 0; j < rows; ++j) {
    ConstraintRow row;
    row.label = "r" + std::to_string(100 + j);
    for (std::size_t i = 0; i < n; ++i) row.coeff.push_back(sparse(rng) ? 0.0 : coeff(rng));
    row.slack = slack(rng);
    sys.rows.push_back(std::move(row));
  }
  return {std::move(sys), UncertaintyModel(std::move(params))};
}

/// All directions with entries in {-1, 0, 1} and at least one saturated entry.
inline std::vector<Direction> vertex_directions(std::size_t n) {
  std::vector<Direction> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<double> d(n);
    std::size_t c = code;
    bool saturated = false;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = static_cast<double>(c % 3) - 1.0;
      saturated = saturated || d[i] != 0.0;
      c /= 3;
    }
    if (saturated) out.emplace_back(std::move(d));
  }
  return out;
}

/// Point X_expected + beta * psi(d) in parameter space.
inline std::vector<double> point_along(const UncertaintyModel& unc, const Direction& d,
                                       double beta) {
  std::vector<double> x(unc.size());
  for (std::size_t i = 0; i < unc.size(); ++i) {
    const auto& p = unc[i];
    const double excursion = d[i] >= 0.0 ? d[i] * p.up_half_width : d[i] * p.down_half_width;
    x[i] = p.expected + beta * excursion;
  }
  return x;
}

/// Row-by-row feasibility of a parameter-space point.
inline bool feasible(const LinearConstraintSystem& sys, const UncertaintyModel& unc,
                     const std::vector<double>& x) {
  for (const auto& row : sys.rows) {
    double lhs = 0.0;
    for (std::size_t i = 0; i < unc.size(); ++i) lhs += row.coeff[i] * (x[i] - unc[i].expected);
    if (lhs > row.slack) return false;
  }
  return true;
}

/// Largest feasible step along d by bisection; returns `limit` if still feasible there.
inline double beta_by_bisection(const LinearConstraintSystem& sys, const UncertaintyModel& unc,
                                const Direction& d, double limit = 1e6) {
  if (feasible(sys, unc, point_along(unc, d, limit))) return limit;
  double lo = 0.0;
  double hi = limit;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(sys, unc, point_along(unc, d, mid))) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

/// Ray-casting point-in-polygon test; the polygon is closed (last == first).
inline bool inside_polygon(const std::vector<RegionPoint>& poly, double px, double py) {
  bool inside = false;
  for (std::size_t i = 0, j = poly.size() - 2; i + 1 < poly.size(); j = i++) {
    const double xi = poly[i].first, yi = poly[i].second;
    const double xj = poly[j].first, yj = poly[j].second;
    if ((yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi) inside = !inside;
  }
  return inside;
}

}  // namespace flexgrid::testing
