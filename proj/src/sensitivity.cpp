#include "flexgrid/sensitivity.hpp"

#include <cmath>
#include <limits>

#include "flexgrid/errors.hpp"

namespace flexgrid {

std::string_view to_string(SensitivityMethod m) {
  return m == SensitivityMethod::model_based ? "model_based" : "model_less";
}

SensitivityMethod sensitivity_method_from_string(std::string_view text) {
  if (text == "model_based") return SensitivityMethod::model_based;
  if (text == "model_less") return SensitivityMethod::model_less;
  throw ValidationError("unknown sensitivity method '" + std::string(text) + "'");
}

namespace {

SensitivitySet empty_set(const GridModel& grid, SensitivityMethod method) {
  SensitivitySet s;
  s.method = method;
  for (const Bus& b : grid.buses()) s.bus_ids.push_back(b.id);
  for (const Branch& br : grid.branches()) s.branch_ids.push_back(br.id);
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  const auto m = static_cast<Eigen::Index>(grid.branch_count());
  s.k_vp = Eigen::MatrixXd::Zero(n, n);
  s.k_vq = Eigen::MatrixXd::Zero(n, n);
  s.k_ip = Eigen::MatrixXd::Zero(m, n);
  s.k_iq = Eigen::MatrixXd::Zero(m, n);
  s.voltage_row_available.assign(grid.bus_count(), false);
  s.current_row_available.assign(grid.branch_count(), false);
  s.current_row_near_zero.assign(grid.branch_count(), false);
  return s;
}

double current_observable(const OperatingPoint& op, std::size_t branch, bool near_zero) {
  return near_zero ? op.i_from[branch].real() : op.i_mag[branch];
}

// One finite-difference column: perturbation of P (quantity 0) or Q (quantity 1) at `bus`.
void fill_column(const GridModel& grid, SensitivitySet& s, const std::vector<bool>& near_zero,
                 std::vector<double> p, std::vector<double> q, std::size_t bus, int quantity,
                 double step, const PowerFlowOptions& options) {
  std::vector<double>& target = quantity == 0 ? p : q;
  const double base = target[bus];
  target[bus] = base + step;
  const OperatingPoint plus = solve_power_flow(grid, p, q, options);
  target[bus] = base - step;
  const OperatingPoint minus = solve_power_flow(grid, p, q, options);

  Eigen::MatrixXd& kv = quantity == 0 ? s.k_vp : s.k_vq;
  Eigen::MatrixXd& ki = quantity == 0 ? s.k_ip : s.k_iq;
  const auto col = static_cast<Eigen::Index>(bus);
  for (std::size_t m = 0; m < grid.bus_count(); ++m) {
    kv(static_cast<Eigen::Index>(m), col) = (plus.v_mag[m] - minus.v_mag[m]) / (2.0 * step);
  }
  for (std::size_t l = 0; l < grid.branch_count(); ++l) {
    ki(static_cast<Eigen::Index>(l), col) =
        (current_observable(plus, l, near_zero[l]) - current_observable(minus, l, near_zero[l])) /
        (2.0 * step);
  }
}

}  // namespace

SensitivitySet sensitivities_model_based(const GridModel& grid, const OperatingPoint& point,
                                         double step, Execution execution,
                                         const PowerFlowOptions& options) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be positive");
  if (point.p.size() != grid.bus_count() || point.i_mag.size() != grid.branch_count()) {
    throw AnchorMismatchError("operating point does not match grid dimensions");
  }
  SensitivitySet s = empty_set(grid, SensitivityMethod::model_based);
  s.anchor_timestamp = point.timestamp;
  s.step = step;
  s.voltage_row_available.assign(grid.bus_count(), true);
  s.current_row_available.assign(grid.branch_count(), true);
  for (std::size_t l = 0; l < grid.branch_count(); ++l) {
    s.current_row_near_zero[l] = point.i_mag[l] < kNearZeroCurrent;
  }

  std::vector<std::size_t> columns;
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    if (b != grid.slack_index()) columns.push_back(b);
  }
  const auto jobs = static_cast<long>(2 * columns.size());

  if (execution == Execution::serial) {
    for (long j = 0; j < jobs; ++j) {
      fill_column(grid, s, s.current_row_near_zero, point.p, point.q,
                  columns[static_cast<std::size_t>(j / 2)], static_cast<int>(j % 2), step, options);
    }
    return s;
  }

  // Each job writes a distinct matrix column, so results match the serial path bit for bit.
  std::exception_ptr failure;
#if defined(FLEXGRID_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic)
#endif
  for (long j = 0; j < jobs; ++j) {
    try {
      fill_column(grid, s, s.current_row_near_zero, point.p, point.q,
                  columns[static_cast<std::size_t>(j / 2)], static_cast<int>(j % 2), step, options);
    } catch (...) {
#if defined(FLEXGRID_HAVE_OPENMP)
#pragma omp critical(flexgrid_sensitivity_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return s;
}

std::size_t model_less_regressor_count(const GridModel& grid) {
  return 2 * (grid.bus_count() - 1);
}

SensitivitySet sensitivities_model_less(const GridModel& grid,
                                        std::span<const MeasurementFrame> frames,
                                        const ModelLessOptions& options) {
  const std::size_t regressors = model_less_regressor_count(grid);
  const std::size_t window = options.window == 0 ? 4 * regressors : options.window;
  if (window < 2 * regressors) {
    throw InsufficientDataError("model-less window of " + std::to_string(window) +
                                " frames is below twice the " + std::to_string(regressors) +
                                " regressors");
  }
  if (frames.size() < window) {
    throw InsufficientDataError("model-less estimation needs " + std::to_string(window) +
                                " frames, got " + std::to_string(frames.size()));
  }
  if (!(options.ridge >= 0.0)) throw ValidationError("ridge weight must be nonnegative");
  const auto used = frames.subspan(frames.size() - window);

  SensitivitySet s = empty_set(grid, SensitivityMethod::model_less);
  s.anchor_timestamp = used.back().timestamp;
  s.window = window;
  s.ridge = options.ridge;

  std::vector<std::size_t> reg_bus;
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    if (b != grid.slack_index()) reg_bus.push_back(b);
  }
  std::vector<std::size_t> v_rows;
  for (std::size_t b = 0; b < grid.bus_count(); ++b) {
    if (b != grid.slack_index() && used.back().v_measured[b]) v_rows.push_back(b);
  }
  std::vector<std::size_t> i_rows;
  for (std::size_t l = 0; l < grid.branch_count(); ++l) {
    if (used.back().i_measured[l]) i_rows.push_back(l);
  }
  // The slack voltage is held by the transformer; its row is identically zero.
  s.voltage_row_available[grid.slack_index()] = true;

  const auto deltas = static_cast<Eigen::Index>(window - 1);
  const auto nreg = static_cast<Eigen::Index>(regressors);
  const auto nout = static_cast<Eigen::Index>(v_rows.size() + i_rows.size());
  Eigen::MatrixXd x(deltas + nreg, nreg);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(deltas + nreg, nout);
  x.setZero();
  for (Eigen::Index d = 0; d < deltas; ++d) {
    const MeasurementFrame& a = used[static_cast<std::size_t>(d)];
    const MeasurementFrame& b = used[static_cast<std::size_t>(d + 1)];
    for (std::size_t k = 0; k < reg_bus.size(); ++k) {
      const std::size_t bus = reg_bus[k];
      x(d, static_cast<Eigen::Index>(k)) = b.p[bus] - a.p[bus];
      x(d, static_cast<Eigen::Index>(reg_bus.size() + k)) = b.q[bus] - a.q[bus];
    }
    Eigen::Index col = 0;
    for (std::size_t bus : v_rows) {
      if (!a.v_measured[bus] || !b.v_measured[bus]) {
        throw InsufficientDataError("voltage at bus '" + grid.buses()[bus].id +
                                    "' is not measured in every frame of the window");
      }
      y(d, col++) = *b.v_measured[bus] - *a.v_measured[bus];
    }
    for (std::size_t l : i_rows) {
      if (!a.i_measured[l] || !b.i_measured[l]) {
        throw InsufficientDataError("current on branch '" + grid.branches()[l].id +
                                    "' is not measured in every frame of the window");
      }
      y(d, col++) = *b.i_measured[l] - *a.i_measured[l];
    }
  }
  if (x.topRows(deltas).cwiseAbs().maxCoeff() == 0.0) {
    throw InsufficientDataError("all injection deltas in the window are zero");
  }

  const Eigen::MatrixXd design = x.topRows(deltas);
  // The ridge weight is relative to the mean diagonal of the normal matrix, so the
  // regularization does not depend on the excitation amplitude.
  const Eigen::MatrixXd gram = design.transpose() * design;
  const double lambda = options.ridge * gram.trace() / static_cast<double>(nreg);
  const Eigen::MatrixXd normal = gram + lambda * Eigen::MatrixXd::Identity(nreg, nreg);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition <= options.max_condition)) {
    throw IllConditionedError("model-less regression is ill-conditioned (condition number " +
                                  std::to_string(condition) + ")",
                              condition);
  }

  // Ridge as the augmented least-squares problem [X; sqrt(lambda) I] k = [y; 0].
  x.bottomRows(nreg) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(nreg, nreg);
  const Eigen::MatrixXd coef = x.colPivHouseholderQr().solve(y);  // nreg x nout

  s.row_condition.assign(grid.bus_count() + grid.branch_count(),
                         std::numeric_limits<double>::quiet_NaN());
  Eigen::Index col = 0;
  for (std::size_t bus : v_rows) {
    for (std::size_t k = 0; k < reg_bus.size(); ++k) {
      const auto c = static_cast<Eigen::Index>(reg_bus[k]);
      s.k_vp(static_cast<Eigen::Index>(bus), c) = coef(static_cast<Eigen::Index>(k), col);
      s.k_vq(static_cast<Eigen::Index>(bus), c) =
          coef(static_cast<Eigen::Index>(reg_bus.size() + k), col);
    }
    s.voltage_row_available[bus] = true;
    s.row_condition[bus] = condition;
    ++col;
  }
  for (std::size_t l : i_rows) {
    for (std::size_t k = 0; k < reg_bus.size(); ++k) {
      const auto c = static_cast<Eigen::Index>(reg_bus[k]);
      s.k_ip(static_cast<Eigen::Index>(l), c) = coef(static_cast<Eigen::Index>(k), col);
      s.k_iq(static_cast<Eigen::Index>(l), c) =
          coef(static_cast<Eigen::Index>(reg_bus.size() + k), col);
    }
    s.current_row_available[l] = true;
    s.current_row_near_zero[l] = *used.back().i_measured[l] < kNearZeroCurrent;
    s.row_condition[grid.bus_count() + l] = condition;
    ++col;
  }
  return s;
}

}  // namespace flexgrid
