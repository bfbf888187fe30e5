#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flexgrid/gridmodel.hpp"
#include "flexgrid/powerflow.hpp"

namespace flexgrid {

enum class SensitivityMethod { model_based, model_less };
enum class Execution { serial, parallel };

std::string_view to_string(SensitivityMethod m);
SensitivityMethod sensitivity_method_from_string(std::string_view text);

/// Below this anchor current magnitude a branch row is linearized on the
/// real part of the from-end current instead of its magnitude.
inline constexpr double kNearZeroCurrent = 1e-4;

/// Linear sensitivities of bus voltages and branch currents to load-positive
/// nodal P and Q, around one anchor operating point.
struct SensitivitySet {
  SensitivityMethod method = SensitivityMethod::model_based;
  std::vector<std::string> bus_ids;
  std::vector<std::string> branch_ids;
  Eigen::MatrixXd k_vp;  // buses x buses
  Eigen::MatrixXd k_vq;
  Eigen::MatrixXd k_ip;  // branches x buses
  Eigen::MatrixXd k_iq;
  std::vector<bool> voltage_row_available;
  std::vector<bool> current_row_available;
  std::vector<bool> current_row_near_zero;
  /// Regression conditioning per row (voltage rows then current rows); model_less only.
  std::vector<double> row_condition;
  std::optional<Timestamp> anchor_timestamp;
  std::size_t window = 0;
  double ridge = 0.0;
  double step = 0.0;
};

/// Central finite differences around the power-flow oracle: every P_n and Q_n
/// of a non-slack bus is perturbed by +/- step and re-solved.
SensitivitySet sensitivities_model_based(const GridModel& grid, const OperatingPoint& point,
                                         double step = 1e-4,
                                         Execution execution = Execution::parallel,
                                         const PowerFlowOptions& options = {});

struct ModelLessOptions {
  std::size_t window = 0;  // 0 selects 4x the regressor count
  /// Relative to the mean diagonal of the normal matrix.
  double ridge = 1e-8;
  double max_condition = 1e8;
};

/// Number of columns in the model-less design matrix (P and Q of every non-slack bus).
std::size_t model_less_regressor_count(const GridModel& grid);

/// Ridge regression of consecutive-frame voltage/current deltas on P/Q deltas over
/// the trailing `window` frames. Uses measured V/I only; unmonitored rows are
/// left zero and flagged unavailable.
/// Throws InsufficientDataError, IllConditionedError.
SensitivitySet sensitivities_model_less(const GridModel& grid,
                                        std::span<const MeasurementFrame> frames,
                                        const ModelLessOptions& options = {});

}  // namespace flexgrid
