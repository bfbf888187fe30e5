#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flexgrid/flexcore.hpp"
#include "flexgrid/gridmodel.hpp"
#include "flexgrid/powerflow.hpp"
#include "flexgrid/sensitivity.hpp"
#include "flexgrid/timeseries.hpp"

namespace flexgrid {

using Json = nlohmann::ordered_json;

Json to_json(const OperatingPoint& point, const GridModel& grid);

/// Matrices are row-major arrays; row and column order follow bus_ids/branch_ids.
Json to_json(const SensitivitySet& sens);

/// F is null when unbounded ("F_unbounded": true).
Json to_json(const FlexibilityResult& result, std::optional<Timestamp> timestamp);

Json to_json(const SlotReport& report);

Json to_json(std::span<const RegionPoint> polygon);

std::string region_to_csv(std::span<const RegionPoint> polygon);

}  // namespace flexgrid
