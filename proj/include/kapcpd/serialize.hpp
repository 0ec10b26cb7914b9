#pragma once

#include <json.hpp>

#include "kapcpd/inference.hpp"
#include "kapcpd/scan.hpp"
#include "kapcpd/segmentation.hpp"

namespace kapcpd {

/// {method, p_value, tau_hat, s_star, components?, elapsed_ms, ...}
nlohmann::json to_json(const TestOutcome& outcome);

/// {change_points: [{start, end, tau, p_value}], trace}
nlohmann::json to_json(const SegmentationResult& result);

}  // namespace kapcpd
