#pragma once

#include <json.hpp>

#include "adapt/algorithms.hpp"
#include "adapt/bounds.hpp"
#include "adapt/discrepancy.hpp"

namespace adapt {

nlohmann::json to_json(const LinearHypothesis& h);
LinearHypothesis hypothesis_from_json(const nlohmann::json& j);

nlohmann::json to_json(const algorithms::FitResult& fit);
algorithms::FitResult fit_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const discrepancy::DiscrepancyEstimate& est);

nlohmann::json to_json(const bounds::BoundReport& report);

/// Flat one-line CSV rendering of a bound report: name,value pairs then total.
std::string bound_report_csv(const bounds::BoundReport& report);

} // namespace adapt
