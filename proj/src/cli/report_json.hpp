#pragma once

#include <json.hpp>

#include "prioq/des.hpp"
#include "prioq/erlang_loss.hpp"
#include "prioq/measures.hpp"

namespace prioq::cli {

nlohmann::json to_json(const SystemParams& params);
nlohmann::json to_json(const StabilityReport<double>& report);
nlohmann::json to_json(const PerformanceReport<double>& report);
nlohmann::json to_json(const Estimate& estimate);
/// Per-replication raw statistics are omitted; occupancy matrices are optional.
nlohmann::json to_json(const SimReport& report, bool include_occupancy);

}  // namespace prioq::cli
