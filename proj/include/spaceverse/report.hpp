#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "spaceverse/orchestrator.hpp"

namespace spaceverse {

// Shortest round-trip decimal form of a double; stable across runs.
std::string format_double(double v);

// Fixed columns, one row per sample; documented in the README.
std::string traces_csv(const std::vector<SampleTrace>& traces);

std::string contact_report_csv(
    const std::vector<OrbitSpec>& sats,
    const std::vector<GroundStationSpec>& stations,
    const std::vector<std::vector<std::vector<ContactWindow>>>& windows);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string mask_csv(const std::vector<MaskRow>& rows);

nlohmann::ordered_json metrics_json(const ScenarioMetrics& metrics,
                                    const ScenarioConfig& cfg);

void write_file(const std::string& path, const std::string& content);

}  // namespace spaceverse
