#pragma once

// JSON mappings shared by the log format, the CLI and the HTTP service.

#include "json.hpp"
#include "stargen/campaign.hpp"

namespace stargen {

/// Manifest-schema mapping of one condition.
nlohmann::json to_json(const Condition& condition);
/// Schema checks only (no taxonomy validation); throws ValidationError.
Condition condition_from_json(const nlohmann::json& j, const std::string& where = "");

nlohmann::json to_json(const CampaignConfig& config);
/// Strict: unknown or missing fields and bad types throw Error(InvalidConfig).
CampaignConfig config_from_json(const nlohmann::json& j);

/// Trial payload as stored in the log, without seq/event/checksum/timestamp.
nlohmann::json to_json(const TrialRecord& trial);
nlohmann::json to_json(const ProgressCell& cell);

/// First 16 hex chars of SHA-256 over the compact sorted-key dump of `event`
/// with any "checksum" member removed.
std::string event_checksum(nlohmann::json event);

}  // namespace stargen
