#ifndef QCONTACT_CONFIG_HPP
#define QCONTACT_CONFIG_HPP

#include <filesystem>

#include "qcontact/models.hpp"

#include <json.hpp>

namespace qcontact {

// JSON model configuration; schema documented in docs/config-schema.md.
// Exactly one of "builtin" / inline expressions must be present.
ModelConfig config_from_json(const nlohmann::json& j);

ModelConfig load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const ModelConfig& config);

// Stable FNV-1a digest of the canonical serialized config.
std::string config_digest(const ModelConfig& config);

} // namespace qcontact

#endif // QCONTACT_CONFIG_HPP
