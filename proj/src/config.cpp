#include "qcontact/config.hpp"

#include <fstream>

namespace qcontact {

using nlohmann::json;

ModelConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    const bool has_builtin = j.contains("builtin");
    const bool has_exprs = j.contains("lagrangian") || j.contains("hamiltonian") ||
                           j.contains("coframe") || j.contains("reeb");
    if (has_builtin == has_exprs)
        throw ConfigError("config must contain exactly one of 'builtin' or inline expressions");

    ModelConfig config;
    if (has_builtin) {
        config = builtin_model(j.at("builtin").get<std::string>());
    } else {
        std::string kind = j.value("kind", std::string());
        if (kind == "lagrangian") config.kind = ModelConfig::Kind::Lagrangian;
        else if (kind == "hamiltonian-structure") config.kind = ModelConfig::Kind::HamiltonianStructure;
        else throw ConfigError("config 'kind' must be 'lagrangian' or 'hamiltonian-structure'");

        if (!j.contains("n") || !j.contains("qcount"))
            throw ConfigError("config needs integer fields 'n' and 'qcount'");
        config.n = j.at("n").get<int>();
        config.qcount = j.at("qcount").get<int>();
        if (config.n < 1 || config.qcount < 1)
            throw ConfigError("config needs n >= 1 and qcount >= 1");

        if (config.kind == ModelConfig::Kind::Lagrangian) {
            config.lagrangian = j.value("lagrangian", std::string());
            if (config.lagrangian.empty())
                throw ConfigError("lagrangian config needs a 'lagrangian' expression");
        } else {
            config.hamiltonian = j.value("hamiltonian", std::string());
            if (!j.contains("coframe") || !j.contains("reeb"))
                throw ConfigError("structure config needs 'coframe' and 'reeb' arrays");
            config.coframe = j.at("coframe").get<std::vector<std::vector<std::string>>>();
            config.reeb = j.at("reeb").get<std::vector<std::vector<std::string>>>();
        }
    }

    if (j.contains("params"))
        for (const auto& [name, value] : j.at("params").items())
            config.params[name] = value.get<double>();
    if (j.contains("initial")) config.initial = j.at("initial").get<std::vector<double>>();
    if (j.contains("horizon")) config.horizon = j.at("horizon").get<double>();
    return config;
}

ModelConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
    }
    try {
        return config_from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("invalid config in '" + path.string() + "': " + e.what());
    }
}

json config_to_json(const ModelConfig& config) {
    json j;
    if (!config.builtin.empty()) j["builtin"] = config.builtin;
    j["kind"] = config.kind == ModelConfig::Kind::Lagrangian ? "lagrangian"
                                                             : "hamiltonian-structure";
    j["n"] = config.n;
    j["qcount"] = config.qcount;
    if (!config.lagrangian.empty()) j["lagrangian"] = config.lagrangian;
    if (!config.hamiltonian.empty()) j["hamiltonian"] = config.hamiltonian;
    if (!config.coframe.empty()) j["coframe"] = config.coframe;
    if (!config.reeb.empty()) j["reeb"] = config.reeb;
    if (!config.params.empty()) j["params"] = config.params;
    if (!config.initial.empty()) j["initial"] = config.initial;
    j["horizon"] = config.horizon;
    return j;
}

std::string config_digest(const ModelConfig& config) {
    const std::string canon = config_to_json(config).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace qcontact
