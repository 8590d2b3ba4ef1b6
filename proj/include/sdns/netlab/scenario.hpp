#pragma once

// Scenario documents: a topology, the services running on it, and a timed
// script of actions, all in one JSON file.

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "json.hpp"
#include "sdns/netlab/world.hpp"

namespace sdns::netlab {

/// A script names a node, provider or action that does not exist.
class ScriptError : public Error {
public:
    using Error::Error;
};

struct ScriptAction {
    VirtualTime at{0};
    std::string op;
    nlohmann::json args;
};

struct Scenario {
    nlohmann::json document;
    Topology topology;
    std::vector<ScriptAction> script;
    std::optional<VirtualTime> horizon;
};

/// Throws ConfigError on schema violations.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

resolver::ResolverPolicy parse_resolver_policy(const nlohmann::json& j);
/// Channel pools may name nodes or give IPv4 literals.
resolver::ChannelTable parse_channels(const nlohmann::json& j, const Topology& topo);
proxy::ProxyPolicy parse_proxy_policy(const nlohmann::json& j, const resolver::ChannelTable& channels);

/// Instantiates every service the document declares.
std::unique_ptr<World> build_world(const Scenario& scenario, std::uint64_t seed, LogMode mode = LogMode::Full);

/// Validates every reference first (ScriptError), then schedules the actions.
void schedule_script(World& world, const std::vector<ScriptAction>& script, std::uint64_t seed);

/// Builds the world, runs the script to quiescence (or the horizon) and
/// returns the log.
EventLog run_scenario(const Scenario& scenario, std::uint64_t seed, LogMode mode = LogMode::Full);

}  // namespace sdns::netlab
