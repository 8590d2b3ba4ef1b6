#pragma once

// Built-in scenario documents. Each is an ordinary scenario (nodes, links,
// zones, providers, script) plus an "audit" block naming the nodes and
// inputs the matching CLI command needs.

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sdns::presets {

std::vector<std::string> names();

/// Throws ConfigError for an unknown name. The seed drives any generated
/// content (candidate addresses, which candidates are registered).
nlohmann::json get(std::string_view name, std::uint64_t seed);

/// Proxy policy rows for the providers whose proxies were classified.
struct PolicyRow {
    const char* provider;
    const char* http_auth;
    const char* sni_auth;
    const char* authz;
};
const std::vector<PolicyRow>& classified_providers();

}  // namespace sdns::presets
