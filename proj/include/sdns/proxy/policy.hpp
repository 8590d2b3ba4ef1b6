#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sdns/proxy/destination.hpp"
#include "sdns/resolver/channel_table.hpp"

namespace sdns::proxy {

enum class AuthMode { IpAllowlist, Open };

/// Relay only to names in the provider's channel table.
struct ChannelOnly {
    resolver::ChannelTable table;
};
/// Relay to any destination.
struct Universal {};
using Authorization = std::variant<ChannelOnly, Universal>;

struct ProxyPolicy {
    AuthMode http_auth = AuthMode::IpAllowlist;
    AuthMode sni_auth = AuthMode::IpAllowlist;
    Authorization authz = Universal{};
    std::string banner_text;

    AuthMode auth_for(Protocol p) const { return p == Protocol::HttpHost ? http_auth : sni_auth; }
};

enum class DenyReason { Unauthenticated, UnsupportedChannel };

struct Decision {
    bool allowed = false;
    DenyReason reason = DenyReason::Unauthenticated;

    static Decision allow() { return {true, DenyReason::Unauthenticated}; }
    static Decision deny(DenyReason r) { return {false, r}; }
    friend bool operator==(const Decision&, const Decision&) = default;
};

/// Authorization alone: does this policy relay to the claimed host at all?
/// Independent of who is asking.
bool destination_permitted(const ProxyPolicy& policy, const DestinationClaim& claim);

/// Authentication (per-protocol mode) first, then authorization.
Decision authorize(const ProxyPolicy& policy, const DestinationClaim& claim, Ipv4 src,
                   const resolver::CustomerRegistry& registry);

/// The fixed 200 response a proxy serves to requests it will not relay.
std::vector<std::uint8_t> banner(const ProxyPolicy& policy);

const char* to_string(DenyReason r);

}  // namespace sdns::proxy
