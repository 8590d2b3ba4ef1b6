#include "sdns/proxy/policy.hpp"

namespace sdns::proxy {

bool destination_permitted(const ProxyPolicy& policy, const DestinationClaim& claim) {
    if (const auto* only = std::get_if<ChannelOnly>(&policy.authz)) return only->table.find(claim.hostname) != nullptr;
    return true;
}

Decision authorize(const ProxyPolicy& policy, const DestinationClaim& claim, Ipv4 src,
                   const resolver::CustomerRegistry& registry) {
    if (policy.auth_for(claim.protocol) == AuthMode::IpAllowlist && !registry.contains(src))
        return Decision::deny(DenyReason::Unauthenticated);
    if (!destination_permitted(policy, claim)) return Decision::deny(DenyReason::UnsupportedChannel);
    return Decision::allow();
}

std::vector<std::uint8_t> banner(const ProxyPolicy& policy) {
    std::string head = "HTTP/1.1 200 OK\r\nContent-Type: text/html; charset=utf-8\r\nContent-Length: " +
                       std::to_string(policy.banner_text.size()) + "\r\nConnection: close\r\n\r\n";
    std::vector<std::uint8_t> out(head.begin(), head.end());
    out.insert(out.end(), policy.banner_text.begin(), policy.banner_text.end());
    return out;
}

const char* to_string(DenyReason r) {
    return r == DenyReason::Unauthenticated ? "unauthenticated" : "unsupported_channel";
}

}  // namespace sdns::proxy
