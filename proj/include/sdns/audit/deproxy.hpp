#pragma once

// De-proxying: a page that makes the browser fetch an image by IP literal,
// bypassing DNS and hence the smart DNS proxy, then pairing the two requests.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdns/netlab/world.hpp"

namespace sdns::audit {

/// HTML embedding https://<origin_ip>/image.jpg?<session_id>.
/// Throws sdns::Error on an empty session id.
std::string build_deproxy_page(Ipv4 origin_ip, std::string_view session_id);

struct DeproxyFinding {
    std::string session_id;
    std::optional<Ipv4> hostname_request_ip;
    std::optional<Ipv4> literal_request_ip;
    /// nullopt when the session lacks one of the two requests.
    std::optional<bool> sdns;

    bool indeterminate() const { return !sdns.has_value(); }
};

/// Pairs the hostname-addressed page request with the IP-literal image
/// request of each session; flags sessions whose two requesters sit in
/// different autonomous systems.
std::vector<DeproxyFinding> detect_deproxy(std::span<const netlab::AccessLogEntry> log, const netlab::Topology& topo);

}  // namespace sdns::audit
