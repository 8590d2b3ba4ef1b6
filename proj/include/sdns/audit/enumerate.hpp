#pragma once

// Client enumeration: learn which IPs are registered with a smart DNS
// provider by forging queries from them and watching an authoritative log.

#include <span>
#include <string>
#include <vector>

#include "sdns/netlab/world.hpp"

namespace sdns::audit {

enum class Verdict { Registered, Unregistered, Indeterminate };
const char* to_string(Verdict v);

enum class EnumerationVariant {
    /// Nonces under a domain the attacker serves; seen upstream iff the
    /// resolver treats the claimed source as a customer.
    ThirdParty,
    /// Nonces under a channel the attacker operates; customers get a proxy
    /// answer, so the nonce reaches upstream only for non-customers.
    ChannelOperator,
};

struct EnumerationVerdict {
    Ipv4 candidate;
    Verdict verdict = Verdict::Indeterminate;
    std::string nonce_name;
    bool nonce_observed = false;
};

struct EnumerationConfig {
    std::string attacker_node;  // must be able to spoof
    Ipv4 resolver;
    std::string domain;  // attacker domain, or the channel suffix
    EnumerationVariant variant = EnumerationVariant::ThirdParty;
    VirtualTime spacing = std::chrono::milliseconds(1);  // between forged queries
    VirtualTime wait = std::chrono::seconds(2);          // after the last one
    std::uint64_t seed = 0;
    std::uint32_t attempt = 0;  // retries draw fresh nonces
};

/// Forges one query per candidate, runs the simulator through the wait
/// window, then reads the authoritative server's log for `domain`.
std::vector<EnumerationVerdict> enumerate_clients(netlab::World& world, const EnumerationConfig& config,
                                                  std::span<const Ipv4> candidates);

/// Seconds needed to probe `num_ips` addresses at `rate_per_second`.
double enumeration_duration(double num_ips, double rate_per_second);

}  // namespace sdns::audit
