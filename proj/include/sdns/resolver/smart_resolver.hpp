#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdns/dnswire/cache.hpp"
#include "sdns/dnswire/message.hpp"
#include "sdns/resolver/channel_table.hpp"

namespace sdns::resolver {

/// Non-customers get the same resolution as customers.
struct ResolveCorrectly {
    friend bool operator==(ResolveCorrectly, ResolveCorrectly) = default;
};
/// Non-customers get a fixed address for every name (ibVPN).
struct StaticIp {
    Ipv4 address;
    friend bool operator==(StaticIp, StaticIp) = default;
};
/// Non-customers get no response at all (VPNUK).
struct Drop {
    friend bool operator==(Drop, Drop) = default;
};
using NonCustomerMode = std::variant<ResolveCorrectly, StaticIp, Drop>;

enum class Mitigation {
    None,
    /// Names outside the channel table resolve correctly for everyone.
    ResolveUnsupportedCorrectly,
    /// As above, and channel names are also recursed upstream (result
    /// discarded) before the proxy answer is produced.
    ResolveAllCorrectlyProxyChannels,
};

struct ResolverPolicy {
    NonCustomerMode non_customer_mode = ResolveCorrectly{};
    Mitigation mitigation = Mitigation::None;
    std::uint32_t answer_ttl_default = 300;
};

struct ResolverConfig {
    ChannelTable channels;
    ResolverPolicy policy;
};

/// What an upstream (authoritative) lookup produced. `ttl` is the zone's
/// TTL_max for the name.
struct UpstreamAnswer {
    dns::Rcode rcode = dns::Rcode::NoError;
    std::vector<dns::ResourceRecord> records;
    std::uint32_t ttl = 0;
};

class Upstream {
public:
    virtual ~Upstream() = default;
    /// nullopt when the authoritative side is unreachable.
    virtual std::optional<UpstreamAnswer> lookup(const dns::Question& q, Ipv4 resolver_ip, VirtualTime now) = 0;
};

/// Deterministic round-robin over a proxy pool, one counter per (pool, qname).
class ProxySelector {
public:
    Ipv4 select(const std::vector<Ipv4>& pool, std::string_view qname);

private:
    std::mutex mu_;
    std::map<std::pair<std::uint64_t, std::string>, std::size_t> counters_;
};

/// The smart DNS resolver: IP-authenticated, channel-aware resolution.
class SmartResolver {
public:
    struct Stats {
        std::uint64_t queries = 0;
        std::uint64_t dropped = 0;
        std::uint64_t upstream_lookups = 0;
        std::uint64_t proxy_answers = 0;
        std::uint64_t referrals = 0;
    };

    SmartResolver(ResolverConfig config, std::shared_ptr<CustomerRegistry> registry, Upstream& upstream,
                  Ipv4 own_ip = Ipv4{});

    /// The response to send back to `src`, or nullopt for silence.
    std::optional<dns::DnsMessage> resolve(const dns::DnsMessage& req, Ipv4 src, VirtualTime now);

    /// Swaps in a new channel table and policy; in-flight queries keep the old one.
    void reconfigure(ResolverConfig config);
    std::shared_ptr<const ResolverConfig> config() const;

    CustomerRegistry& registry() { return *registry_; }
    dns::RecordCache& recursive_cache() { return recursive_cache_; }
    dns::RecordCache& channel_cache() { return channel_cache_; }
    /// Combined digest of both caches over entries live at `now`.
    std::uint64_t cache_digest(VirtualTime now) const;
    Stats stats() const;

    static std::vector<dns::ResourceRecord> root_referral();

private:
    dns::DnsMessage recursive_answer(const dns::DnsMessage& req, VirtualTime now);
    dns::DnsMessage channel_answer(const ResolverConfig& cfg, const ChannelEntry& channel, const dns::DnsMessage& req,
                                   VirtualTime now);
    dns::DnsMessage static_answer(const ResolverConfig& cfg, const dns::DnsMessage& req, Ipv4 address);
    dns::DnsMessage referral(const dns::DnsMessage& req);

    mutable std::mutex config_mu_;
    std::shared_ptr<const ResolverConfig> config_;
    std::shared_ptr<CustomerRegistry> registry_;
    Upstream& upstream_;
    Ipv4 own_ip_;
    dns::RecordCache recursive_cache_;
    dns::RecordCache channel_cache_;
    ProxySelector selector_;

    std::atomic<std::uint64_t> queries_{0};
    std::atomic<std::uint64_t> dropped_{0};
    std::atomic<std::uint64_t> upstream_lookups_{0};
    std::atomic<std::uint64_t> proxy_answers_{0};
    std::atomic<std::uint64_t> referrals_{0};
};

}  // namespace sdns::resolver
