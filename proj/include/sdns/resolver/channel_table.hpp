#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sdns/core.hpp"

namespace sdns::resolver {

struct ChannelEntry {
    std::string suffix;  // "" matches every name (proxy-everything providers)
    std::vector<Ipv4> proxy_pool;
    bool advertised = true;
    std::optional<std::uint32_t> answer_ttl;  // falls back to the resolver default
};

/// Domain suffixes a provider proxies ("channels") and their proxy pools.
class ChannelTable {
public:
    ChannelTable() = default;
    explicit ChannelTable(std::vector<ChannelEntry> entries);

    /// Throws sdns::Error on an empty pool or a duplicate suffix.
    void add(ChannelEntry entry);

    /// Longest label-aligned suffix matching `qname`.
    const ChannelEntry* find(std::string_view qname) const;
    std::optional<std::string> match(std::string_view qname) const;

    const std::map<std::string, ChannelEntry>& entries() const { return entries_; }
    std::vector<std::string> advertised_suffixes() const;
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, ChannelEntry> entries_;
};

/// Label-aligned suffix test: "netflix.com" covers "www.netflix.com" but not
/// "notnetflix.com".
bool suffix_matches(std::string_view qname, std::string_view suffix);

inline std::optional<std::string> is_channel(const ChannelTable& table, std::string_view qname) {
    return table.match(qname);
}

/// Registered customer IPs. Membership is the provider's only credential.
class CustomerRegistry {
public:
    CustomerRegistry() = default;
    explicit CustomerRegistry(std::set<Ipv4> ips) : ips_(std::move(ips)) {}

    void add(Ipv4 ip);
    void remove(Ipv4 ip);
    bool contains(Ipv4 ip) const;
    std::set<Ipv4> snapshot() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::set<Ipv4> ips_;
};

}  // namespace sdns::resolver
