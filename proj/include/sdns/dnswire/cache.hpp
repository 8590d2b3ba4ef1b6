#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sdns/dnswire/message.hpp"

namespace sdns::dns {

struct CacheKey {
    std::string qname;
    std::uint16_t qtype = static_cast<std::uint16_t>(RecordType::A);

    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

struct CacheEntry {
    CacheKey key;
    std::vector<ResourceRecord> records;
    VirtualTime inserted_at{0};
    std::uint32_t ttl_max = 0;

    VirtualTime expires_at() const { return inserted_at + std::chrono::seconds(ttl_max); }
    /// Whole seconds left before expiry, clamped at zero.
    std::uint32_t remaining_ttl(VirtualTime now) const;
    bool live_at(VirtualTime now) const { return now < expires_at(); }
};

/// TTL-aware record cache keyed by (qname, qtype). Expired entries are
/// dropped lazily when read. Safe for concurrent use.
class RecordCache {
public:
    /// The entry if `now < expires_at`; records carry the remaining TTL.
    std::optional<CacheEntry> get(const CacheKey& key, VirtualTime now);

    /// Stores `records` unless a live entry already exists for `key`.
    /// Returns true when the entry was (re)inserted. Throws on ttl_max == 0.
    bool put(const CacheKey& key, std::vector<ResourceRecord> records, std::uint32_t ttl_max, VirtualTime now);

    /// Read-only peek that does not evict; for introspection in tests and sims.
    std::optional<CacheEntry> peek(const CacheKey& key) const;

    /// Digest over the entries live at `now` (key, insertion time, TTL, rdata).
    std::uint64_t digest(VirtualTime now) const;

    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<CacheKey, CacheEntry> entries_;
};

}  // namespace sdns::dns
