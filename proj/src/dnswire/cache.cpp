#include "sdns/dnswire/cache.hpp"

#include <chrono>

namespace sdns::dns {

std::uint32_t CacheEntry::remaining_ttl(VirtualTime now) const {
    auto left = expires_at() - now;
    if (left <= VirtualTime::zero()) return 0;
    return static_cast<std::uint32_t>(std::chrono::duration_cast<std::chrono::seconds>(left).count());
}

std::optional<CacheEntry> RecordCache::get(const CacheKey& key, VirtualTime now) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    if (!it->second.live_at(now)) {
        entries_.erase(it);
        return std::nullopt;
    }
    CacheEntry out = it->second;
    std::uint32_t left = out.remaining_ttl(now);
    for (auto& rr : out.records) rr.ttl = left;
    return out;
}

bool RecordCache::put(const CacheKey& key, std::vector<ResourceRecord> records, std::uint32_t ttl_max,
                      VirtualTime now) {
    if (ttl_max == 0) throw Error("cache put requires ttl_max > 0");
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end() && it->second.live_at(now)) return false;
    for (auto& rr : records) rr.ttl = ttl_max;
    entries_.insert_or_assign(key, CacheEntry{key, std::move(records), now, ttl_max});
    return true;
}

std::optional<CacheEntry> RecordCache::peek(const CacheKey& key) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t RecordCache::digest(VirtualTime now) const {
    std::lock_guard lock(mu_);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [key, e] : entries_) {
        if (!e.live_at(now)) continue;
        h = fnv1a64(key.qname, h);
        h = splitmix64(h ^ key.qtype ^ (static_cast<std::uint64_t>(e.ttl_max) << 16));
        h = splitmix64(h ^ static_cast<std::uint64_t>(e.inserted_at.count()));
        for (const auto& rr : e.records) {
            if (rr.is_a()) h = splitmix64(h ^ rr.address().value());
        }
    }
    return h;
}

std::size_t RecordCache::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

}  // namespace sdns::dns
