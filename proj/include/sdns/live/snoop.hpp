#pragma once

// RD=0 cache probes against a real resolver, paced per hostname.

#include <chrono>
#include <mutex>
#include <random>

#include "sdns/audit/snoop.hpp"
#include "sdns/live/net.hpp"

namespace sdns::live {

/// Largest per-hostname probe rate that never probes faster than once per TTL_max.
double max_probe_rate_per_hour(std::uint32_t ttl_max);

class LiveSnooper {
public:
    /// Throws ConfigError when `rate_per_hour` exceeds max_probe_rate_per_hour(ttl_max)
    /// for the smallest ttl_max it will be used with.
    LiveSnooper(Endpoint resolver, double rate_per_hour, std::uint32_t min_ttl_max,
                std::chrono::milliseconds timeout = std::chrono::seconds(2));

    /// One probe. Returns nullopt when the limiter refuses it.
    std::optional<audit::ProbeRecord> probe(const std::string& hostname, std::uint32_t ttl_max);

    /// Seconds between probes of one hostname.
    double interval_seconds() const { return 3600.0 / rate_; }

private:
    Endpoint resolver_;
    double rate_;
    std::chrono::milliseconds timeout_;
    Fd sock_;
    std::mutex mu_;
    audit::ProbeRateLimiter limiter_;
    std::mt19937 ids_;
    std::chrono::steady_clock::time_point epoch_;
};

}  // namespace sdns::live
