#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sdns/netlab/world.hpp"

namespace sdns::netlab {

struct TrafficSpec {
    std::string client;  // node name
    std::string hostname;
    double rate_per_hour = 0;
    VirtualTime start{0};
    VirtualTime duration{0};
    /// false: resolve only, skipping the HTTP fetch.
    bool fetch = true;
    bool https = true;
};

/// Arrival times of a Poisson process on [start, start + duration).
std::vector<VirtualTime> poisson_arrivals(double rate_per_hour, VirtualTime start, VirtualTime duration,
                                          std::mt19937_64& rng);

/// Schedules one resolve-then-fetch per arrival on the client's configured
/// resolver. The stream is seeded from (seed, client, hostname), so clients
/// sharing a seed still draw independent arrivals. Returns the arrival times.
std::vector<VirtualTime> poisson_traffic(World& world, const TrafficSpec& spec, std::uint64_t seed);

}  // namespace sdns::netlab
