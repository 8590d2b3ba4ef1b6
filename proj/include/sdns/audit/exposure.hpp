#pragma once

// How many autonomous systems see a client's DNS traffic on its way to a
// resolver.

#include <span>
#include <vector>

#include "sdns/netlab/topology.hpp"

namespace sdns::audit {

/// Distinct AS labels among the hops after `src` on the routed path, the
/// destination included. Throws netlab::NoPath.
std::size_t path_exposure(const netlab::Topology& topo, netlab::NodeId src, netlab::NodeId dst);

struct ExposureSummary {
    double public_avg = 0;
    double sdns_avg = 0;
    double increase_pct = 0;
};

ExposureSummary compare_exposure(const netlab::Topology& topo, std::span<const netlab::NodeId> clients,
                                 netlab::NodeId public_resolver, netlab::NodeId sdns_resolver);

struct ExposureFixture {
    netlab::Topology topology;
    std::vector<netlab::NodeId> clients;
    netlab::NodeId public_resolver = 0;
    netlab::NodeId sdns_resolver = 0;
};

/// Clients each with their own transit chains to a public and a smart DNS
/// resolver. Chain lengths are chosen so the per-client exposure averages
/// the targets (exact when target * clients is an integer); which clients
/// get the longer chains depends on the seed.
ExposureFixture calibrated_exposure_topology(std::size_t clients, double public_avg, double sdns_avg,
                                             std::uint64_t seed);

}  // namespace sdns::audit
