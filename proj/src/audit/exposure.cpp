#include "sdns/audit/exposure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

namespace sdns::audit {

using netlab::NodeId;
using netlab::Topology;

std::size_t path_exposure(const Topology& topo, NodeId src, NodeId dst) {
    auto route = topo.route(src, dst);
    if (!route)
        throw netlab::NoPath("no path from " + topo.node(src).name + " to " + topo.node(dst).name);
    std::set<std::uint32_t> ases;
    for (std::size_t i = 1; i < route->hops.size(); ++i) ases.insert(topo.node(route->hops[i]).as_number);
    return ases.size();
}

ExposureSummary compare_exposure(const Topology& topo, std::span<const NodeId> clients, NodeId public_resolver,
                                 NodeId sdns_resolver) {
    if (clients.empty()) throw Error("no clients to average over");
    double pub = 0;
    double sdns = 0;
    for (NodeId c : clients) {
        pub += static_cast<double>(path_exposure(topo, c, public_resolver));
        sdns += static_cast<double>(path_exposure(topo, c, sdns_resolver));
    }
    ExposureSummary s;
    s.public_avg = pub / static_cast<double>(clients.size());
    s.sdns_avg = sdns / static_cast<double>(clients.size());
    s.increase_pct = (s.sdns_avg - s.public_avg) / s.public_avg * 100.0;
    return s;
}

namespace {

constexpr std::uint32_t kPublicAs = 15169;
constexpr std::uint32_t kSdnsAs = 20473;
constexpr std::uint32_t kTransitBase = 64600;
constexpr std::uint32_t kTransitPool = 40;

/// Per-client exposure counts averaging `avg`: floor(avg) everywhere, plus
/// one for round(frac * n) clients chosen by `rng`.
std::vector<std::size_t> exposures(std::size_t n, double avg, std::mt19937_64& rng) {
    if (avg < 1) throw Error("average exposure must be at least 1");
    auto base = static_cast<std::size_t>(std::floor(avg));
    auto extra = static_cast<std::size_t>(std::llround((avg - std::floor(avg)) * static_cast<double>(n)));
    std::vector<std::size_t> out(n, base);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < extra && i < n; ++i) ++out[idx[i]];
    return out;
}

}  // namespace

ExposureFixture calibrated_exposure_topology(std::size_t clients, double public_avg, double sdns_avg,
                                             std::uint64_t seed) {
    if (clients == 0) throw Error("need at least one client");
    std::mt19937_64 rng(derive_seed(seed, "exposure"));
    ExposureFixture f;
    auto& topo = f.topology;
    std::uint32_t next_ip = Ipv4::from_string("10.0.0.1").value();
    auto add = [&](std::string name, std::uint32_t as, netlab::Role role) {
        return topo.add_node({std::move(name), Ipv4(next_ip++), as, "US", role, false});
    };
    f.public_resolver = add("public-resolver", kPublicAs, netlab::Role::HonestResolver);
    f.sdns_resolver = add("sdns-resolver", kSdnsAs, netlab::Role::SdnsResolver);

    auto pub = exposures(clients, public_avg, rng);
    auto sdns = exposures(clients, sdns_avg, rng);
    std::vector<std::uint32_t> pool(kTransitPool);
    std::iota(pool.begin(), pool.end(), kTransitBase);

    for (std::size_t i = 0; i < clients; ++i) {
        auto id = add("client-" + std::to_string(i), 1000 + static_cast<std::uint32_t>(i),
                      netlab::Role::Client);
        f.clients.push_back(id);
        // A chain of (exposure - 1) transit routers in distinct ASes, then the resolver.
        auto chain = [&](std::size_t exposure, NodeId resolver, const char* tag) {
            std::shuffle(pool.begin(), pool.end(), rng);
            NodeId prev = id;
            for (std::size_t h = 0; h + 1 < exposure; ++h) {
                auto r = add("r-" + std::to_string(i) + "-" + tag + "-" + std::to_string(h), pool[h],
                             netlab::Role::Router);
                topo.add_link(prev, r, std::chrono::milliseconds(5));
                prev = r;
            }
            topo.add_link(prev, resolver, std::chrono::milliseconds(5));
        };
        chain(pub[i], f.public_resolver, "pub");
        chain(sdns[i], f.sdns_resolver, "sdns");
    }
    return f;
}

}  // namespace sdns::audit
