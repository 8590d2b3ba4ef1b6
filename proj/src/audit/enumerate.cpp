#include "sdns/audit/enumerate.hpp"

#include <random>

namespace sdns::audit {

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Registered: return "registered";
        case Verdict::Unregistered: return "unregistered";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

std::vector<EnumerationVerdict> enumerate_clients(netlab::World& world, const EnumerationConfig& config,
                                                  std::span<const Ipv4> candidates) {
    auto& sim = world.sim();
    const auto& topo = world.topology();
    auto attacker = topo.id_of(config.attacker_node);
    auto domain = dns::normalize_name(config.domain);
    std::mt19937_64 rng(derive_seed(config.seed, "enumerate:" + domain + ":" + std::to_string(config.attempt)));

    std::vector<EnumerationVerdict> out;
    out.reserve(candidates.size());
    VirtualTime when = sim.now();
    std::uint16_t id = static_cast<std::uint16_t>(rng());
    for (Ipv4 candidate : candidates) {
        EnumerationVerdict v;
        v.candidate = candidate;
        v.nonce_name = "n" + to_hex(rng()) + "." + domain;
        auto bytes = dns::encode(dns::DnsMessage::query(id++, v.nonce_name, true));
        sim.at(when, [&sim, attacker, candidate, resolver = config.resolver, bytes = std::move(bytes)]() mutable {
            sim.send_udp(attacker, candidate, resolver, netlab::kStubPort, netlab::kDnsPort, std::move(bytes), true);
        });
        when += config.spacing;
        out.push_back(std::move(v));
    }
    sim.run_until(when + config.wait);

    auto* observer = world.authoritative_for(domain);
    bool readable = observer && sim.node_up(observer->node()) && topo.latency(attacker, observer->node()).has_value();
    for (auto& v : out) {
        if (!readable) {
            v.verdict = Verdict::Indeterminate;
            continue;
        }
        v.nonce_observed = observer->saw(v.nonce_name);
        bool registered = config.variant == EnumerationVariant::ThirdParty ? v.nonce_observed : !v.nonce_observed;
        v.verdict = registered ? Verdict::Registered : Verdict::Unregistered;
    }
    return out;
}

double enumeration_duration(double num_ips, double rate_per_second) {
    if (!(rate_per_second > 0)) throw Error("probe rate must be positive");
    if (num_ips < 0) throw Error("address count must be non-negative");
    return num_ips / rate_per_second;
}

}  // namespace sdns::audit
