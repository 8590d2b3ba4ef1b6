#include "sdns/audit/snoop.hpp"

namespace sdns::audit {

const char* to_string(ProbeOutcome o) {
    switch (o) {
        case ProbeOutcome::Hit: return "hit";
        case ProbeOutcome::Miss: return "miss";
        case ProbeOutcome::Indeterminate: return "indeterminate";
    }
    return "?";
}

ProbeRecord interpret_snoop(std::string_view hostname, std::uint32_t ttl_max, VirtualTime probe_time,
                            const std::optional<dns::DnsMessage>& response) {
    ProbeRecord r;
    r.hostname = dns::normalize_name(hostname);
    r.probe_time = probe_time;
    r.ttl_max = ttl_max;
    if (!response) return r;
    r.outcome = ProbeOutcome::Miss;
    if (response->flags.rcode != dns::Rcode::NoError) return r;
    for (const auto& rr : response->answers) {
        if (!rr.is_a() || rr.name != r.hostname) continue;
        r.remaining_ttl = rr.ttl;
        if (rr.ttl > ttl_max) {
            r.outcome = ProbeOutcome::Indeterminate;
            r.ttl_out_of_range = true;
        } else {
            r.outcome = ProbeOutcome::Hit;
        }
        return r;
    }
    return r;
}

void snoop(netlab::ClientAgent& client, Ipv4 resolver, const std::string& hostname, std::uint32_t ttl_max,
           std::function<void(ProbeRecord)> done, VirtualTime timeout) {
    auto& sim = client.simulator();
    VirtualTime sent = sim.now();
    client.resolve(
        hostname, false,
        [&sim, sent, hostname, ttl_max, done = std::move(done)](std::optional<dns::DnsMessage> r) {
            VirtualTime mid = sent + (sim.now() - sent) / 2;
            done(interpret_snoop(hostname, ttl_max, r ? mid : sent, r));
        },
        resolver, timeout);
}

ProbeRecord snoop_now(netlab::World& world, std::string_view client_node, Ipv4 resolver, const std::string& hostname,
                      std::uint32_t ttl_max, VirtualTime timeout) {
    std::optional<ProbeRecord> out;
    snoop(world.client(client_node), resolver, hostname, ttl_max, [&out](ProbeRecord r) { out = std::move(r); },
          timeout);
    world.sim().run_until([&out] { return out.has_value(); }, world.sim().now() + timeout);
    if (!out) throw Error("snoop did not complete");
    return *out;
}

ProbeCampaign::ProbeCampaign(netlab::World& world, std::string_view client_node, Ipv4 resolver,
                             std::vector<CampaignTarget> targets, VirtualTime start, VirtualTime end)
    : state_(std::make_shared<State>()) {
    auto& client = world.client(client_node);
    auto& sim = world.sim();
    for (const auto& t : targets) {
        if (t.ttl_max == 0) throw Error("campaign target '" + t.hostname + "' has no ttl_max");
        auto name = dns::normalize_name(t.hostname);
        state_->records[name];
        VirtualTime interval = seconds_to_time(t.ttl_max);
        auto fire = std::make_shared<std::function<void(VirtualTime)>>();
        std::weak_ptr<std::function<void(VirtualTime)>> weak = fire;
        *fire = [&client, &sim, resolver, name, ttl = t.ttl_max, interval, end, st = state_, weak](VirtualTime when) {
            ++st->sent;
            sim.log().record(sim.now(), client.node(), netlab::EventKind::Probe, 0, fnv1a64(name),
                             sim.log().keeps_events() ? name : "");
            snoop(client, resolver, name, ttl, [st](ProbeRecord r) { st->records[r.hostname].push_back(std::move(r)); });
            VirtualTime next = when + interval;
            if (next < end) {
                auto self = weak.lock();
                sim.at(next, [self, next] { (*self)(next); });
            }
        };
        if (start < end) sim.at(start, [fire, start] { (*fire)(start); });
    }
}

const std::vector<ProbeRecord>& ProbeCampaign::records(const std::string& hostname) const {
    auto it = state_->records.find(dns::normalize_name(hostname));
    if (it == state_->records.end()) throw Error("hostname '" + hostname + "' is not part of the campaign");
    return it->second;
}

bool ProbeRateLimiter::allow(const std::string& hostname, std::uint32_t ttl_max, VirtualTime now) {
    auto it = last_.find(hostname);
    if (it != last_.end() && now - it->second < seconds_to_time(ttl_max)) return false;
    last_[hostname] = now;
    return true;
}

}  // namespace sdns::audit
