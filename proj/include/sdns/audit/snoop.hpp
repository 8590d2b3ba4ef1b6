#pragma once

// Cache snooping: RD=0 probes that reveal whether a resolver holds a name
// and how long it has left, without ever causing a lookup.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdns/dnswire/message.hpp"
#include "sdns/netlab/world.hpp"

namespace sdns::audit {

enum class ProbeOutcome { Hit, Miss, Indeterminate };
const char* to_string(ProbeOutcome o);

struct ProbeRecord {
    std::string hostname;
    VirtualTime probe_time{0};
    ProbeOutcome outcome = ProbeOutcome::Indeterminate;
    std::uint32_t remaining_ttl = 0;  // meaningful for Hit
    std::uint32_t ttl_max = 0;
    /// The resolver reported a TTL above ttl_max; the record is Indeterminate.
    bool ttl_out_of_range = false;

    bool hit() const { return outcome == ProbeOutcome::Hit; }
};

/// Classifies a snoop response. nullopt (timeout or silence) is Indeterminate;
/// an A answer for the name is a Hit; referrals and errors are Misses.
ProbeRecord interpret_snoop(std::string_view hostname, std::uint32_t ttl_max, VirtualTime probe_time,
                            const std::optional<dns::DnsMessage>& response);

/// One RD=0 probe from `client` to `resolver`. The probe time is taken at
/// the midpoint of the round trip.
void snoop(netlab::ClientAgent& client, Ipv4 resolver, const std::string& hostname, std::uint32_t ttl_max,
           std::function<void(ProbeRecord)> done, VirtualTime timeout = std::chrono::seconds(2));

/// Probes and runs the simulator until the answer (or the timeout) arrives.
ProbeRecord snoop_now(netlab::World& world, std::string_view client_node, Ipv4 resolver, const std::string& hostname,
                      std::uint32_t ttl_max, VirtualTime timeout = std::chrono::seconds(2));

struct CampaignTarget {
    std::string hostname;
    std::uint32_t ttl_max = 300;
};

/// Probes every target once per its ttl_max over [start, end), on the
/// simulator's clock. Results accumulate as the simulator runs.
class ProbeCampaign {
public:
    ProbeCampaign(netlab::World& world, std::string_view client_node, Ipv4 resolver, std::vector<CampaignTarget> targets,
                  VirtualTime start, VirtualTime end);

    const std::vector<ProbeRecord>& records(const std::string& hostname) const;
    const std::map<std::string, std::vector<ProbeRecord>>& all() const { return state_->records; }
    std::size_t probes_sent() const { return state_->sent; }

private:
    struct State {
        std::map<std::string, std::vector<ProbeRecord>> records;
        std::size_t sent = 0;
    };
    std::shared_ptr<State> state_;
};

/// Admits at most one probe per hostname per ttl_max.
class ProbeRateLimiter {
public:
    bool allow(const std::string& hostname, std::uint32_t ttl_max, VirtualTime now);

private:
    std::map<std::string, VirtualTime> last_;
};

}  // namespace sdns::audit
