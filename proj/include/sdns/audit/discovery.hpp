#pragma once

// Finding a provider's proxies, classifying what they will relay, and
// fingerprinting them by banner.

#include <functional>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sdns/netlab/world.hpp"
#include "sdns/proxy/destination.hpp"

namespace sdns::audit {

struct GroundTruthRow {
    std::string hostname;
    Ipv4 ip;
    std::string vantage;
    std::string timestamp;
};

/// Comma-separated `hostname,ip,vantage,timestamp` lines; vantage and
/// timestamp may be omitted. Blank lines, '#' comments and a leading header
/// row are skipped; anything else malformed throws ConfigError.
std::vector<GroundTruthRow> read_ground_truth(std::istream& in);

using GroundTruth = std::map<std::string, std::set<Ipv4>>;
GroundTruth aggregate_ground_truth(std::span<const GroundTruthRow> rows);

struct Candidate {
    std::string hostname;
    Ipv4 ip;
    friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Keeps answers whose /24 matches none of the honest resolutions for the name.
std::vector<Candidate> discover_candidates(const std::map<std::string, Ipv4>& sdns_answers, const GroundTruth& truth);

/// One request from a vantage point to `target`, naming `hostname` in the
/// Host header (HttpHost) or SNI (TlsSni).
using Vantage = std::function<netlab::FetchResult(Ipv4 target, const std::string& hostname, proxy::Protocol)>;

/// A vantage backed by a simulated client; each call runs the simulator
/// until the fetch finishes.
Vantage sim_vantage(netlab::World& world, std::string_view client_node,
                    VirtualTime timeout = std::chrono::seconds(10));

/// Body served to a plain HTTP request naming the target by IP.
std::string banner_baseline(Ipv4 target, const Vantage& v);

/// Content came back, and it is not the target's own banner.
bool relayed(const netlab::FetchResult& r, const std::string& baseline);

/// The registered vantage is relayed while the unregistered one is not,
/// on either protocol.
bool confirm_proxy(Ipv4 candidate, const std::string& hostname, const Vantage& registered,
                   const Vantage& unregistered);

struct ProxyClassification {
    Ipv4 proxy;
    bool open_http = false;
    bool universal_http = false;
    bool open_sni = false;
    bool universal_sni = false;
    std::size_t probes_issued = 0;
    friend bool operator==(const ProxyClassification&, const ProxyClassification&) = default;
};

/// open_*: the unregistered vantage is relayed to a channel.
/// universal_*: the registered vantage is relayed to a non-channel.
ProxyClassification classify_proxy(Ipv4 proxy_ip, const std::string& channel_hostname,
                                   const std::string& non_channel_hostname, const Vantage& registered,
                                   const Vantage& unregistered);

/// Hosts whose IP-addressed HTTP response body contains `signature`.
/// Throws sdns::Error on an empty signature.
std::vector<Ipv4> fingerprint_scan(std::span<const Ipv4> hosts, std::string_view signature, const Vantage& scanner);

}  // namespace sdns::audit
