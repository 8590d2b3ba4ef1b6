#pragma once

// Services that run on simulator nodes: authoritative nameservers, smart and
// honest resolvers, geo proxies, geofenced origins, and client agents that
// resolve-then-fetch like a browser would.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sdns/dnswire/message.hpp"
#include "sdns/netlab/simulator.hpp"
#include "sdns/proxy/policy.hpp"
#include "sdns/proxy/splice.hpp"
#include "sdns/resolver/smart_resolver.hpp"

namespace sdns::netlab {

inline constexpr std::uint16_t kDnsPort = 53;
inline constexpr std::uint16_t kHttpPort = 80;
inline constexpr std::uint16_t kHttpsPort = 443;
inline constexpr std::uint16_t kStubPort = 53000;

// ---------------------------------------------------------------- authoritative

struct AuthZone {
    std::string zone;
    std::uint32_t ttl = 300;
    std::map<std::string, std::vector<Ipv4>> records;
    std::optional<Ipv4> wildcard;  // answers any name under the zone
};

class AuthoritativeServer {
public:
    struct QueryLogEntry {
        VirtualTime time;
        std::string qname;
        Ipv4 from;
    };

    AuthoritativeServer(NodeId node, std::vector<AuthZone> zones);

    NodeId node() const { return node_; }
    const std::vector<AuthZone>& zones() const { return zones_; }

    /// Answers from zone data and records the query in the log.
    resolver::UpstreamAnswer answer(const dns::Question& q, Ipv4 from, VirtualTime now);
    /// TTL_max for a name this server is authoritative for.
    std::optional<std::uint32_t> ttl_for(std::string_view qname) const;
    const AuthZone* zone_for(std::string_view qname) const;

    const std::vector<QueryLogEntry>& query_log() const { return log_; }
    bool saw(std::string_view qname) const { return seen_.contains(std::string(qname)); }
    void clear_log();

private:
    NodeId node_;
    std::vector<AuthZone> zones_;
    std::vector<QueryLogEntry> log_;
    std::unordered_set<std::string> seen_;
};

// ---------------------------------------------------------------- origins

struct GeofencePolicy {
    /// nullopt: no geofence, everyone is served.
    std::optional<std::set<std::string>> allowed_regions;
};

/// 200 if the requester's region is allowed, 403 otherwise (unknown IPs included).
int geofence_check(const Topology& topo, const GeofencePolicy& policy, Ipv4 requester);

struct AccessLogEntry {
    VirtualTime time{0};
    Ipv4 requester;
    bool tls = false;
    std::string host;  // Host header, falling back to SNI
    std::string path;
    int status = 0;
    std::string session_id;
    bool ip_literal = false;  // the request named the server by IP
};

struct OriginConfig {
    std::set<std::string> hostnames;
    GeofencePolicy geofence;
    /// Serve a page embedding an IP-literal image tagged with a session id.
    bool deproxy_page = false;
    std::string body = "<html><body>content</body></html>";
};

class OriginServer {
public:
    OriginServer(Simulator& sim, NodeId node, OriginConfig config);

    NodeId node() const { return node_; }
    const OriginConfig& config() const { return config_; }
    const std::vector<AccessLogEntry>& access_log() const { return log_; }

private:
    struct Conn;
    StreamHandler accept(ConnId id, Ipv4 peer, bool tls_port);
    void on_data(const std::shared_ptr<Conn>& c, std::span<const std::uint8_t> bytes);
    std::string respond(const std::string& request_head, const std::string& sni, Ipv4 peer, bool tls);

    Simulator& sim_;
    NodeId node_;
    Ipv4 ip_;
    OriginConfig config_;
    std::vector<AccessLogEntry> log_;
    std::uint64_t next_session_ = 1;
};

// ---------------------------------------------------------------- resolvers

class World;

/// resolver::Upstream backed by the world's authoritative servers.
class SimUpstream : public resolver::Upstream {
public:
    explicit SimUpstream(World& world) : world_(world) {}
    std::optional<resolver::UpstreamAnswer> lookup(const dns::Question& q, Ipv4 resolver_ip,
                                                   VirtualTime now) override;

private:
    World& world_;
};

class ResolverService {
public:
    ResolverService(Simulator& sim, NodeId node, std::unique_ptr<resolver::SmartResolver> resolver);
    NodeId node() const { return node_; }
    resolver::SmartResolver& resolver() { return *resolver_; }

private:
    Simulator& sim_;
    NodeId node_;
    std::unique_ptr<resolver::SmartResolver> resolver_;
};

// ---------------------------------------------------------------- proxies

struct ProxyDecisionRecord {
    VirtualTime time{0};
    Ipv4 client;
    std::optional<proxy::DestinationClaim> claim;  // nullopt: no destination found
    bool relayed = false;
    bool bannered = false;
};

struct CompletedSplice {
    Ipv4 client;
    proxy::DestinationClaim claim;
    Ipv4 origin;
    proxy::TransferStats stats;
};

class ProxyService {
public:
    ProxyService(Simulator& sim, NodeId node, std::shared_ptr<const proxy::ProxyPolicy> policy,
                 std::shared_ptr<resolver::CustomerRegistry> registry, resolver::Upstream& upstream);

    NodeId node() const { return node_; }
    const proxy::ProxyPolicy& policy() const { return *policy_; }
    void set_policy(std::shared_ptr<const proxy::ProxyPolicy> policy) { policy_ = std::move(policy); }
    const std::vector<ProxyDecisionRecord>& decisions() const { return decisions_; }
    const std::vector<CompletedSplice>& completed() const { return completed_; }

private:
    struct Conn;
    StreamHandler accept(ConnId id, Ipv4 peer, std::uint16_t port);
    void on_client_data(const std::shared_ptr<Conn>& c, std::span<const std::uint8_t> bytes);
    void decide(const std::shared_ptr<Conn>& c);
    void refuse(const std::shared_ptr<Conn>& c, bool with_banner);
    void open_origin(const std::shared_ptr<Conn>& c, Ipv4 origin);
    std::optional<Ipv4> honest_resolve(const std::string& hostname);

    Simulator& sim_;
    NodeId node_;
    Ipv4 ip_;
    std::shared_ptr<const proxy::ProxyPolicy> policy_;
    std::shared_ptr<resolver::CustomerRegistry> registry_;
    resolver::SmartResolver honest_;
    std::vector<ProxyDecisionRecord> decisions_;
    std::vector<CompletedSplice> completed_;
};

// ---------------------------------------------------------------- clients

struct FetchRequest {
    bool https = true;
    std::string host;  // hostname or IPv4 literal
    std::string path = "/";
    /// Connect here instead of resolving `host` (Host/SNI still carry `host`).
    std::optional<Ipv4> connect_to;

    /// Accepts "http://host/path" and "https://host/path".
    static FetchRequest parse_url(std::string_view url);
};

struct FetchResult {
    bool completed = false;  // an HTTP response arrived
    int status = 0;
    std::string body;
    std::optional<Ipv4> server_ip;
    std::string error;

    bool ok() const { return completed && status == 200; }
};

struct HttpResponse {
    int status = 0;
    std::string body;
};
std::optional<HttpResponse> parse_http_response(std::string_view raw);
std::string http_response(int status, std::string_view body);
std::string http_get(std::string_view host, std::string_view path);

/// A host running a stub resolver and a minimal browser.
class ClientAgent {
public:
    using DnsCallback = std::function<void(std::optional<dns::DnsMessage>)>;
    using FetchCallback = std::function<void(FetchResult)>;

    ClientAgent(Simulator& sim, NodeId node, std::optional<Ipv4> resolver);

    NodeId node() const { return node_; }
    Ipv4 ip() const { return ip_; }
    Simulator& simulator() { return sim_; }
    std::optional<Ipv4> resolver() const { return resolver_; }
    void set_resolver(Ipv4 ip) { resolver_ = ip; }

    /// A-record query to `server` (default: the configured resolver).
    void resolve(std::string_view hostname, bool recursion_desired, DnsCallback done,
                 std::optional<Ipv4> server = std::nullopt, VirtualTime timeout = std::chrono::seconds(5));
    void fetch(FetchRequest req, FetchCallback done);
    /// Fetches a page, then every <img src="..."> it references.
    void browse(std::string_view url, std::function<void(std::vector<FetchResult>)> done);

    std::uint64_t fetches_completed() const { return fetches_completed_; }

private:
    struct Pending {
        DnsCallback done;
    };
    void on_dns(const Datagram& d);
    void connect_and_send(FetchRequest req, Ipv4 target, FetchCallback done);

    Simulator& sim_;
    NodeId node_;
    Ipv4 ip_;
    std::optional<Ipv4> resolver_;
    std::unordered_map<std::uint16_t, Pending> pending_;
    std::uint16_t next_id_;
    std::uint64_t fetches_completed_ = 0;
};

// ---------------------------------------------------------------- providers

struct ProviderConfig {
    std::string name;
    resolver::ResolverConfig resolver;
    proxy::ProxyPolicy proxy_policy;
    std::set<Ipv4> registered;
    std::vector<std::string> resolver_nodes;
    std::vector<std::string> proxy_nodes;
};

struct Provider {
    std::string name;
    std::shared_ptr<resolver::CustomerRegistry> registry;
    std::shared_ptr<const proxy::ProxyPolicy> proxy_policy;
    std::vector<NodeId> resolver_nodes;
    std::vector<NodeId> proxy_nodes;
};

/// A simulator plus the services running on its nodes.
class World {
public:
    explicit World(Topology topology, std::uint64_t seed = 0, LogMode mode = LogMode::Full);
    World(const World&) = delete;
    World& operator=(const World&) = delete;

    Simulator& sim() { return sim_; }
    const Topology& topology() const { return sim_.topology(); }
    resolver::Upstream& upstream() { return upstream_; }

    AuthoritativeServer& add_authoritative(std::string_view node, std::vector<AuthZone> zones);
    OriginServer& add_origin(std::string_view node, OriginConfig config);
    Provider& add_provider(ProviderConfig config);
    ResolverService& add_honest_resolver(std::string_view node);
    ClientAgent& add_client(std::string_view node, std::optional<std::string_view> resolver_node = std::nullopt);

    AuthoritativeServer* authoritative_for(std::string_view qname);
    AuthoritativeServer& authoritative(std::string_view node);
    OriginServer& origin(std::string_view node);
    ResolverService& resolver(std::string_view node);
    ProxyService& proxy(std::string_view node);
    ClientAgent& client(std::string_view node);
    Provider& provider(std::string_view name);
    const std::map<std::string, Provider>& providers() const { return providers_; }
    std::map<NodeId, std::unique_ptr<ResolverService>>& resolvers() { return resolvers_; }
    std::map<NodeId, std::unique_ptr<ProxyService>>& proxies() { return proxies_; }
    std::map<NodeId, std::unique_ptr<OriginServer>>& origins() { return origins_; }

    /// Swaps a provider's resolver policy on all its resolvers.
    void reconfigure_provider(std::string_view name, resolver::ResolverPolicy policy);

    /// Combined cache digest of every resolver, over entries live at `now`.
    std::uint64_t cache_digest(VirtualTime now);

private:
    Simulator sim_;
    SimUpstream upstream_;
    std::map<NodeId, std::unique_ptr<AuthoritativeServer>> auths_;
    std::map<std::string, NodeId> zone_index_;
    std::map<NodeId, std::unique_ptr<OriginServer>> origins_;
    std::map<NodeId, std::unique_ptr<ResolverService>> resolvers_;
    std::map<NodeId, std::unique_ptr<ProxyService>> proxies_;
    std::map<NodeId, std::unique_ptr<ClientAgent>> clients_;
    std::map<std::string, Provider> providers_;
};

}  // namespace sdns::netlab
