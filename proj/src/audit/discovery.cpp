#include "sdns/audit/discovery.hpp"

#include <sstream>

namespace sdns::audit {

namespace {

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<GroundTruthRow> read_ground_truth(std::istream& in) {
    std::vector<GroundTruthRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
        if (fields.size() < 2) throw ConfigError("ground truth line " + std::to_string(lineno) + ": too few fields");
        if (rows.empty() && fields[0] == "hostname") continue;
        auto ip = Ipv4::parse(fields[1]);
        if (!ip) throw ConfigError("ground truth line " + std::to_string(lineno) + ": bad IPv4 '" + fields[1] + "'");
        GroundTruthRow row;
        try {
            row.hostname = dns::normalize_name(fields[0]);
        } catch (const Error& e) {
            throw ConfigError("ground truth line " + std::to_string(lineno) + ": " + e.what());
        }
        row.ip = *ip;
        if (fields.size() > 2) row.vantage = fields[2];
        if (fields.size() > 3) row.timestamp = fields[3];
        rows.push_back(std::move(row));
    }
    return rows;
}

GroundTruth aggregate_ground_truth(std::span<const GroundTruthRow> rows) {
    GroundTruth out;
    for (const auto& r : rows) out[r.hostname].insert(r.ip);
    return out;
}

std::vector<Candidate> discover_candidates(const std::map<std::string, Ipv4>& sdns_answers, const GroundTruth& truth) {
    std::vector<Candidate> out;
    for (const auto& [raw, ip] : sdns_answers) {
        auto host = dns::normalize_name(raw);
        bool aliased = false;
        if (auto it = truth.find(host); it != truth.end())
            for (Ipv4 honest : it->second)
                if (honest.slash24() == ip.slash24()) aliased = true;
        if (!aliased) out.push_back({host, ip});
    }
    return out;
}

Vantage sim_vantage(netlab::World& world, std::string_view client_node, VirtualTime timeout) {
    auto* client = &world.client(client_node);
    return [&world, client, timeout](Ipv4 target, const std::string& hostname, proxy::Protocol protocol) {
        netlab::FetchRequest req;
        req.https = protocol == proxy::Protocol::TlsSni;
        req.host = hostname;
        req.connect_to = target;
        std::optional<netlab::FetchResult> out;
        client->fetch(std::move(req), [&out](netlab::FetchResult r) { out = std::move(r); });
        auto& sim = world.sim();
        sim.run_until([&out] { return out.has_value(); }, sim.now() + timeout);
        if (!out) return netlab::FetchResult{false, 0, {}, target, "timeout"};
        return *out;
    };
}

std::string banner_baseline(Ipv4 target, const Vantage& v) {
    auto r = v(target, target.to_string(), proxy::Protocol::HttpHost);
    return r.completed ? r.body : std::string{};
}

bool relayed(const netlab::FetchResult& r, const std::string& baseline) {
    return r.ok() && (baseline.empty() || r.body != baseline);
}

bool confirm_proxy(Ipv4 candidate, const std::string& hostname, const Vantage& registered,
                   const Vantage& unregistered) {
    auto baseline = banner_baseline(candidate, unregistered);
    for (auto protocol : {proxy::Protocol::HttpHost, proxy::Protocol::TlsSni}) {
        bool reg = relayed(registered(candidate, hostname, protocol), baseline);
        bool unreg = relayed(unregistered(candidate, hostname, protocol), baseline);
        if (reg && !unreg) return true;
    }
    return false;
}

ProxyClassification classify_proxy(Ipv4 proxy_ip, const std::string& channel_hostname,
                                   const std::string& non_channel_hostname, const Vantage& registered,
                                   const Vantage& unregistered) {
    ProxyClassification c;
    c.proxy = proxy_ip;
    auto baseline = banner_baseline(proxy_ip, unregistered);
    using proxy::Protocol;
    c.open_http = relayed(unregistered(proxy_ip, channel_hostname, Protocol::HttpHost), baseline);
    c.universal_http = relayed(registered(proxy_ip, non_channel_hostname, Protocol::HttpHost), baseline);
    c.open_sni = relayed(unregistered(proxy_ip, channel_hostname, Protocol::TlsSni), baseline);
    c.universal_sni = relayed(registered(proxy_ip, non_channel_hostname, Protocol::TlsSni), baseline);
    c.probes_issued = 4;
    return c;
}

std::vector<Ipv4> fingerprint_scan(std::span<const Ipv4> hosts, std::string_view signature, const Vantage& scanner) {
    if (signature.empty()) throw Error("an empty signature matches every host");
    std::vector<Ipv4> out;
    for (Ipv4 h : hosts) {
        auto r = scanner(h, h.to_string(), proxy::Protocol::HttpHost);
        if (r.completed && r.body.find(signature) != std::string::npos) out.push_back(h);
    }
    return out;
}

}  // namespace sdns::audit
