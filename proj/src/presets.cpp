#include "sdns/presets.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "sdns/core.hpp"

namespace sdns::presets {

using nlohmann::json;

namespace {

constexpr const char* kBanner = "Smart DNS proxy is running";

json node(std::string name, std::string ip, std::uint32_t as, std::string region, std::string role,
          bool can_spoof = false) {
    json n{{"name", std::move(name)}, {"ip", std::move(ip)}, {"as", as}, {"region", std::move(region)},
           {"role", std::move(role)}};
    if (can_spoof) n["can_spoof"] = true;
    return n;
}

json link(std::string a, std::string b, int ms) { return {{"a", std::move(a)}, {"b", std::move(b)}, {"latency_ms", ms}}; }

/// A document with a US backbone router every other node hangs off.
struct Builder {
    json doc{{"nodes", json::array({node("core", "4.69.0.1", 3356, "US", "router")})},
             {"links", json::array()},
             {"zones", json::array()},
             {"origins", json::array()},
             {"honest_resolvers", json::array()},
             {"providers", json::array()},
             {"clients", json::array()},
             {"script", json::array()}};

    void add(json n, int latency_ms = 10) {
        std::string name = n["name"];
        doc["nodes"].push_back(std::move(n));
        doc["links"].push_back(link("core", name, latency_ms));
    }
    void zone(std::string server, std::string zone, std::uint32_t ttl, json records) {
        doc["zones"].push_back({{"server", std::move(server)}, {"zone", std::move(zone)}, {"ttl", ttl},
                                {"records", std::move(records)}});
    }
    void origin(std::string name, std::vector<std::string> hostnames, std::optional<std::vector<std::string>> regions,
                bool deproxy = false) {
        json o{{"node", std::move(name)}, {"hostnames", std::move(hostnames)}};
        if (regions) o["allowed_regions"] = *regions;
        if (deproxy) o["deproxy"] = true;
        doc["origins"].push_back(std::move(o));
    }
    void client(std::string name, std::string resolver) {
        doc["clients"].push_back({{"node", std::move(name)}, {"resolver", std::move(resolver)}});
    }
};

/// Geofenced streaming site plus an unrestricted one, with their nameservers.
void add_sites(Builder& b) {
    b.add(node("netflix-ns", "198.18.0.53", 2906, "US", "authoritative_ns"));
    b.add(node("netflix-origin", "198.18.1.10", 2906, "US", "origin"));
    b.zone("netflix-ns", "netflix.com", 300, {{"www.netflix.com", "netflix-origin"}, {"netflix.com", "netflix-origin"}});
    b.origin("netflix-origin", {"www.netflix.com", "netflix.com"}, std::vector<std::string>{"US"});

    b.add(node("example-ns", "192.0.2.53", 15133, "US", "authoritative_ns"));
    b.add(node("example-origin", "192.0.2.80", 15133, "US", "origin"));
    b.zone("example-ns", "example.org", 300, {{"www.example.org", "example-origin"}});
    b.origin("example-origin", {"www.example.org"}, std::nullopt);
}

json proxy_policy(const char* http, const char* sni, const char* authz) {
    return {{"http_auth", http}, {"sni_auth", sni}, {"authz", authz}, {"banner", kBanner}};
}

json walkthrough(std::uint64_t) {
    Builder b;
    add_sites(b);
    b.add(node("sdns-resolver", "203.0.113.53", 64510, "US", "sdns_resolver"));
    b.add(node("proxy-1", "203.0.113.81", 64510, "US", "proxy"));
    b.add(node("client", "24.114.0.10", 812, "CA", "client"), 20);
    b.doc["providers"].push_back({{"name", "SmartDNS"},
                                  {"resolvers", {"sdns-resolver"}},
                                  {"proxies", {"proxy-1"}},
                                  {"registered", {"client"}},
                                  {"resolver_policy", {{"non_customer", "drop"}}},
                                  {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "channel_only")},
                                  {"channels", {{{"suffix", "netflix.com"}, {"pool", {"proxy-1"}}}}}});
    b.client("client", "sdns-resolver");
    b.doc["script"].push_back({{"at_s", 1}, {"do", "fetch"}, {"client", "client"}, {"url", "https://www.netflix.com/"}});
    return b.doc;
}

/// 1000 candidate addresses in 100.64.0.0/10, 100 of them registered.
json enumeration(std::uint64_t seed, json non_customer, const char* mitigation) {
    Builder b;
    add_sites(b);
    b.add(node("sdns-resolver", "203.0.113.53", 64510, "US", "sdns_resolver"));
    b.add(node("proxy-1", "203.0.113.81", 64510, "US", "proxy"));
    b.add(node("attacker", "185.220.0.7", 64666, "NL", "client", true));
    b.add(node("attacker-ns", "185.220.0.53", 64666, "NL", "authoritative_ns"));
    b.zone("attacker-ns", "attacker.example", 60, json::object());

    std::mt19937_64 rng(derive_seed(seed, "candidates"));
    std::set<std::uint32_t> picked;
    const std::uint32_t base = Ipv4::from_string("100.64.0.0").value();
    while (picked.size() < 1000) picked.insert(base + static_cast<std::uint32_t>(rng() % (1u << 22)));
    std::vector<std::uint32_t> all(picked.begin(), picked.end());
    std::shuffle(all.begin(), all.end(), rng);
    json candidates = json::array();
    json registered = json::array();
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto ip = Ipv4(all[i]).to_string();
        candidates.push_back(ip);
        if (i < 100) registered.push_back(ip);
    }
    b.doc["providers"].push_back(
        {{"name", "VPNUK"},
         {"resolvers", {"sdns-resolver"}},
         {"proxies", {"proxy-1"}},
         {"registered", registered},
         {"resolver_policy", {{"non_customer", std::move(non_customer)}, {"mitigation", mitigation}}},
         {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "universal")},
         {"channels", {{{"suffix", "netflix.com"}, {"pool", {"proxy-1"}}}}}});
    b.doc["audit"] = {{"attacker", "attacker"},
                      {"resolver", "sdns-resolver"},
                      {"provider", "VPNUK"},
                      {"domain", "attacker.example"},
                      {"channel_domain", "netflix.com"},
                      {"candidates", candidates}};
    return b.doc;
}

json provider_proxies(std::uint64_t) {
    Builder b;
    add_sites(b);
    b.add(node("registered-vantage", "24.114.0.10", 812, "CA", "client"), 20);
    b.add(node("unregistered-vantage", "24.114.0.11", 812, "CA", "client"), 20);
    b.add(node("honest-resolver", "8.8.8.8", 15169, "US", "honest_resolver"));
    b.doc["honest_resolvers"].push_back("honest-resolver");
    json rows = json::array();
    int i = 0;
    for (const auto& row : classified_providers()) {
        std::string tag = to_lower(row.provider);
        std::string resolver = tag + "-resolver";
        std::string proxy = tag + "-proxy";
        b.add(node(resolver, "203.0." + std::to_string(100 + i) + ".53", 64520 + i, "US", "sdns_resolver"));
        b.add(node(proxy, "203.0." + std::to_string(100 + i) + ".80", 64520 + i, "US", "proxy"));
        b.doc["providers"].push_back({{"name", row.provider},
                                      {"resolvers", {resolver}},
                                      {"proxies", {proxy}},
                                      {"registered", {"registered-vantage"}},
                                      {"resolver_policy", {{"non_customer", "drop"}}},
                                      {"proxy_policy", proxy_policy(row.http_auth, row.sni_auth, row.authz)},
                                      {"channels", {{{"suffix", "netflix.com"}, {"pool", {proxy}}}}}});
        rows.push_back({{"provider", row.provider}, {"proxy", proxy}});
        ++i;
    }
    b.client("registered-vantage", "honest-resolver");
    b.client("unregistered-vantage", "honest-resolver");
    b.doc["audit"] = {{"registered_vantage", "registered-vantage"},
                      {"unregistered_vantage", "unregistered-vantage"},
                      {"channel_hostname", "www.netflix.com"},
                      {"non_channel_hostname", "www.example.org"},
                      {"proxies", rows}};
    return b.doc;
}

/// 20 clients browsing directly from inside the geofence and 20 from
/// outside through smart DNS (half channel-only, half proxy-everything).
json deproxy(std::uint64_t) {
    Builder b;
    b.add(node("hulu-ns", "198.19.0.53", 23286, "US", "authoritative_ns"));
    b.add(node("hulu-origin", "198.19.1.10", 23286, "US", "origin"));
    b.zone("hulu-ns", "hulu.com", 300, {{"www.hulu.com", "hulu-origin"}});
    b.origin("hulu-origin", {"www.hulu.com"}, std::vector<std::string>{"US"}, true);
    b.add(node("honest-resolver", "8.8.8.8", 15169, "US", "honest_resolver"));
    b.doc["honest_resolvers"].push_back("honest-resolver");
    b.add(node("sdns-resolver", "203.0.113.53", 64510, "US", "sdns_resolver"));
    b.add(node("proxy-1", "203.0.113.81", 64510, "US", "proxy"));
    b.add(node("allproxy-resolver", "203.0.114.53", 64511, "US", "sdns_resolver"));
    b.add(node("allproxy-1", "203.0.114.81", 64511, "US", "proxy"));

    json direct = json::array();
    json proxied = json::array();
    json channel_users = json::array();
    json all_users = json::array();
    for (int i = 0; i < 20; ++i) {
        std::string name = "direct-" + std::to_string(i);
        b.add(node(name, "73.0.0." + std::to_string(10 + i), 7922, "US", "client"), 15);
        b.client(name, "honest-resolver");
        direct.push_back(name);
    }
    for (int i = 0; i < 20; ++i) {
        std::string name = "sdns-" + std::to_string(i);
        bool all = i % 2 == 1;
        b.add(node(name, "24.114.1." + std::to_string(10 + i), 812, "CA", "client"), 25);
        b.client(name, all ? "allproxy-resolver" : "sdns-resolver");
        (all ? all_users : channel_users).push_back(name);
        proxied.push_back(name);
    }
    b.doc["providers"].push_back({{"name", "SmartDNS"},
                                  {"resolvers", {"sdns-resolver"}},
                                  {"proxies", {"proxy-1"}},
                                  {"registered", channel_users},
                                  {"resolver_policy", {{"non_customer", "drop"}}},
                                  {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "channel_only")},
                                  {"channels", {{{"suffix", "hulu.com"}, {"pool", {"proxy-1"}}}}}});
    b.doc["providers"].push_back({{"name", "HideMyIP"},
                                  {"resolvers", {"allproxy-resolver"}},
                                  {"proxies", {"allproxy-1"}},
                                  {"registered", all_users},
                                  {"resolver_policy", {{"non_customer", "drop"}}},
                                  {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "universal")},
                                  {"channels", {{{"suffix", ""}, {"pool", {"allproxy-1"}}}}}});
    int t = 1;
    for (const auto& c : direct)
        b.doc["script"].push_back({{"at_s", t++}, {"do", "browse"}, {"client", c}, {"url", "https://www.hulu.com/"}});
    for (const auto& c : proxied)
        b.doc["script"].push_back({{"at_s", t++}, {"do", "browse"}, {"client", c}, {"url", "https://www.hulu.com/"}});
    b.doc["audit"] = {{"origin", "hulu-origin"}, {"direct_clients", direct}, {"sdns_clients", proxied}};
    return b.doc;
}

/// Three proxies behind two channels, a CDN-aliased site whose honest
/// resolutions span several /24s, and a CDN replica that serves everyone.
json discovery(std::uint64_t) {
    Builder b;
    add_sites(b);
    b.add(node("hulu-ns", "198.19.0.53", 23286, "US", "authoritative_ns"));
    b.add(node("hulu-origin", "198.19.1.10", 23286, "US", "origin"));
    b.zone("hulu-ns", "hulu.com", 300, {{"www.hulu.com", "hulu-origin"}});
    b.origin("hulu-origin", {"www.hulu.com"}, std::vector<std::string>{"US"});
    b.add(node("nflxvideo-ns", "198.18.2.53", 2906, "US", "authoritative_ns"));
    b.add(node("nflxvideo-origin", "198.18.3.10", 2906, "US", "origin"));
    b.zone("nflxvideo-ns", "nflxvideo.net", 300, {{"cdn.nflxvideo.net", "nflxvideo-origin"}});
    b.origin("nflxvideo-origin", {"cdn.nflxvideo.net"}, std::vector<std::string>{"US"});
    // The replica answers for hbo.com from an address the honest vantages
    // never saw, and serves anyone.
    b.add(node("hbo-ns", "162.49.0.53", 7018, "US", "authoritative_ns"));
    b.add(node("hbo-replica", "45.60.12.7", 19551, "US", "origin"));
    b.zone("hbo-ns", "hbo.com", 300, {{"www.hbo.com", "hbo-replica"}});
    b.origin("hbo-replica", {"www.hbo.com"}, std::nullopt);

    b.add(node("sdns-resolver", "203.0.113.53", 64510, "US", "sdns_resolver"));
    for (int i = 1; i <= 3; ++i)
        b.add(node("proxy-" + std::to_string(i), "203.0.113." + std::to_string(80 + i), 64510, "US", "proxy"));
    b.add(node("registered-vantage", "24.114.0.10", 812, "CA", "client"), 20);
    b.add(node("unregistered-vantage", "24.114.0.11", 812, "CA", "client"), 20);
    b.doc["providers"].push_back({{"name", "SmartDNSProxy"},
                                  {"resolvers", {"sdns-resolver"}},
                                  {"proxies", {"proxy-1", "proxy-2", "proxy-3"}},
                                  {"registered", {"registered-vantage"}},
                                  {"resolver_policy", {{"non_customer", "drop"}}},
                                  {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "channel_only")},
                                  {"channels",
                                   {{{"suffix", "netflix.com"}, {"pool", {"proxy-1"}}},
                                    {{"suffix", "nflxvideo.net"}, {"pool", {"proxy-2"}}},
                                    {{"suffix", "hulu.com"}, {"pool", {"proxy-3"}}}}}});
    b.client("registered-vantage", "sdns-resolver");
    b.client("unregistered-vantage", "sdns-resolver");

    // Honest resolutions from several vantages; netflix is spread over
    // three /24s, example.org shares a /24 with its honest answer.
    json truth = json::array({
        "hostname,ip,vantage,timestamp",
        "www.netflix.com,198.18.1.10,us-east,2018-03-01T00:00:00Z",
        "www.netflix.com,52.84.7.20,us-west,2018-03-01T00:00:00Z",
        "www.netflix.com,54.230.9.33,eu-west,2018-03-01T00:00:00Z",
        "cdn.nflxvideo.net,198.18.3.10,us-east,2018-03-01T00:00:00Z",
        "cdn.nflxvideo.net,23.246.2.140,us-west,2018-03-01T00:00:00Z",
        "www.hulu.com,198.19.1.10,us-east,2018-03-01T00:00:00Z",
        "www.hulu.com,8.253.1.30,us-west,2018-03-01T00:00:00Z",
        "www.example.org,192.0.2.81,us-east,2018-03-01T00:00:00Z",
        "www.hbo.com,162.49.4.4,us-east,2018-03-01T00:00:00Z",
        "www.hbo.com,99.84.1.9,us-west,2018-03-01T00:00:00Z",
    });
    b.doc["audit"] = {{"registered_vantage", "registered-vantage"},
                      {"unregistered_vantage", "unregistered-vantage"},
                      {"resolver", "sdns-resolver"},
                      {"hostnames", {"www.netflix.com", "cdn.nflxvideo.net", "www.hulu.com", "www.example.org",
                                     "www.hbo.com"}},
                      {"ground_truth", truth},
                      {"expected_proxies", {"203.0.113.81", "203.0.113.82", "203.0.113.83"}},
                      {"signature", kBanner}};
    return b.doc;
}

/// 80 hostnames behind one smart DNS resolver, 40 of them channels.
/// Customers generate Poisson traffic for 20 of the names.
json snoop_sim(std::uint64_t seed) {
    Builder b;
    b.add(node("sdns-resolver", "203.0.113.53", 64510, "US", "sdns_resolver"));
    b.add(node("proxy-1", "203.0.113.81", 64510, "US", "proxy"));
    b.add(node("auditor", "141.212.0.9", 36375, "US", "observer"));
    b.add(node("ns", "198.51.100.53", 13335, "US", "authoritative_ns"));
    b.add(node("web", "198.51.100.80", 13335, "US", "origin"));

    json records = json::object();
    json hostnames = json::array();
    json channels = json::array();
    json targets = json::array();
    std::vector<std::string> all;
    for (int i = 0; i < 40; ++i) {
        std::string ch = "channel" + std::to_string(i) + ".tv";
        channels.push_back({{"suffix", ch}, {"pool", {"proxy-1"}}});
        all.push_back("www." + ch);
    }
    for (int i = 0; i < 40; ++i) all.push_back("site" + std::to_string(i) + ".com");
    for (const auto& h : all) {
        records[h] = "web";
        hostnames.push_back(h);
    }
    // One zone per name so each has its own authoritative TTL.
    for (const auto& h : all) b.zone("ns", h, 300, {{h, "web"}});
    b.origin("web", std::vector<std::string>(all.begin(), all.end()), std::nullopt);

    std::mt19937_64 rng(derive_seed(seed, "popularity"));
    json customers = json::array();
    for (int c = 0; c < 4; ++c) {
        std::string name = "customer-" + std::to_string(c);
        b.add(node(name, "24.114.2." + std::to_string(10 + c), 812, "CA", "client"), 20);
        b.client(name, "sdns-resolver");
        customers.push_back(name);
    }
    const double rates[] = {2, 5, 10, 25, 50};
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < 10; ++i) active.push_back(i);        // channel names
    for (std::size_t i = 40; i < 50; ++i) active.push_back(i);       // plain names
    const double duration = 5 * 24 * 3600.0;
    json traffic = json::array();
    for (std::size_t k = 0; k < active.size(); ++k) {
        double rate = rates[rng() % std::size(rates)];
        std::string client = customers[k % customers.size()];
        b.doc["script"].push_back({{"at_s", 0},
                                   {"do", "traffic"},
                                   {"client", client},
                                   {"hostname", all[active[k]]},
                                   {"rate_per_hour", rate},
                                   {"duration_s", duration},
                                   {"fetch", false}});
        traffic.push_back({{"hostname", all[active[k]]}, {"rate_per_hour", rate}});
    }
    json registered = customers;
    registered.push_back("auditor");
    b.doc["providers"].push_back({{"name", "SmartDNS"},
                                  {"resolvers", {"sdns-resolver"}},
                                  {"proxies", {"proxy-1"}},
                                  // The auditor holds an account too; channel names are
                                  // answered from the customer-facing cache.
                                  {"registered", registered},
                                  {"resolver_policy", {{"non_customer", "resolve"}}},
                                  {"proxy_policy", proxy_policy("ip_allowlist", "ip_allowlist", "channel_only")},
                                  {"channels", channels}});
    b.doc["horizon_s"] = duration + 600;
    b.doc["audit"] = {{"auditor", "auditor"},
                      {"resolver", "sdns-resolver"},
                      {"hostnames", hostnames},
                      {"ttl_max", 300},
                      {"duration_s", duration},
                      {"traffic", traffic}};
    return b.doc;
}

json exposure_us(std::uint64_t) {
    return {{"nodes", json::array()},
            {"audit", {{"clients", 100}, {"public_avg", 2.00}, {"sdns_avg", 3.10}, {"region", "US"}}}};
}

const std::map<std::string, std::function<json(std::uint64_t)>, std::less<>>& registry() {
    static const std::map<std::string, std::function<json(std::uint64_t)>, std::less<>> r = {
        {"walkthrough", walkthrough},
        {"vpnuk-sim", [](std::uint64_t s) { return enumeration(s, "drop", "none"); }},
        {"ibvpn-sim", [](std::uint64_t s) { return enumeration(s, {{"static_ip", "203.0.113.99"}}, "none"); }},
        {"mitigated-sim",
         [](std::uint64_t s) { return enumeration(s, {{"static_ip", "203.0.113.99"}}, "resolve_unsupported_correctly"); }},
        {"provider-proxies", provider_proxies},
        {"deproxy-sim", deproxy},
        {"discovery-sim", discovery},
        {"snoop-sim", snoop_sim},
        {"exposure-us", exposure_us},
    };
    return r;
}

}  // namespace

const std::vector<PolicyRow>& classified_providers() {
    static const std::vector<PolicyRow> rows = {
        {"CactusVPN", "ip_allowlist", "open", "universal"},
        {"HideIPVPN", "ip_allowlist", "open", "universal"},
        {"IBVPN", "ip_allowlist", "ip_allowlist", "universal"},
        {"SmartDNSProxy", "ip_allowlist", "ip_allowlist", "channel_only"},
        {"SmartyDNS", "ip_allowlist", "open", "universal"},
        {"Trickbyte", "ip_allowlist", "ip_allowlist", "channel_only"},
        {"Uflix", "ip_allowlist", "ip_allowlist", "channel_only"},
        {"VPNUK", "ip_allowlist", "ip_allowlist", "universal"},
    };
    return rows;
}

std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
}

json get(std::string_view name, std::uint64_t seed) {
    auto it = registry().find(name);
    if (it == registry().end()) throw ConfigError("unknown preset '" + std::string(name) + "'");
    return it->second(seed);
}

}  // namespace sdns::presets
