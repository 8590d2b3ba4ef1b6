#include "sdns/netlab/scenario.hpp"

#include <fstream>

#include "sdns/netlab/traffic.hpp"

namespace sdns::netlab {

using nlohmann::json;

namespace {

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    return j.at(key);
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return require(j, key, where).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + ": bad '" + key + "': " + e.what());
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return get<T>(j, key, where);
}

Ipv4 parse_ip(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected an IPv4 string");
    auto ip = Ipv4::parse(j.get<std::string>());
    if (!ip) throw ConfigError(where + ": bad IPv4 '" + j.get<std::string>() + "'");
    return *ip;
}

Ipv4 address_of(const json& j, const Topology& topo, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected a node name or IPv4");
    auto s = j.get<std::string>();
    if (auto ip = Ipv4::parse(s)) return *ip;
    auto id = topo.find_name(s);
    if (!id) throw ConfigError(where + ": unknown node '" + s + "'");
    return topo.node(*id).ip;
}

proxy::AuthMode parse_auth(const json& j, const char* key) {
    auto s = get_or<std::string>(j, key, "ip_allowlist", "proxy_policy");
    if (s == "ip_allowlist") return proxy::AuthMode::IpAllowlist;
    if (s == "open") return proxy::AuthMode::Open;
    throw ConfigError("proxy_policy: unknown auth mode '" + s + "'");
}

VirtualTime at_of(const json& j, const std::string& where) {
    double s = get_or<double>(j, "at_s", 0.0, where);
    if (s < 0) throw ConfigError(where + ": negative at_s");
    return VirtualTime(static_cast<std::int64_t>(s * 1000.0));
}

}  // namespace

resolver::ResolverPolicy parse_resolver_policy(const json& j) {
    resolver::ResolverPolicy p;
    if (j.is_null()) return p;
    if (j.contains("non_customer")) {
        const auto& m = j.at("non_customer");
        if (m.is_string() && m == "drop") {
            p.non_customer_mode = resolver::Drop{};
        } else if (m.is_string() && m == "resolve") {
            p.non_customer_mode = resolver::ResolveCorrectly{};
        } else if (m.is_object() && m.contains("static_ip")) {
            p.non_customer_mode = resolver::StaticIp{parse_ip(m.at("static_ip"), "resolver_policy.static_ip")};
        } else {
            throw ConfigError("resolver_policy: non_customer must be \"drop\", \"resolve\" or {\"static_ip\": ...}");
        }
    }
    auto mitigation = get_or<std::string>(j, "mitigation", "none", "resolver_policy");
    if (mitigation == "none") {
        p.mitigation = resolver::Mitigation::None;
    } else if (mitigation == "resolve_unsupported_correctly") {
        p.mitigation = resolver::Mitigation::ResolveUnsupportedCorrectly;
    } else if (mitigation == "resolve_all_correctly_proxy_channels") {
        p.mitigation = resolver::Mitigation::ResolveAllCorrectlyProxyChannels;
    } else {
        throw ConfigError("resolver_policy: unknown mitigation '" + mitigation + "'");
    }
    p.answer_ttl_default = get_or<std::uint32_t>(j, "answer_ttl", p.answer_ttl_default, "resolver_policy");
    return p;
}

resolver::ChannelTable parse_channels(const json& j, const Topology& topo) {
    resolver::ChannelTable table;
    if (j.is_null()) return table;
    if (!j.is_array()) throw ConfigError("channels: expected an array");
    for (const auto& c : j) {
        resolver::ChannelEntry e;
        e.suffix = get<std::string>(c, "suffix", "channel");
        for (const auto& p : require(c, "pool", "channel '" + e.suffix + "'"))
            e.proxy_pool.push_back(address_of(p, topo, "channel '" + e.suffix + "' pool"));
        e.advertised = get_or<bool>(c, "advertised", true, "channel");
        if (c.contains("ttl")) e.answer_ttl = get<std::uint32_t>(c, "ttl", "channel");
        try {
            table.add(std::move(e));
        } catch (const dns::InvalidName& ex) {
            throw ConfigError(std::string("channel: ") + ex.what());
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& ex) {
            throw ConfigError(ex.what());
        }
    }
    return table;
}

proxy::ProxyPolicy parse_proxy_policy(const json& j, const resolver::ChannelTable& channels) {
    proxy::ProxyPolicy p;
    if (j.is_null()) {
        p.authz = proxy::ChannelOnly{channels};
        return p;
    }
    p.http_auth = parse_auth(j, "http_auth");
    p.sni_auth = parse_auth(j, "sni_auth");
    auto authz = get_or<std::string>(j, "authz", "channel_only", "proxy_policy");
    if (authz == "channel_only") {
        p.authz = proxy::ChannelOnly{channels};
    } else if (authz == "universal") {
        p.authz = proxy::Universal{};
    } else {
        throw ConfigError("proxy_policy: unknown authz '" + authz + "'");
    }
    p.banner_text = get_or<std::string>(j, "banner", "", "proxy_policy");
    return p;
}

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) throw ConfigError("scenario: expected a JSON object");
    Scenario s;
    s.document = doc;
    try {
        for (const auto& n : get_or<json>(doc, "nodes", json::array(), "scenario")) {
            NodeSpec spec;
            spec.name = get<std::string>(n, "name", "node");
            std::string where = "node '" + spec.name + "'";
            spec.ip = parse_ip(require(n, "ip", where), where);
            spec.as_number = get_or<std::uint32_t>(n, "as", 0, where);
            spec.region = get_or<std::string>(n, "region", "", where);
            auto role = get_or<std::string>(n, "role", "client", where);
            auto parsed = parse_role(role);
            if (!parsed) throw ConfigError(where + ": unknown role '" + role + "'");
            spec.role = *parsed;
            spec.can_spoof = get_or<bool>(n, "can_spoof", false, where);
            s.topology.add_node(std::move(spec));
        }
        for (const auto& l : get_or<json>(doc, "links", json::array(), "scenario")) {
            auto a = s.topology.find_name(get<std::string>(l, "a", "link"));
            auto b = s.topology.find_name(get<std::string>(l, "b", "link"));
            if (!a || !b) throw ConfigError("link: unknown endpoint in " + l.dump());
            s.topology.add_link(*a, *b, VirtualTime(get_or<std::int64_t>(l, "latency_ms", 1, "link")));
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    for (const auto& a : get_or<json>(doc, "script", json::array(), "scenario")) {
        ScriptAction act;
        act.at = at_of(a, "script");
        act.op = get<std::string>(a, "do", "script");
        act.args = a;
        s.script.push_back(std::move(act));
    }
    if (doc.contains("horizon_s"))
        s.horizon = VirtualTime(static_cast<std::int64_t>(get<double>(doc, "horizon_s", "scenario") * 1000.0));
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

std::unique_ptr<World> build_world(const Scenario& scenario, std::uint64_t seed, LogMode mode) {
    auto world = std::make_unique<World>(scenario.topology, seed, mode);
    const auto& doc = scenario.document;
    const auto& topo = world->topology();
    auto node_name = [&](const json& j, const char* key, const std::string& where) {
        auto name = get<std::string>(j, key, where);
        if (!topo.find_name(name)) throw ConfigError(where + ": unknown node '" + name + "'");
        return name;
    };
    try {
        std::map<std::string, std::vector<AuthZone>> zones;
        for (const auto& z : get_or<json>(doc, "zones", json::array(), "scenario")) {
            AuthZone zone;
            zone.zone = get<std::string>(z, "zone", "zone");
            std::string where = "zone '" + zone.zone + "'";
            zone.ttl = get_or<std::uint32_t>(z, "ttl", 300, where);
            if (zone.ttl == 0) throw ConfigError(where + ": ttl must be positive");
            const json records = get_or<json>(z, "records", json::object(), where);
            for (const auto& [name, ips] : records.items()) {
                auto& list = zone.records[name];
                if (ips.is_array()) {
                    for (const auto& ip : ips) list.push_back(address_of(ip, topo, where));
                } else {
                    list.push_back(address_of(ips, topo, where));
                }
            }
            if (z.contains("wildcard")) zone.wildcard = address_of(z.at("wildcard"), topo, where);
            zones[node_name(z, "server", where)].push_back(std::move(zone));
        }
        for (auto& [server, list] : zones) world->add_authoritative(server, std::move(list));

        for (const auto& o : get_or<json>(doc, "origins", json::array(), "scenario")) {
            OriginConfig cfg;
            std::string node = node_name(o, "node", "origin");
            for (const auto& h : get_or<std::vector<std::string>>(o, "hostnames", {}, "origin")) cfg.hostnames.insert(h);
            if (o.contains("allowed_regions")) {
                auto regions = get<std::vector<std::string>>(o, "allowed_regions", "origin");
                cfg.geofence.allowed_regions = std::set<std::string>(regions.begin(), regions.end());
            }
            cfg.deproxy_page = get_or<bool>(o, "deproxy", false, "origin");
            if (o.contains("body")) cfg.body = get<std::string>(o, "body", "origin");
            world->add_origin(node, std::move(cfg));
        }

        for (const auto& h : get_or<json>(doc, "honest_resolvers", json::array(), "scenario"))
            world->add_honest_resolver(node_name(json{{"node", h}}, "node", "honest_resolvers"));

        for (const auto& p : get_or<json>(doc, "providers", json::array(), "scenario")) {
            ProviderConfig cfg;
            cfg.name = get<std::string>(p, "name", "provider");
            std::string where = "provider '" + cfg.name + "'";
            auto channels = parse_channels(get_or<json>(p, "channels", json(), where), topo);
            cfg.resolver.policy = parse_resolver_policy(get_or<json>(p, "resolver_policy", json(), where));
            cfg.proxy_policy = parse_proxy_policy(get_or<json>(p, "proxy_policy", json(), where), channels);
            cfg.resolver.channels = std::move(channels);
            for (const auto& ip : get_or<json>(p, "registered", json::array(), where))
                cfg.registered.insert(address_of(ip, topo, where + " registered"));
            for (const auto& r : get_or<json>(p, "resolvers", json::array(), where))
                cfg.resolver_nodes.push_back(node_name(json{{"n", r}}, "n", where));
            for (const auto& r : get_or<json>(p, "proxies", json::array(), where))
                cfg.proxy_nodes.push_back(node_name(json{{"n", r}}, "n", where));
            world->add_provider(std::move(cfg));
        }

        for (const auto& c : get_or<json>(doc, "clients", json::array(), "scenario")) {
            auto node = node_name(c, "node", "client");
            if (c.contains("resolver")) {
                auto r = node_name(c, "resolver", "client '" + node + "'");
                world->add_client(node, r);
            } else {
                world->add_client(node);
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return world;
}

namespace {

/// Node-valued arguments each op takes, and whether a provider is named.
struct OpShape {
    std::vector<const char*> nodes;
    bool provider = false;
};

const std::map<std::string, OpShape>& op_shapes() {
    static const std::map<std::string, OpShape> shapes = {
        {"fetch", {{"client"}}},
        {"browse", {{"client"}}},
        {"traffic", {{"client"}}},
        {"resolve", {{"client"}}},
        {"probe", {{"client", "resolver"}}},
        {"register", {{}, true}},
        {"unregister", {{}, true}},
        {"reconfigure", {{}, true}},
        {"spoofed_query", {{"from", "resolver"}}},
        {"node_down", {{"node"}}},
        {"node_up", {{"node"}}},
    };
    return shapes;
}

void validate(const World& world, const ScriptAction& a) {
    auto it = op_shapes().find(a.op);
    if (it == op_shapes().end()) throw ScriptError("unknown action '" + a.op + "'");
    for (const char* key : it->second.nodes) {
        if (!a.args.contains(key)) {
            if (std::string_view(key) == "resolver" && a.op == "probe") continue;
            throw ScriptError("action '" + a.op + "' needs '" + key + "'");
        }
        const auto& v = a.args.at(key);
        if (!v.is_string() || !world.topology().find_name(v.get<std::string>()))
            throw ScriptError("action '" + a.op + "' references unknown node " + v.dump());
    }
    if (it->second.provider) {
        auto name = a.args.value("provider", "");
        if (!world.providers().contains(name)) throw ScriptError("action '" + a.op + "' references unknown provider '" + name + "'");
    }
}

std::optional<Ipv4> resolver_arg(World& world, const json& args) {
    if (!args.contains("resolver")) return std::nullopt;
    return world.topology().node(world.topology().id_of(args.at("resolver").get<std::string>())).ip;
}

}  // namespace

void schedule_script(World& world, const std::vector<ScriptAction>& script, std::uint64_t seed) {
    for (const auto& a : script) validate(world, a);
    Simulator& sim = world.sim();
    for (const auto& a : script) {
        const json& args = a.args;
        if (a.op == "traffic") {
            TrafficSpec spec;
            spec.client = args.at("client");
            spec.hostname = get<std::string>(args, "hostname", "traffic");
            spec.rate_per_hour = get<double>(args, "rate_per_hour", "traffic");
            spec.start = a.at;
            spec.duration = VirtualTime(static_cast<std::int64_t>(get<double>(args, "duration_s", "traffic") * 1000));
            spec.fetch = get_or<bool>(args, "fetch", true, "traffic");
            spec.https = get_or<bool>(args, "https", true, "traffic");
            world.client(spec.client);
            poisson_traffic(world, spec, seed);
            continue;
        }
        sim.at(a.at, [&world, &sim, a] {
            const json& args = a.args;
            NodeId actor = 0;
            for (const char* key : {"client", "from", "node"})
                if (args.contains(key)) actor = world.topology().id_of(args.at(key).get<std::string>());
            sim.log().record(sim.now(), actor, EventKind::Action, 0, fnv1a64(a.op),
                             sim.log().keeps_events() ? args.dump() : "");
            if (a.op == "fetch" || a.op == "browse") {
                auto& client = world.client(args.at("client").get<std::string>());
                if (a.op == "browse") {
                    client.browse(args.at("url").get<std::string>(), [](std::vector<FetchResult>) {});
                    return;
                }
                auto req = FetchRequest::parse_url(args.at("url").get<std::string>());
                if (args.contains("connect_to")) req.connect_to = address_of(args.at("connect_to"), world.topology(), "fetch");
                client.fetch(std::move(req), [](FetchResult) {});
            } else if (a.op == "resolve" || a.op == "probe") {
                auto& client = world.client(args.at("client").get<std::string>());
                bool rd = a.op == "resolve" && args.value("rd", true);
                if (a.op == "probe")
                    sim.log().record(sim.now(), client.node(), EventKind::Probe, 0,
                                     fnv1a64(args.at("hostname").get<std::string>()));
                client.resolve(args.at("hostname").get<std::string>(), rd, [](std::optional<dns::DnsMessage>) {},
                               resolver_arg(world, args));
            } else if (a.op == "register" || a.op == "unregister") {
                auto& p = world.provider(args.at("provider").get<std::string>());
                auto ip = address_of(args.at("ip"), world.topology(), a.op);
                if (a.op == "register") {
                    p.registry->add(ip);
                } else {
                    p.registry->remove(ip);
                }
            } else if (a.op == "reconfigure") {
                world.reconfigure_provider(args.at("provider").get<std::string>(),
                                           parse_resolver_policy(args.value("resolver_policy", json::object())));
            } else if (a.op == "spoofed_query") {
                NodeId from = world.topology().id_of(args.at("from").get<std::string>());
                auto claim = address_of(args.at("claim"), world.topology(), "spoofed_query");
                auto dst = *resolver_arg(world, args);
                auto q = dns::DnsMessage::query(static_cast<std::uint16_t>(args.value("id", 4242)),
                                                args.at("hostname").get<std::string>(), true);
                sim.send_udp(from, claim, dst, kStubPort, kDnsPort, dns::encode(q), true);
            } else if (a.op == "node_down" || a.op == "node_up") {
                sim.set_node_up(world.topology().id_of(args.at("node").get<std::string>()), a.op == "node_up");
            }
        });
    }
}

EventLog run_scenario(const Scenario& scenario, std::uint64_t seed, LogMode mode) {
    auto world = build_world(scenario, seed, mode);
    schedule_script(*world, scenario.script, seed);
    if (scenario.horizon) {
        world->sim().run_until(*scenario.horizon);
    } else {
        world->sim().run();
    }
    return world->sim().log();
}

}  // namespace sdns::netlab
