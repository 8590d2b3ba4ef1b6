#include "sdns/app/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "sdns/audit/deproxy.hpp"
#include "sdns/audit/discovery.hpp"
#include "sdns/audit/estimate.hpp"
#include "sdns/audit/exposure.hpp"
#include "sdns/audit/report.hpp"
#include "sdns/audit/snoop.hpp"
#include "sdns/netlab/scenario.hpp"
#include "sdns/presets.hpp"

namespace sdns::app {

using nlohmann::json;
using namespace std::chrono_literals;

namespace {

const json& audit_block(const json& doc) {
    if (!doc.contains("audit") || !doc["audit"].is_object())
        throw ConfigError("document has no \"audit\" block for this command");
    return doc["audit"];
}

template <class T>
T audit_field(const json& doc, const char* key) {
    const auto& a = audit_block(doc);
    if (!a.contains(key)) throw ConfigError(std::string("audit block lacks \"") + key + "\"");
    try {
        return a[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("audit.") + key + ": " + e.what());
    }
}

Ipv4 node_ip(const netlab::World& w, std::string_view name) { return w.topology().node(w.topology().id_of(name)).ip; }

/// An IPv4 literal or the name of a node.
Ipv4 address_of(const netlab::World& w, const std::string& text) {
    if (auto ip = Ipv4::parse(text)) return *ip;
    auto id = w.topology().find_name(text);
    if (!id) throw ConfigError("unknown node or address '" + text + "'");
    return w.topology().node(*id).ip;
}

std::unique_ptr<netlab::World> world_for(const json& doc, std::uint64_t seed,
                                         netlab::LogMode mode = netlab::LogMode::Summary) {
    return netlab::build_world(netlab::parse_scenario(doc), seed, mode);
}

std::optional<Ipv4> resolve_now(netlab::World& w, const std::string& client, const std::string& hostname) {
    auto& agent = w.client(client);
    bool done = false;
    std::optional<Ipv4> out;
    agent.resolve(hostname, true, [&](std::optional<dns::DnsMessage> m) {
        done = true;
        if (!m) return;
        for (const auto& rr : m->answers)
            if (rr.is_a()) {
                out = rr.address();
                return;
            }
    });
    w.sim().run_until([&] { return done; }, w.sim().now() + 10s);
    return out;
}

struct Campaign {
    std::map<std::string, std::vector<audit::ProbeRecord>> records;
    std::vector<std::uint64_t> hourly_digests;
    std::size_t probes_sent = 0;
    VirtualTime duration{0};
};

std::vector<std::string> snoop_hostnames(const json& doc, const SnoopOptions& opts) {
    if (opts.hostnames) return *opts.hostnames;
    return audit_field<std::vector<std::string>>(doc, "hostnames");
}

VirtualTime snoop_duration(const json& doc, const SnoopOptions& opts) {
    double seconds = opts.hours ? *opts.hours * 3600 : audit_field<double>(doc, "duration_s");
    if (!(seconds > 0)) throw ConfigError("snoop duration must be positive");
    return std::chrono::duration_cast<VirtualTime>(std::chrono::duration<double>(seconds));
}

/// Runs the document's script with (probe) or without (control) an auditor campaign.
Campaign run_campaign(const json& doc, std::uint64_t seed, const SnoopOptions& opts, bool probe) {
    auto sc = netlab::parse_scenario(doc);
    auto w = netlab::build_world(sc, seed, netlab::LogMode::Summary);
    netlab::schedule_script(*w, sc.script, seed);
    auto duration = snoop_duration(doc, opts);
    auto ttl = audit_field<std::uint32_t>(doc, "ttl_max");
    std::vector<audit::CampaignTarget> targets;
    for (const auto& h : snoop_hostnames(doc, opts)) targets.push_back({dns::normalize_name(h), ttl});

    std::optional<audit::ProbeCampaign> campaign;
    if (probe) {
        std::mt19937_64 phase(derive_seed(seed, "probe-phase"));
        VirtualTime start{static_cast<std::int64_t>(phase() % 1000)};
        campaign.emplace(*w, audit_field<std::string>(doc, "auditor"),
                         node_ip(*w, audit_field<std::string>(doc, "resolver")), targets, start, duration);
    }
    Campaign out;
    out.duration = duration;
    for (VirtualTime t = 1h; t <= duration; t += 1h) {
        w->sim().run_until(t);
        out.hourly_digests.push_back(w->cache_digest(t));
    }
    w->sim().run_until(duration + 10min);
    if (campaign) {
        out.records = campaign->all();
        out.probes_sent = campaign->probes_sent();
        for (const auto& t : targets) out.records.try_emplace(t.hostname);
    }
    return out;
}

std::size_t hours_of(VirtualTime d) { return static_cast<std::size_t>((d + 1h - 1ms) / 1h); }

std::string csv_text(const std::function<void(std::ostream&)>& write) {
    std::ostringstream os;
    write(os);
    return os.str();
}

std::vector<Ipv4> registered_ips(const netlab::World& w, const json& provider) {
    std::vector<Ipv4> out;
    for (const auto& r : provider.value("registered", json::array())) out.push_back(address_of(w, r.get<std::string>()));
    return out;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_config(const std::string& preset_or_path, std::uint64_t seed) {
    auto known = presets::names();
    if (std::find(known.begin(), known.end(), preset_or_path) != known.end()) return presets::get(preset_or_path, seed);
    if (!std::filesystem::exists(preset_or_path))
        throw IoError("'" + preset_or_path + "' is neither a preset nor an existing file");
    try {
        return json::parse(read_file(preset_or_path));
    } catch (const json::parse_error& e) {
        throw ConfigError(preset_or_path + ": " + e.what());
    }
}

CommandOutput simulate(const json& doc, std::uint64_t seed) {
    auto sc = netlab::parse_scenario(doc);
    auto w = netlab::build_world(sc, seed, netlab::LogMode::Full);
    netlab::schedule_script(*w, sc.script, seed);
    if (sc.horizon)
        w->sim().run_until(*sc.horizon);
    else
        w->sim().run();
    const auto& log = w->sim().log();
    CommandOutput out;
    json counts = json::object();
    for (std::size_t k = 0; k < static_cast<std::size_t>(netlab::EventKind::kCount); ++k) {
        auto kind = static_cast<netlab::EventKind>(k);
        if (auto n = log.count(kind)) counts[netlab::to_string(kind)] = n;
    }
    out.findings = {{"events", log.total()},
                    {"fingerprint", to_hex(log.fingerprint())},
                    {"end_time_ms", w->sim().now().count()},
                    {"counts", counts}};
    out.files["events.jsonl"] = csv_text([&](std::ostream& os) { log.write_jsonl(os, w->topology()); });
    return out;
}

CommandOutput snoop(const json& doc, std::uint64_t seed, const SnoopOptions& opts) {
    auto probed = run_campaign(doc, seed, opts, true);
    auto control = run_campaign(doc, seed, opts, false);
    std::size_t mismatched = 0;
    for (std::size_t i = 0; i < probed.hourly_digests.size(); ++i)
        mismatched += probed.hourly_digests[i] != control.hourly_digests[i];

    CommandOutput out;
    json per_host = json::object();
    json hit_names = json::array();
    for (const auto& [host, recs] : probed.records) {
        std::size_t hits = 0, misses = 0, unknown = 0;
        for (const auto& r : recs) {
            hits += r.outcome == audit::ProbeOutcome::Hit;
            misses += r.outcome == audit::ProbeOutcome::Miss;
            unknown += r.outcome == audit::ProbeOutcome::Indeterminate;
        }
        per_host[host] = {{"probes", recs.size()}, {"hits", hits}, {"misses", misses}, {"indeterminate", unknown}};
        if (hits) hit_names.push_back(host);
    }
    json traffic = json::array();
    if (audit_block(doc).contains("traffic"))
        for (const auto& t : doc["audit"]["traffic"]) traffic.push_back(t["hostname"]);
    out.findings = {{"probes_sent", probed.probes_sent},
                    {"hours", hours_of(probed.duration)},
                    {"digest_checkpoints", probed.hourly_digests.size()},
                    {"digest_mismatches", mismatched},
                    {"caches_unchanged", mismatched == 0},
                    {"hostnames_with_hits", hit_names},
                    {"hostnames_with_traffic", traffic},
                    {"hostnames", per_host}};
    out.files["heatmap.csv"] = csv_text(
        [&](std::ostream& os) { audit::write_heatmap_csv(os, probed.records, VirtualTime{0}, hours_of(probed.duration)); });
    return out;
}

CommandOutput popularity(const json& doc, std::uint64_t seed, const SnoopOptions& opts, double lambda_client) {
    auto probed = run_campaign(doc, seed, opts, true);
    auto ttl = audit_field<std::uint32_t>(doc, "ttl_max");
    std::map<std::string, double> truth;
    if (audit_block(doc).contains("traffic"))
        for (const auto& t : doc["audit"]["traffic"]) truth[t["hostname"]] += t["rate_per_hour"].get<double>();

    CommandOutput out;
    std::vector<audit::PopularityRow> rows;
    json estimates = json::object();
    for (const auto& [host, recs] : probed.records) {
        audit::PopularityRow row;
        row.hostname = host;
        row.erratic = audit::erratic_ttls(recs);
        json entry = {{"erratic", row.erratic}};
        try {
            row.estimate = audit::estimate_rate(recs, ttl);
            row.users = audit::estimate_users(row.estimate->lambda_per_hour, lambda_client);
            entry["estimate"] = audit::to_json(*row.estimate);
            entry["users"] = row.users;
        } catch (const audit::InsufficientData&) {
            entry["estimate"] = nullptr;
        }
        if (auto it = truth.find(host); it != truth.end()) {
            entry["true_rate_per_hour"] = it->second;
            if (row.estimate) entry["ci_covers_truth"] = row.estimate->covers(it->second);
        }
        estimates[host] = entry;
        rows.push_back(std::move(row));
    }
    out.findings = {{"lambda_client", lambda_client}, {"ttl_max", ttl}, {"hostnames", estimates}};
    out.files["popularity.csv"] = csv_text([&](std::ostream& os) { audit::write_popularity_csv(os, rows); });
    return out;
}

json estimate_users(double lambda, double lambda_client) {
    if (!(lambda >= 0) || !(lambda_client > 0)) throw ConfigError("rates must be non-negative and lambda_c positive");
    return {{"lambda_per_hour", lambda},
            {"lambda_client", lambda_client},
            {"users", audit::estimate_users(lambda, lambda_client)}};
}

json estimate_profit(double users, double price, double link_cost, double link_capacity_mbps) {
    if (!(users >= 0) || !(price >= 0) || !(link_cost >= 0) || !(link_capacity_mbps > 0))
        throw ConfigError("profit inputs must be non-negative with a positive link capacity");
    audit::ProfitModel model;
    model.price_per_user = price;
    model.link_cost = link_cost;
    model.link_capacity_mbps = link_capacity_mbps;
    double profit = audit::estimate_profit(users, model);
    return {{"users", users},
            {"price", price},
            {"users_per_link", model.users_per_link()},
            {"link_cost", link_cost},
            {"monthly_profit", profit},
            {"monthly_profit_rounded", std::llround(profit)}};
}

CommandOutput enumerate(const json& doc, std::uint64_t seed, const EnumerateOptions& opts) {
    auto w = world_for(doc, seed);
    std::vector<Ipv4> candidates;
    for (const auto& c : audit_field<std::vector<std::string>>(doc, "candidates")) candidates.push_back(address_of(*w, c));
    if (opts.limit && *opts.limit < candidates.size()) candidates.resize(*opts.limit);

    audit::EnumerationConfig cfg;
    cfg.attacker_node = audit_field<std::string>(doc, "attacker");
    cfg.resolver = node_ip(*w, audit_field<std::string>(doc, "resolver"));
    cfg.variant = opts.variant;
    cfg.domain = audit_field<std::string>(
        doc, opts.variant == audit::EnumerationVariant::ThirdParty ? "domain" : "channel_domain");
    cfg.seed = seed;
    auto verdicts = audit::enumerate_clients(*w, cfg, candidates);

    std::set<Ipv4> registered;
    auto provider_name = audit_block(doc).value("provider", std::string());
    for (const auto& p : doc.value("providers", json::array()))
        if (p.value("name", std::string()) == provider_name)
            for (auto ip : registered_ips(*w, p)) registered.insert(ip);

    CommandOutput out;
    json list = json::array();
    std::size_t correct = 0, reg = 0, unreg = 0, unknown = 0;
    for (const auto& v : verdicts) {
        list.push_back(audit::to_json(v));
        reg += v.verdict == audit::Verdict::Registered;
        unreg += v.verdict == audit::Verdict::Unregistered;
        unknown += v.verdict == audit::Verdict::Indeterminate;
        correct += v.verdict != audit::Verdict::Indeterminate &&
                   (v.verdict == audit::Verdict::Registered) == registered.contains(v.candidate);
    }
    out.findings = {{"variant", opts.variant == audit::EnumerationVariant::ThirdParty ? "third_party" : "channel"},
                    {"candidates", verdicts.size()},
                    {"registered", reg},
                    {"unregistered", unreg},
                    {"indeterminate", unknown},
                    {"verdicts", list}};
    if (!registered.empty()) out.findings["agreeing_with_registry"] = correct;
    return out;
}

CommandOutput deproxy_demo(const json& doc, std::uint64_t seed) {
    auto sc = netlab::parse_scenario(doc);
    auto w = netlab::build_world(sc, seed, netlab::LogMode::Summary);
    netlab::schedule_script(*w, sc.script, seed);
    w->sim().run();
    auto findings = audit::detect_deproxy(w->origin(audit_field<std::string>(doc, "origin")).access_log(), w->topology());

    std::set<Ipv4> sdns_clients, direct_clients, flagged;
    for (const auto& n : audit_field<std::vector<std::string>>(doc, "sdns_clients")) sdns_clients.insert(node_ip(*w, n));
    for (const auto& n : audit_field<std::vector<std::string>>(doc, "direct_clients"))
        direct_clients.insert(node_ip(*w, n));
    json sessions = json::array();
    std::size_t indeterminate = 0;
    for (const auto& f : findings) {
        sessions.push_back(audit::to_json(f));
        if (f.indeterminate()) ++indeterminate;
        else if (*f.sdns && f.literal_request_ip) flagged.insert(*f.literal_request_ip);
    }
    std::size_t tp = 0, fp = 0;
    for (auto ip : flagged) (sdns_clients.contains(ip) ? tp : fp)++;
    json flagged_list = json::array();
    for (auto ip : flagged) flagged_list.push_back(ip.to_string());
    CommandOutput out;
    out.findings = {{"sessions", sessions},
                    {"flagged_client_ips", flagged_list},
                    {"true_positives", tp},
                    {"false_positives", fp},
                    {"false_negatives", sdns_clients.size() - tp},
                    {"indeterminate", indeterminate}};
    return out;
}

CommandOutput discover_proxies(const json& doc, std::uint64_t seed, const std::optional<std::string>& ground_truth_csv) {
    auto w = world_for(doc, seed);
    std::string csv;
    if (ground_truth_csv) {
        csv = *ground_truth_csv;
    } else {
        for (const auto& line : audit_field<std::vector<std::string>>(doc, "ground_truth")) csv += line + "\n";
    }
    std::istringstream in(csv);
    auto rows = audit::read_ground_truth(in);
    auto truth = audit::aggregate_ground_truth(rows);

    auto reg_node = audit_field<std::string>(doc, "registered_vantage");
    std::map<std::string, Ipv4> answers;
    for (const auto& h : audit_field<std::vector<std::string>>(doc, "hostnames"))
        if (auto ip = resolve_now(*w, reg_node, dns::normalize_name(h))) answers[dns::normalize_name(h)] = *ip;
    auto candidates = audit::discover_candidates(answers, truth);

    auto reg = audit::sim_vantage(*w, reg_node);
    auto unreg = audit::sim_vantage(*w, audit_field<std::string>(doc, "unregistered_vantage"));
    std::set<Ipv4> confirmed;
    json cand = json::array();
    for (const auto& c : candidates) {
        bool ok = audit::confirm_proxy(c.ip, c.hostname, reg, unreg);
        auto j = audit::to_json(c);
        j["confirmed"] = ok;
        cand.push_back(j);
        if (ok) confirmed.insert(c.ip);
    }
    json confirmed_list = json::array();
    for (auto ip : confirmed) confirmed_list.push_back(ip.to_string());
    CommandOutput out;
    out.findings = {{"ground_truth_rows", rows.size()}, {"candidates", cand}, {"confirmed_proxies", confirmed_list}};
    if (audit_block(doc).contains("expected_proxies")) {
        std::set<Ipv4> expected;
        for (const auto& s : doc["audit"]["expected_proxies"]) expected.insert(Ipv4::from_string(s.get<std::string>()));
        std::size_t missing = 0, extra = 0;
        for (auto ip : expected) missing += !confirmed.contains(ip);
        for (auto ip : confirmed) extra += !expected.contains(ip);
        out.findings["missing_proxies"] = missing;
        out.findings["false_positives"] = extra;
    }
    return out;
}

CommandOutput classify_proxies(const json& doc, std::uint64_t seed) {
    auto w = world_for(doc, seed);
    auto reg = audit::sim_vantage(*w, audit_field<std::string>(doc, "registered_vantage"));
    auto unreg = audit::sim_vantage(*w, audit_field<std::string>(doc, "unregistered_vantage"));
    auto channel = audit_field<std::string>(doc, "channel_hostname");
    auto other = audit_field<std::string>(doc, "non_channel_hostname");
    std::vector<audit::ClassificationRow> rows;
    json list = json::array();
    for (const auto& row : audit_field<json>(doc, "proxies")) {
        auto provider = row.at("provider").get<std::string>();
        auto c = audit::classify_proxy(address_of(*w, row.at("proxy").get<std::string>()), channel, other, reg, unreg);
        auto j = audit::to_json(c);
        j["provider"] = provider;
        list.push_back(j);
        rows.push_back({provider, c});
    }
    CommandOutput out;
    out.findings = {{"proxies", list}};
    out.files["classification.csv"] = csv_text([&](std::ostream& os) { audit::write_classification_csv(os, rows); });
    return out;
}

CommandOutput fingerprint(const json& doc, std::uint64_t seed, const std::optional<std::string>& signature) {
    auto w = world_for(doc, seed);
    std::string sig = signature ? *signature : audit_field<std::string>(doc, "signature");
    std::string scanner_node = audit_block(doc).value("unregistered_vantage", std::string());
    if (scanner_node.empty()) throw ConfigError("audit block lacks \"unregistered_vantage\"");
    auto scanner = audit::sim_vantage(*w, scanner_node);
    std::vector<Ipv4> hosts;
    for (const auto& n : w->topology().nodes())
        if (n.name != scanner_node) hosts.push_back(n.ip);
    auto found = audit::fingerprint_scan(hosts, sig, scanner);
    std::sort(found.begin(), found.end());
    json list = json::array();
    for (auto ip : found) list.push_back(ip.to_string());
    CommandOutput out;
    out.findings = {{"signature", sig}, {"hosts_scanned", hosts.size()}, {"matches", list}};
    return out;
}

CommandOutput path_exposure(const json& doc, std::uint64_t seed) {
    const auto& a = audit_block(doc);
    audit::ExposureSummary s;
    std::size_t clients = 0;
    if (a.contains("public_resolver")) {
        auto topo = netlab::parse_scenario(doc).topology;
        std::vector<netlab::NodeId> ids;
        for (const auto& n : audit_field<std::vector<std::string>>(doc, "clients")) ids.push_back(topo.id_of(n));
        clients = ids.size();
        s = audit::compare_exposure(topo, ids, topo.id_of(audit_field<std::string>(doc, "public_resolver")),
                                    topo.id_of(audit_field<std::string>(doc, "sdns_resolver")));
    } else {
        clients = audit_field<std::size_t>(doc, "clients");
        auto fx = audit::calibrated_exposure_topology(clients, audit_field<double>(doc, "public_avg"),
                                                      audit_field<double>(doc, "sdns_avg"), seed);
        s = audit::compare_exposure(fx.topology, fx.clients, fx.public_resolver, fx.sdns_resolver);
    }
    CommandOutput out;
    out.findings = {{"clients", clients},
                    {"region", a.value("region", std::string())},
                    {"public_avg_ases", s.public_avg},
                    {"sdns_avg_ases", s.sdns_avg},
                    {"increase_pct", s.increase_pct}};
    return out;
}

}  // namespace sdns::app
