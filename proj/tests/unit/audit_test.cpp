#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "../support/worlds.hpp"
#include "sdns/audit/deproxy.hpp"
#include "sdns/audit/discovery.hpp"
#include "sdns/audit/enumerate.hpp"
#include "sdns/audit/estimate.hpp"
#include "sdns/audit/exposure.hpp"
#include "sdns/audit/report.hpp"
#include "sdns/audit/snoop.hpp"

using namespace sdns;
using namespace sdns::audit;
using namespace std::chrono_literals;
using Catch::Approx;
using nlohmann::json;

namespace {

ProbeRecord hit(std::string host, VirtualTime tp, std::uint32_t tl, std::uint32_t ttl_max = 300) {
    ProbeRecord p;
    p.hostname = std::move(host);
    p.probe_time = tp;
    p.outcome = ProbeOutcome::Hit;
    p.remaining_ttl = tl;
    p.ttl_max = ttl_max;
    return p;
}

ProbeRecord miss(std::string host, VirtualTime tp, std::uint32_t ttl_max = 300) {
    ProbeRecord p;
    p.hostname = std::move(host);
    p.probe_time = tp;
    p.outcome = ProbeOutcome::Miss;
    p.ttl_max = ttl_max;
    return p;
}

Ipv4 ip_of(netlab::World& w, std::string_view node) { return w.topology().node(w.topology().id_of(node)).ip; }

std::vector<Ipv4> ips(const json& arr) {
    std::vector<Ipv4> out;
    for (const auto& s : arr) out.push_back(Ipv4::from_string(s.get<std::string>()));
    return out;
}

}  // namespace

// ---------------------------------------------------------------- refresh and rate

TEST_CASE("refresh time arithmetic", "[audit][estimate]") {
    CHECK(refresh_time(hit("h", 1000s, 200)) == 900s);
    CHECK(refresh_time(hit("h", 1000s, 300)) == 1000s);
    CHECK_THROWS_AS(refresh_time(miss("h", 1000s)), InsufficientData);
}

TEST_CASE("rate from evenly spaced refreshes", "[audit][estimate]") {
    // Refreshes at 0, 400, 800 with TTL 300: idle gaps of 100 s, so 36 per hour.
    std::vector<ProbeRecord> probes{hit("h", 0s, 300), hit("h", 400s, 300), hit("h", 800s, 300)};
    auto e = estimate_rate(probes, 300);
    CHECK(e.refreshes_observed == 2);
    CHECK(e.lambda_per_hour == Approx(36.0));
    CHECK(e.refresh_times == std::vector<VirtualTime>{0s, 400s, 800s});
}

TEST_CASE("repeated sightings of one refresh count once", "[audit][estimate]") {
    std::vector<ProbeRecord> probes{hit("h", 0s, 300),   hit("h", 100s, 200), hit("h", 250s, 50),
                                    miss("h", 320s),     hit("h", 400s, 300), hit("h", 450s, 249),
                                    hit("h", 800s, 300)};
    auto r = distinct_refreshes(probes, 300s);
    CHECK(r == std::vector<VirtualTime>{0s, 400s, 800s});
    CHECK(estimate_rate(probes, 300).lambda_per_hour == Approx(36.0));
}

TEST_CASE("confidence interval from the idle-gap spread", "[audit][estimate]") {
    // Gaps 100, 200, 300 s: mean 200, sd 100. Frozen from an independent calculation.
    std::vector<ProbeRecord> probes{hit("h", 0s, 300), hit("h", 400s, 300), hit("h", 900s, 300),
                                    hit("h", 1500s, 300)};
    auto e = estimate_rate(probes, 300);
    CHECK(e.lambda_per_hour == Approx(18.0));
    CHECK(e.ci_low_per_hour == Approx(11.495697075154444));
    CHECK(e.ci_high_per_hour == Approx(41.45586205408659));
    CHECK(e.covers(18.0));
    CHECK_FALSE(e.covers(50.0));
}

TEST_CASE("too few refreshes is insufficient data", "[audit][estimate]") {
    std::vector<ProbeRecord> misses{miss("h", 0s), miss("h", 300s), miss("h", 600s)};
    CHECK_THROWS_AS(estimate_rate(misses, 300), InsufficientData);
    std::vector<ProbeRecord> one_gap{hit("h", 0s, 300), hit("h", 400s, 300)};
    CHECK_THROWS_AS(estimate_rate(one_gap, 300), InsufficientData);
}

TEST_CASE("erratic TTL readings", "[audit][estimate]") {
    std::vector<ProbeRecord> honest{hit("h", 0s, 300), hit("h", 100s, 200), miss("h", 400s), hit("h", 700s, 290),
                                    hit("h", 800s, 190)};
    CHECK_FALSE(erratic_ttls(honest));

    auto over = hit("h", 0s, 300);
    over.outcome = ProbeOutcome::Indeterminate;
    over.ttl_out_of_range = true;
    CHECK(erratic_ttls(std::vector<ProbeRecord>{over}));

    // TTL climbs back up while the implied insertion predates the last probe.
    std::vector<ProbeRecord> rising{hit("h", 0s, 100), hit("h", 60s, 250)};
    CHECK(erratic_ttls(rising));
    // A real refresh between probes is fine.
    std::vector<ProbeRecord> refreshed{hit("h", 0s, 10), hit("h", 60s, 280)};
    CHECK_FALSE(erratic_ttls(refreshed));
}

TEST_CASE("interpreting snoop answers", "[audit][snoop]") {
    auto q = dns::DnsMessage::query(1, "www.example.org", false);
    auto ans = dns::DnsMessage::reply_to(q);
    ans.answers.push_back(dns::ResourceRecord::a("www.example.org", Ipv4(1, 2, 3, 4), 120));
    auto r = interpret_snoop("www.example.org", 300, 10s, ans);
    CHECK(r.outcome == ProbeOutcome::Hit);
    CHECK(r.remaining_ttl == 120);

    auto too_long = ans;
    too_long.answers[0].ttl = 301;
    auto t = interpret_snoop("www.example.org", 300, 10s, too_long);
    CHECK(t.outcome == ProbeOutcome::Indeterminate);
    CHECK(t.ttl_out_of_range);

    auto referral = dns::DnsMessage::reply_to(q);
    referral.authority = resolver::SmartResolver::root_referral();
    CHECK(interpret_snoop("www.example.org", 300, 10s, referral).outcome == ProbeOutcome::Miss);
    CHECK(interpret_snoop("www.example.org", 300, 10s, dns::DnsMessage::reply_to(q, dns::Rcode::ServFail)).outcome ==
          ProbeOutcome::Miss);
    CHECK(interpret_snoop("www.example.org", 300, 10s, std::nullopt).outcome == ProbeOutcome::Indeterminate);
}

// ---------------------------------------------------------------- snooping in the simulator

TEST_CASE("snooping a cached, an uncached and a silent resolver", "[audit][snoop]") {
    auto w = netlab::build_world(netlab::parse_scenario(testgen::walkthrough_with_auditor(1, "drop")), 1);
    auto resolver = ip_of(*w, "sdns-resolver");
    auto& sim = w->sim();
    sim.at(1s, [&] { w->client("client").resolve("www.example.org", true, [](auto) {}); });
    sim.run_until(181s);

    auto cached = snoop_now(*w, "client", resolver, "www.example.org", 300);
    CHECK(cached.outcome == ProbeOutcome::Hit);
    CHECK(cached.remaining_ttl == 120);

    auto& ns = w->authoritative("example-ns");
    auto before = ns.query_log().size();
    CHECK(snoop_now(*w, "client", resolver, "uncached.example.org", 300).outcome == ProbeOutcome::Miss);
    CHECK(snoop_now(*w, "client", resolver, "uncached.example.org", 300).outcome == ProbeOutcome::Miss);
    CHECK(ns.query_log().size() == before);

    // Unregistered auditor against a Drop-mode resolver: no answer at all.
    CHECK(snoop_now(*w, "auditor", resolver, "www.example.org", 300).outcome == ProbeOutcome::Indeterminate);
}

TEST_CASE("snooped refresh time equals the cache insertion time", "[audit][snoop][property]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        auto w = netlab::build_world(netlab::parse_scenario(testgen::walkthrough_with_auditor(trial)), trial);
        auto resolver = ip_of(*w, "sdns-resolver");
        auto& sim = w->sim();
        // Whole-second request times: with equal path latency the TTL the
        // resolver reports carries no truncation, so the identity is exact.
        VirtualTime fill{static_cast<std::int64_t>(1 + rng() % 1000) * 1000};
        sim.at(fill, [&] { w->client("client").resolve("www.example.org", true, [](auto) {}); });
        VirtualTime probe_at = fill + VirtualTime{static_cast<std::int64_t>(1 + rng() % 299) * 1000};
        sim.run_until(probe_at);
        auto p = snoop_now(*w, "auditor", resolver, "www.example.org", 300);
        auto entry = w->resolver("sdns-resolver").resolver().recursive_cache().peek({"www.example.org"});
        REQUIRE(entry);
        REQUIRE(p.hit());
        REQUIRE(refresh_time(p) == entry->inserted_at);
    }
}

TEST_CASE("with arbitrary timing the refresh time is off by under a second", "[audit][snoop][property]") {
    std::mt19937_64 rng(78);
    for (int trial = 0; trial < 40; ++trial) {
        auto w = netlab::build_world(netlab::parse_scenario(testgen::walkthrough_with_auditor(trial)), trial);
        auto resolver = ip_of(*w, "sdns-resolver");
        auto& sim = w->sim();
        VirtualTime fill{static_cast<std::int64_t>(rng() % 1000000)};
        sim.at(fill, [&] { w->client("client").resolve("www.example.org", true, [](auto) {}); });
        sim.run_until(fill + VirtualTime{static_cast<std::int64_t>(1000 + rng() % 290000)});
        auto p = snoop_now(*w, "auditor", resolver, "www.example.org", 300);
        auto entry = w->resolver("sdns-resolver").resolver().recursive_cache().peek({"www.example.org"});
        REQUIRE(p.hit());
        auto err = entry->inserted_at - refresh_time(p);
        REQUIRE(err >= 0ms);
        REQUIRE(err < 1000ms);
    }
}

TEST_CASE("a probing campaign leaves resolver caches untouched", "[audit][snoop][property]") {
    auto doc = testgen::walkthrough_with_auditor(4);
    auto run = [&](bool probe) {
        auto w = netlab::build_world(netlab::parse_scenario(doc), 4, netlab::LogMode::Summary);
        netlab::poisson_traffic(*w, {"client", "www.example.org", 20, 0s, 12h, false, false}, 4);
        netlab::poisson_traffic(*w, {"client", "www.netflix.com", 5, 0s, 12h, false, false}, 4);
        std::optional<ProbeCampaign> campaign;
        if (probe)
            campaign.emplace(*w, "auditor", ip_of(*w, "sdns-resolver"),
                             std::vector<CampaignTarget>{{"www.example.org", 300}, {"www.netflix.com", 300},
                                                         {"never.example.org", 300}},
                             7s, 12h);
        std::vector<std::uint64_t> digests;
        for (int h = 1; h <= 12; ++h) {
            w->sim().run_until(std::chrono::hours(h));
            digests.push_back(w->cache_digest(w->sim().now()));
        }
        if (campaign) {
            CHECK(campaign->probes_sent() == 3 * 144);
            for (const auto& p : campaign->records("never.example.org")) CHECK(p.outcome == ProbeOutcome::Miss);
        }
        return digests;
    };
    CHECK(run(true) == run(false));
}

TEST_CASE("rate limiter admits one probe per name per TTL", "[audit][snoop]") {
    ProbeRateLimiter lim;
    CHECK(lim.allow("a", 300, 0s));
    CHECK_FALSE(lim.allow("a", 300, 299s));
    CHECK(lim.allow("b", 300, 299s));
    CHECK(lim.allow("a", 300, 300s));
}

TEST_CASE("simulated estimate lands near the true rate", "[audit][estimate]") {
    auto run = testgen::run_estimation(100, 48h, 11, false);
    REQUIRE(run.estimate);
    CHECK(run.estimate->lambda_per_hour == Approx(100).epsilon(0.25));
    CHECK(run.estimate->refreshes_observed > 100);
}

TEST_CASE("estimation error shrinks with observation time", "[audit][estimate][property]") {
    auto median_error = [](VirtualTime duration) {
        std::vector<double> errs;
        for (std::uint64_t s = 0; s < 20; ++s) {
            auto run = testgen::run_estimation(100, duration, 1000 + s, false);
            REQUIRE(run.estimate);
            errs.push_back(std::abs(run.estimate->lambda_per_hour - 100) / 100);
        }
        std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
        return errs[10];
    };
    double base = median_error(12h);
    double ten = median_error(120h);
    double hundred = median_error(1200h);
    INFO(base << " " << ten << " " << hundred);
    CHECK(ten < base);
    CHECK(hundred < ten);
}

// ---------------------------------------------------------------- users and profit

TEST_CASE("user counts", "[audit][estimate]") {
    CHECK(estimate_users(41119, 2.63) == 15635);
    CHECK(estimate_users(3565, 2.63) == 1356);
    CHECK(estimate_users(0) == 0);
    CHECK(estimate_users(5, 2) == 3);
    CHECK(estimate_users(41119) == 15635);
}

TEST_CASE("profit model", "[audit][estimate]") {
    ProfitModel m;
    CHECK(m.users_per_link() == 150);
    CHECK(estimate_profit(150, 4.99) == Approx(738.50));
    CHECK(std::llround(estimate_profit(15635, 4.99)) == Approx(76977).margin(1));
    CHECK(std::llround(estimate_profit(1356, 4.95)) == Approx(6622).margin(1));
    CHECK(estimate_profit(0, 4.99) == 0);
    ProfitModel slow;
    slow.per_user_mbps = 10;
    CHECK(slow.users_per_link() == 100);
}

// ---------------------------------------------------------------- enumeration

TEST_CASE("enumeration arithmetic", "[audit][enumerate]") {
    CHECK(enumeration_duration(std::pow(2.0, 32), 1340.12) / (7 * 86400) == Approx(5.29912775717629));
    CHECK(enumeration_duration(71e6, 1340.12) / 3600 == Approx(14.716758366580772));
    CHECK(enumeration_duration(0, 1340.12) == 0);
    CHECK_THROWS(enumeration_duration(10, 0));
}

namespace {

struct EnumRun {
    std::vector<EnumerationVerdict> verdicts;
    std::set<Ipv4> registered;
};

EnumRun enumerate_preset(const std::string& preset, EnumerationVariant variant, std::size_t limit,
                         bool observer_down = false) {
    auto doc = presets::get(preset, 7);
    auto w = netlab::build_world(netlab::parse_scenario(doc), 7, netlab::LogMode::Summary);
    const auto& a = doc["audit"];
    auto candidates = ips(a["candidates"]);
    candidates.resize(std::min(limit, candidates.size()));
    EnumRun out;
    for (auto ip : ips(doc["providers"][0]["registered"])) out.registered.insert(ip);
    EnumerationConfig cfg;
    cfg.attacker_node = a["attacker"];
    cfg.resolver = ip_of(*w, a["resolver"].get<std::string>());
    cfg.domain = variant == EnumerationVariant::ThirdParty ? a["domain"] : a["channel_domain"];
    cfg.variant = variant;
    cfg.seed = 7;
    if (observer_down) {
        auto* auth = w->authoritative_for(cfg.domain);
        REQUIRE(auth);
        w->sim().set_node_up(auth->node(), false);
    }
    out.verdicts = enumerate_clients(*w, cfg, candidates);
    return out;
}

std::size_t correct(const EnumRun& r) {
    std::size_t n = 0;
    for (const auto& v : r.verdicts)
        n += (v.verdict == Verdict::Registered) == r.registered.contains(v.candidate) &&
             v.verdict != Verdict::Indeterminate;
    return n;
}

}  // namespace

TEST_CASE("third-party enumeration separates customers under Drop and StaticIp", "[audit][enumerate]") {
    for (const char* preset : {"vpnuk-sim", "ibvpn-sim"}) {
        INFO(preset);
        auto r = enumerate_preset(preset, EnumerationVariant::ThirdParty, 150);
        REQUIRE(r.verdicts.size() == 150);
        CHECK(correct(r) == 150);
        std::set<std::string> nonces;
        for (const auto& v : r.verdicts) nonces.insert(v.nonce_name);
        CHECK(nonces.size() == 150);
        CHECK(std::any_of(r.verdicts.begin(), r.verdicts.end(),
                          [](const auto& v) { return v.verdict == Verdict::Registered; }));
    }
}

TEST_CASE("the mitigation blinds third parties but not channel operators", "[audit][enumerate]") {
    auto third = enumerate_preset("mitigated-sim", EnumerationVariant::ThirdParty, 150);
    for (const auto& v : third.verdicts) CHECK(v.verdict == Verdict::Registered);
    auto channel = enumerate_preset("mitigated-sim", EnumerationVariant::ChannelOperator, 150);
    CHECK(correct(channel) == 150);
}

TEST_CASE("an unreachable observer gives no verdicts", "[audit][enumerate]") {
    auto r = enumerate_preset("vpnuk-sim", EnumerationVariant::ThirdParty, 20, true);
    for (const auto& v : r.verdicts) CHECK(v.verdict == Verdict::Indeterminate);
}

// ---------------------------------------------------------------- de-proxying

TEST_CASE("de-proxy page embeds an IP-literal image", "[audit][deproxy]") {
    auto page = build_deproxy_page(Ipv4(1, 2, 3, 4), "abc");
    CHECK(page.find("https://1.2.3.4/image.jpg?abc") != std::string::npos);
    CHECK(build_deproxy_page(Ipv4(1, 2, 3, 4), "abd") != page);
    CHECK_THROWS(build_deproxy_page(Ipv4(1, 2, 3, 4), ""));
}

TEST_CASE("de-proxy pairing by session", "[audit][deproxy]") {
    netlab::Topology topo;
    topo.add_node({"home", Ipv4(24, 114, 0, 10), 812, "CA", netlab::Role::Client, false});
    topo.add_node({"proxy", Ipv4(203, 0, 113, 81), 64510, "US", netlab::Role::Proxy, false});
    topo.add_node({"us-home", Ipv4(73, 0, 0, 5), 7922, "US", netlab::Role::Client, false});
    using netlab::AccessLogEntry;
    std::vector<AccessLogEntry> log{
        {1s, Ipv4(73, 0, 0, 5), true, "www.hulu.com", "/", 200, "s1", false},
        {2s, Ipv4(73, 0, 0, 5), true, "198.18.2.10", "/image.jpg", 200, "s1", true},
        {3s, Ipv4(203, 0, 113, 81), true, "www.hulu.com", "/", 200, "s2", false},
        {4s, Ipv4(24, 114, 0, 10), true, "198.18.2.10", "/image.jpg", 403, "s2", true},
        {5s, Ipv4(203, 0, 113, 81), true, "www.hulu.com", "/", 200, "s3", false},
    };
    auto findings = detect_deproxy(log, topo);
    REQUIRE(findings.size() == 3);
    std::map<std::string, DeproxyFinding> by_sid;
    for (const auto& f : findings) by_sid[f.session_id] = f;
    CHECK(by_sid["s1"].sdns == false);
    CHECK(by_sid["s2"].sdns == true);
    CHECK(by_sid["s2"].literal_request_ip == Ipv4(24, 114, 0, 10));
    CHECK(by_sid["s3"].indeterminate());
}

TEST_CASE("de-proxying in the simulator flags every proxied browser", "[audit][deproxy]") {
    auto doc = presets::get("deproxy-sim", 2);
    auto sc = netlab::parse_scenario(doc);
    auto w = netlab::build_world(sc, 2);
    netlab::schedule_script(*w, sc.script, 2);
    w->sim().run();
    auto findings = detect_deproxy(w->origin(doc["audit"]["origin"].get<std::string>()).access_log(), w->topology());
    std::set<Ipv4> flagged, clear;
    for (const auto& f : findings) {
        REQUIRE_FALSE(f.indeterminate());
        (*f.sdns ? flagged : clear).insert(*f.literal_request_ip);
    }
    std::set<Ipv4> sdns_clients, direct_clients;
    for (const auto& n : doc["audit"]["sdns_clients"]) sdns_clients.insert(ip_of(*w, n.get<std::string>()));
    for (const auto& n : doc["audit"]["direct_clients"]) direct_clients.insert(ip_of(*w, n.get<std::string>()));
    CHECK(flagged == sdns_clients);
    CHECK(clear == direct_clients);
}

// ---------------------------------------------------------------- discovery and classification

TEST_CASE("candidate filtering by /24", "[audit][discovery]") {
    GroundTruth truth{{"a.example", {Ipv4(9, 9, 9, 1)}}};
    CHECK(discover_candidates({{"a.example", Ipv4(9, 9, 9, 9)}}, truth).empty());
    CHECK(discover_candidates({{"a.example", Ipv4(7, 7, 7, 7)}}, truth) ==
          std::vector<Candidate>{{"a.example", Ipv4(7, 7, 7, 7)}});
    CHECK(discover_candidates({{"b.example", Ipv4(9, 9, 9, 9)}}, truth) ==
          std::vector<Candidate>{{"b.example", Ipv4(9, 9, 9, 9)}});
}

TEST_CASE("ground truth files", "[audit][discovery]") {
    std::istringstream ok("hostname,ip,vantage,timestamp\n# note\n\nwww.netflix.com,198.18.1.10,us,2018\n"
                          "WWW.Netflix.com,52.84.7.20,eu,2018\nwww.hulu.com,198.18.2.10,us,2018\n");
    auto rows = read_ground_truth(ok);
    REQUIRE(rows.size() == 3);
    auto agg = aggregate_ground_truth(rows);
    CHECK(agg["www.netflix.com"].size() == 2);
    std::istringstream bad("www.netflix.com,not-an-ip,us,2018\n");
    CHECK_THROWS_AS(read_ground_truth(bad), ConfigError);
    std::istringstream short_row("www.netflix.com\n");
    CHECK_THROWS_AS(read_ground_truth(short_row), ConfigError);
    std::istringstream bad_name("a..b,1.2.3.4,us,2018\n");
    CHECK_THROWS_AS(read_ground_truth(bad_name), ConfigError);
    std::istringstream minimal("www.hulu.com,198.18.2.10\n");
    CHECK(read_ground_truth(minimal).size() == 1);
}

TEST_CASE("confirmation needs the registered vantage relayed and the other refused", "[audit][discovery]") {
    auto doc = presets::get("discovery-sim", 1);
    auto w = netlab::build_world(netlab::parse_scenario(doc), 1);
    auto reg = sim_vantage(*w, doc["audit"]["registered_vantage"].get<std::string>());
    auto unreg = sim_vantage(*w, doc["audit"]["unregistered_vantage"].get<std::string>());
    CHECK(confirm_proxy(Ipv4(203, 0, 113, 81), "www.netflix.com", reg, unreg));
    CHECK_FALSE(confirm_proxy(Ipv4(45, 60, 12, 7), "www.hbo.com", reg, unreg));
    w->sim().set_node_up(w->topology().id_of("proxy-2"), false);
    CHECK_FALSE(confirm_proxy(Ipv4(203, 0, 113, 82), "cdn.nflxvideo.net", reg, unreg));
}

TEST_CASE("classification reproduces published rows and is repeatable", "[audit][discovery]") {
    auto doc = presets::get("provider-proxies", 1);
    auto w = netlab::build_world(netlab::parse_scenario(doc), 1);
    const auto& a = doc["audit"];
    auto reg = sim_vantage(*w, a["registered_vantage"].get<std::string>());
    auto unreg = sim_vantage(*w, a["unregistered_vantage"].get<std::string>());
    std::map<std::string, std::array<bool, 4>> want{
        {"CactusVPN", {false, true, true, true}},
        {"SmartDNSProxy", {false, false, false, false}},
        {"VPNUK", {false, true, false, true}},
    };
    for (const auto& row : a["proxies"]) {
        std::string provider = row["provider"];
        if (!want.contains(provider)) continue;
        INFO(provider);
        auto proxy = ip_of(*w, row["proxy"].get<std::string>());
        auto c = classify_proxy(proxy, a["channel_hostname"], a["non_channel_hostname"], reg, unreg);
        CHECK(c.probes_issued == 4);
        CHECK(std::array<bool, 4>{c.open_http, c.universal_http, c.open_sni, c.universal_sni} == want[provider]);
        CHECK(classify_proxy(proxy, a["channel_hostname"], a["non_channel_hostname"], reg, unreg) == c);
    }
}

TEST_CASE("banner fingerprinting", "[audit][discovery]") {
    auto doc = presets::get("discovery-sim", 1);
    auto w = netlab::build_world(netlab::parse_scenario(doc), 1);
    auto scanner = sim_vantage(*w, doc["audit"]["unregistered_vantage"].get<std::string>());
    std::vector<Ipv4> hosts = ips(doc["audit"]["expected_proxies"]);
    std::vector<Ipv4> expected = hosts;
    for (const auto& o : doc["origins"]) hosts.push_back(ip_of(*w, o["node"].get<std::string>()));
    REQUIRE(hosts.size() >= expected.size() + 2);
    auto found = fingerprint_scan(hosts, "Smart DNS proxy is running", scanner);
    std::sort(found.begin(), found.end());
    CHECK(found == expected);
    CHECK(fingerprint_scan(hosts, "no such banner text", scanner).empty());
    CHECK_THROWS(fingerprint_scan(hosts, "", scanner));
}

// ---------------------------------------------------------------- path exposure

TEST_CASE("path exposure counts ASes after the source", "[audit][exposure]") {
    netlab::Topology t;
    auto c = t.add_node({"c", Ipv4(10, 0, 0, 1), 100, "US", netlab::Role::Client, false});
    auto r = t.add_node({"r", Ipv4(10, 0, 0, 2), 100, "US", netlab::Role::HonestResolver, false});
    auto x = t.add_node({"x", Ipv4(10, 0, 1, 1), 200, "US", netlab::Role::Router, false});
    auto y = t.add_node({"y", Ipv4(10, 0, 1, 2), 200, "US", netlab::Role::Router, false});
    auto s = t.add_node({"s", Ipv4(10, 0, 2, 1), 300, "US", netlab::Role::SdnsResolver, false});
    auto lone = t.add_node({"lone", Ipv4(10, 0, 3, 1), 400, "US", netlab::Role::Client, false});
    t.add_link(c, r, 1ms);
    t.add_link(c, x, 1ms);
    t.add_link(x, y, 1ms);
    t.add_link(y, s, 1ms);
    CHECK(path_exposure(t, c, r) == 1);
    CHECK(path_exposure(t, c, s) == 2);
    CHECK_THROWS_AS(path_exposure(t, c, lone), netlab::NoPath);
}

TEST_CASE("calibrated topology gives the requested averages", "[audit][exposure]") {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto fx = calibrated_exposure_topology(100, 2.00, 3.10, seed);
        auto s = compare_exposure(fx.topology, fx.clients, fx.public_resolver, fx.sdns_resolver);
        CHECK(s.public_avg == Approx(2.00));
        CHECK(s.sdns_avg == Approx(3.10));
        CHECK(s.increase_pct == Approx(55.0));
    }
}

// ---------------------------------------------------------------- reports

TEST_CASE("report serialization", "[audit][report]") {
    AuditReport r;
    r.command = "estimate-users";
    r.seed = 3;
    r.inputs_digest = inputs_digest(json{{"b", 1}, {"a", 2}});
    CHECK(r.inputs_digest == inputs_digest(json::parse(R"({"a":2,"b":1})")));
    r.findings = {{"users", 15635}};
    r.generated_at = utc_timestamp();
    auto j = r.to_json();
    for (const char* key : {"command", "inputs_digest", "seed", "findings", "generated_at"}) CHECK(j.contains(key));
    CHECK(json::parse(j.dump()) == j);

    auto e = estimate_rate(std::vector<ProbeRecord>{hit("h", 0s, 300), hit("h", 400s, 300), hit("h", 800s, 300)}, 300);
    auto ej = to_json(e);
    CHECK(ej["lambda_per_hour"].get<double>() == Approx(36.0));
}

TEST_CASE("heatmap and table CSV shapes", "[audit][report]") {
    std::map<std::string, std::vector<ProbeRecord>> recs{
        {"a.example", {hit("a.example", 10s, 290), miss("a.example", 3700s)}},
        {"b.example", {miss("b.example", 10s), miss("b.example", 3700s)}},
    };
    auto m = presence_matrix(recs, 0s, 2);
    CHECK(m == std::vector<std::vector<bool>>{{true, false}, {false, false}});
    std::ostringstream heat;
    write_heatmap_csv(heat, recs, 0s, 2);
    CHECK(heat.str() == "hostname,h0,h1\na.example,1,0\nb.example,0,0\n");

    std::ostringstream cls;
    write_classification_csv(cls, {{"VPNUK", {Ipv4(203, 0, 113, 80), false, true, false, true, 4}}});
    CHECK(cls.str() == "provider,proxy,open_http,universal_http,open_sni,universal_sni\nVPNUK,203.0.113.80,0,1,0,1\n");

    std::ostringstream pop;
    write_popularity_csv(pop, {{"x.example", std::nullopt, 0, false}});
    CHECK(pop.str().starts_with("hostname,lambda_per_hour,ci95_low,ci95_high,refreshes,users,erratic\n"));
}
