// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "../support/generators.hpp"
#include "../support/splice_rig.hpp"
#include "../support/worlds.hpp"
#include "sdns/app/commands.hpp"
#include "sdns/audit/estimate.hpp"
#include "sdns/presets.hpp"

using namespace sdns;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::size_t count_of(const json& findings, const char* key) { return findings.at(key).get<std::size_t>(); }

// ---------------------------------------------------------------- AC1

Outcome enumeration_fidelity() {
    Outcome o;
    auto t0 = Clock::now();
    auto run = [](const char* preset, audit::EnumerationVariant v) {
        app::EnumerateOptions opts;
        opts.variant = v;
        return app::enumerate(presets::get(preset, 7), 7, opts).findings;
    };
    for (const char* preset : {"vpnuk-sim", "ibvpn-sim"}) {
        auto f = run(preset, audit::EnumerationVariant::ThirdParty);
        o.require(count_of(f, "candidates") == 1000 && count_of(f, "agreeing_with_registry") == 1000,
                  std::string(preset) + " third-party 1000/1000");
        o.detail << " " << preset << "=" << count_of(f, "agreeing_with_registry") << "/1000";
    }
    auto blinded = run("mitigated-sim", audit::EnumerationVariant::ThirdParty);
    o.require(count_of(blinded, "registered") == 1000, "mitigated third-party all Registered");
    o.detail << " mitigated/third-party registered=" << count_of(blinded, "registered");
    auto channel = run("mitigated-sim", audit::EnumerationVariant::ChannelOperator);
    o.require(count_of(channel, "agreeing_with_registry") == 1000, "mitigated channel 1000/1000");
    o.detail << " mitigated/channel=" << count_of(channel, "agreeing_with_registry") << "/1000";
    double secs = seconds_since(t0);
    o.require(secs < 10, "runtime < 10 s");
    o.detail << " runtime=" << secs << "s";
    return o;
}

// ---------------------------------------------------------------- AC2

Outcome enumeration_arithmetic() {
    Outcome o;
    double weeks = audit::enumeration_duration(std::pow(2.0, 32), 1340.12) / (7 * 86400.0);
    double hours = audit::enumeration_duration(71e6, 1340.12) / 3600.0;
    o.require(weeks >= 5.25 && weeks <= 5.35, "2^32 addresses in [5.25, 5.35] weeks");
    o.require(hours < 24, "71e6 addresses within a day");
    o.detail << " ipv4_space=" << weeks << "weeks 71M=" << hours << "h";
    return o;
}

// ---------------------------------------------------------------- AC3

Outcome users_and_profit() {
    struct Row {
        const char* provider;
        double lambda;
        double price;
        std::int64_t users;
        std::int64_t profit;
    };
    const Row rows[] = {
        {"CactusVPN", 41119, 4.99, 15635, 76977}, {"DNStrick", 1794, 4.95, 682, 3330},
        {"HideIP VPN", 2127, 4.95, 809, 3952},    {"SmartyDNS", 6389, 4.90, 2429, 11741},
        {"TrickByte", 8269, 2.99, 3144, 9190},    {"Unlocator", 3565, 4.95, 1356, 6622},
    };
    Outcome o;
    for (const auto& r : rows) {
        auto users = audit::estimate_users(r.lambda, 2.63);
        auto profit = std::llround(audit::estimate_profit(static_cast<double>(users), r.price));
        o.require(users == r.users, std::string(r.provider) + " users");
        o.require(std::llabs(profit - r.profit) <= 1, std::string(r.provider) + " profit within 1");
        o.detail << " " << r.provider << "=" << users << "/" << profit;
    }
    return o;
}

// ---------------------------------------------------------------- AC4

Outcome estimator_soundness() {
    Outcome o;
    auto t0 = Clock::now();
    for (double lambda : {10.0, 100.0, 1000.0}) {
        int covered = 0;
        std::vector<double> errors;
        for (std::uint64_t s = 1; s <= 100; ++s) {
            auto run = testgen::run_estimation(lambda, 48h, static_cast<std::uint64_t>(lambda) * 1000 + s);
            if (!run.estimate) {
                errors.push_back(1.0);
                continue;
            }
            covered += run.estimate->covers(lambda);
            errors.push_back(std::abs(run.estimate->lambda_per_hour - lambda) / lambda);
        }
        std::nth_element(errors.begin(), errors.begin() + 50, errors.end());
        double median = errors[50];
        o.require(covered >= 90, "coverage >= 90 at lambda " + std::to_string(int(lambda)));
        if (lambda >= 100) o.require(median <= 0.10, "median error <= 10% at lambda " + std::to_string(int(lambda)));
        o.detail << " lambda=" << lambda << ":covered=" << covered << "/100,median_err=" << median * 100 << "%";
    }
    double secs = seconds_since(t0);
    o.require(secs < 60, "runtime < 60 s");
    o.detail << " runtime=" << secs << "s";
    return o;
}

// ---------------------------------------------------------------- AC5

Outcome proxy_matrix() {
    // open_http, universal_http, open_sni, universal_sni
    const std::map<std::string, std::array<bool, 4>> expected{
        {"CactusVPN", {false, true, true, true}},  {"HideIPVPN", {false, true, true, true}},
        {"IBVPN", {false, true, false, true}},     {"SmartDNSProxy", {false, false, false, false}},
        {"SmartyDNS", {false, true, true, true}},  {"Trickbyte", {false, false, false, false}},
        {"Uflix", {false, false, false, false}},   {"VPNUK", {false, true, false, true}},
    };
    Outcome o;
    auto f = app::classify_proxies(presets::get("provider-proxies", 1), 1).findings;
    std::size_t matched = 0;
    for (const auto& row : f["proxies"]) {
        auto provider = row["provider"].get<std::string>();
        std::array<bool, 4> got{row["open_http"], row["universal_http"], row["open_sni"], row["universal_sni"]};
        auto it = expected.find(provider);
        bool ok = it != expected.end() && it->second == got;
        o.require(ok, provider);
        matched += ok;
    }
    o.require(matched == expected.size(), "all eight providers classified");
    o.detail << " rows_matching=" << matched << "/" << expected.size();
    return o;
}

// ---------------------------------------------------------------- AC6

Outcome deproxying() {
    Outcome o;
    auto doc = presets::get("deproxy-sim", 1);
    auto f = app::deproxy_demo(doc, 1).findings;
    std::set<std::string> expected;
    for (const auto& n : doc["nodes"])
        for (const auto& c : doc["audit"]["sdns_clients"])
            if (n["name"] == c) expected.insert(n["ip"].get<std::string>());
    std::set<std::string> flagged;
    for (const auto& ip : f["flagged_client_ips"]) flagged.insert(ip.get<std::string>());
    o.require(doc["audit"]["direct_clients"].size() == 20 && expected.size() == 20, "20 direct and 20 SDNS clients");
    o.require(flagged == expected, "flagged set equals the SDNS clients' own IPs");
    o.require(count_of(f, "false_positives") == 0 && count_of(f, "false_negatives") == 0, "no FP/FN");
    o.detail << " flagged=" << flagged.size() << " tp=" << count_of(f, "true_positives")
             << " fp=" << count_of(f, "false_positives") << " fn=" << count_of(f, "false_negatives");
    return o;
}

// ---------------------------------------------------------------- AC7

Outcome proxy_discovery() {
    Outcome o;
    auto doc = presets::get("discovery-sim", 1);
    // The ground truth must include CDN aliasing: some hostname over several /24s.
    std::map<std::string, std::set<std::uint32_t>> prefixes;
    for (const auto& line : doc["audit"]["ground_truth"]) {
        auto s = line.get<std::string>();
        auto comma = s.find(',');
        auto ip = Ipv4::parse(s.substr(comma + 1, s.find(',', comma + 1) - comma - 1));
        if (ip) prefixes[s.substr(0, comma)].insert(ip->value() >> 8);
    }
    bool aliased = std::any_of(prefixes.begin(), prefixes.end(), [](const auto& p) { return p.second.size() > 1; });
    o.require(aliased, "ground truth has multi-/24 hostnames");

    auto f = app::discover_proxies(doc, 1, std::nullopt).findings;
    o.require(count_of(f, "missing_proxies") == 0, "every proxy found");
    o.require(count_of(f, "false_positives") == 0, "no false positives");
    bool replica_rejected = false;
    for (const auto& c : f["candidates"])
        if (c["ip"] == "45.60.12.7") replica_rejected = !c["confirmed"].get<bool>();
    o.require(replica_rejected, "CDN replica is a candidate and is rejected");
    o.detail << " confirmed=" << f["confirmed_proxies"].size() << " missing=" << count_of(f, "missing_proxies")
             << " fp=" << count_of(f, "false_positives") << " replica_rejected=" << replica_rejected;
    return o;
}

// ---------------------------------------------------------------- AC8

Outcome path_exposure() {
    Outcome o;
    auto f = app::path_exposure(presets::get("exposure-us", 1), 1).findings;
    double pub = f["public_avg_ases"], sdns = f["sdns_avg_ases"], inc = f["increase_pct"];
    o.require(std::abs(pub - 2.00) < 1e-9 && std::abs(sdns - 3.10) < 1e-9, "calibrated averages 2.00 / 3.10");
    o.require(std::abs(inc - 55.0) <= 1.0, "increase 55% +/- 1");
    o.detail << " public=" << pub << " sdns=" << sdns << " increase=" << inc << "%";
    return o;
}

// ---------------------------------------------------------------- AC9

Outcome snooping() {
    Outcome o;
    auto doc = presets::get("snoop-sim", 1);
    auto out = app::snoop(doc, 1, {});
    const auto& f = out.findings;
    auto names = f["hostnames"].size();
    o.require(names == 80, "80 hostnames probed");
    o.require(count_of(f, "hours") == 120, "5-day campaign");
    o.require(count_of(f, "probes_sent") == 80 * 120 * 12, "one probe per hostname per TTL_max");
    o.require(f["caches_unchanged"].get<bool>(), "cache digests match the no-probe control");
    std::set<std::string> traffic, hits;
    for (const auto& h : f["hostnames_with_traffic"]) traffic.insert(h);
    for (const auto& h : f["hostnames_with_hits"]) hits.insert(h);
    o.require(!hits.empty() && std::includes(traffic.begin(), traffic.end(), hits.begin(), hits.end()),
              "hits only for hostnames with traffic");
    std::istringstream csv(out.files.at("heatmap.csv"));
    std::string header, line;
    std::getline(csv, header);
    std::size_t rows = 0;
    while (std::getline(csv, line)) ++rows;
    o.require(rows == 80 && std::count(header.begin(), header.end(), ',') == 120, "heatmap is 80 x 120");
    o.detail << " probes=" << count_of(f, "probes_sent") << " digest_checkpoints=" << count_of(f, "digest_checkpoints")
             << " mismatches=" << count_of(f, "digest_mismatches") << " hit_names=" << hits.size()
             << " traffic_names=" << traffic.size();
    return o;
}

// ---------------------------------------------------------------- AC10

Outcome codec_and_splice() {
    Outcome o;
    std::mt19937_64 rng(0xac10);
    int round_trips = 0;
    for (int i = 0; i < 10000; ++i) {
        auto m = testgen::random_message(rng);
        auto bytes = dns::encode(m);
        auto back = dns::decode(bytes);
        round_trips += back == m && dns::encode(back) == bytes;
    }
    o.require(round_trips == 10000, "10000 codec round-trips");

    testgen::SpliceRig rig(10);
    std::vector<testgen::SpliceCase> cases;
    for (int i = 0; i < 1000; ++i) cases.push_back(testgen::random_splice_case(rng, "www.netflix.com"));
    for (std::size_t i = 0; i < cases.size(); ++i) rig.start(cases[i], VirtualTime{1000 * static_cast<std::int64_t>(i + 1)});
    rig.world().sim().run();
    int identical = 0;
    for (const auto& c : cases)
        identical += fnv1a64(c.origin_received) == fnv1a64(c.request) && fnv1a64(c.client_received) == fnv1a64(c.reply) &&
                     c.origin_received.size() == c.request.size() && c.client_received.size() == c.reply.size();
    o.require(identical == 1000, "1000 spliced connections hash-identical");
    o.detail << " round_trips=" << round_trips << "/10000 splices=" << identical << "/1000";
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1 enumeration fidelity", enumeration_fidelity},
        {"AC2 enumeration arithmetic", enumeration_arithmetic},
        {"AC3 users and profit table", users_and_profit},
        {"AC4 rate estimator soundness", estimator_soundness},
        {"AC5 proxy classification matrix", proxy_matrix},
        {"AC6 de-proxying", deproxying},
        {"AC7 proxy discovery", proxy_discovery},
        {"AC8 path exposure", path_exposure},
        {"AC9 snooping non-invasiveness", snooping},
        {"AC10 codec and splice properties", codec_and_splice},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ":" << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
