#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "../support/generators.hpp"
#include "sdns/resolver/smart_resolver.hpp"

using namespace sdns;
using namespace sdns::resolver;
using namespace std::chrono_literals;
using dns::DnsMessage;
using dns::Rcode;

namespace {

const Ipv4 kProxyA(203, 0, 113, 81);
const Ipv4 kProxyB(203, 0, 113, 82);
const Ipv4 kOrigin(198, 51, 100, 7);
const Ipv4 kCustomer(24, 114, 0, 10);
const Ipv4 kStranger(185, 220, 0, 7);
const Ipv4 kStatic(5, 5, 5, 5);

/// Answers every name with a fixed address derived from the name; logs lookups.
class RecordingUpstream : public Upstream {
public:
    std::optional<UpstreamAnswer> lookup(const dns::Question& q, Ipv4, VirtualTime) override {
        seen.push_back(q.qname);
        if (unreachable) return std::nullopt;
        UpstreamAnswer a;
        a.ttl = 600;
        a.records.push_back(dns::ResourceRecord::a(q.qname, origin_for(q.qname), 600));
        return a;
    }
    static Ipv4 origin_for(std::string_view qname) {
        if (qname.ends_with("netflix.com")) return kOrigin;
        return Ipv4(static_cast<std::uint32_t>(0x0A000000u | (fnv1a64(qname) & 0xFFFFFu)));
    }
    std::vector<std::string> seen;
    bool unreachable = false;
};

ResolverConfig config_with(NonCustomerMode mode, Mitigation m = Mitigation::None) {
    ResolverConfig cfg;
    cfg.channels.add({"netflix.com", {kProxyA}, true, std::nullopt});
    cfg.channels.add({"akamaihd.net", {kProxyB}, false, 120});
    cfg.policy.non_customer_mode = mode;
    cfg.policy.mitigation = m;
    return cfg;
}

struct Rig {
    RecordingUpstream upstream;
    std::shared_ptr<CustomerRegistry> registry = std::make_shared<CustomerRegistry>(std::set<Ipv4>{kCustomer});
    SmartResolver resolver;

    explicit Rig(ResolverConfig cfg) : resolver(std::move(cfg), registry, upstream, Ipv4(203, 0, 113, 53)) {}

    std::optional<DnsMessage> ask(std::string_view name, Ipv4 src, bool rd = true, VirtualTime now = 0s) {
        return resolver.resolve(DnsMessage::query(77, name, rd), src, now);
    }
};

std::optional<Ipv4> first_a(const std::optional<DnsMessage>& m) {
    if (!m) return std::nullopt;
    for (const auto& rr : m->answers)
        if (rr.is_a()) return rr.address();
    return std::nullopt;
}

bool is_referral(const std::optional<DnsMessage>& m) {
    return m && m->answers.empty() && !m->authority.empty() && m->authority.front().name.empty();
}

/// Wire bytes with the transaction id and every TTL zeroed.
std::vector<std::uint8_t> canonical(DnsMessage m) {
    m.id = 0;
    for (auto* sec : {&m.answers, &m.authority, &m.additional})
        for (auto& rr : *sec) rr.ttl = 0;
    return dns::encode(m);
}

}  // namespace

TEST_CASE("registered customers get a proxy for channel names", "[resolver]") {
    Rig rig(config_with(Drop{}));
    auto r = rig.ask("netflix.com", kCustomer);
    REQUIRE(first_a(r) == kProxyA);
    CHECK(r->answers[0].ttl == 300);
    CHECK(first_a(rig.ask("www.example.org", kCustomer)) == RecordingUpstream::origin_for("www.example.org"));
}

TEST_CASE("StaticIp answers every name with the fixed address", "[resolver]") {
    Rig rig(config_with(StaticIp{kStatic}));
    for (auto name : {"netflix.com", "www.example.org", "anything.test"}) {
        for (bool rd : {true, false}) CHECK(first_a(rig.ask(name, kStranger, rd)) == kStatic);
    }
    CHECK(rig.upstream.seen.empty());
}

TEST_CASE("Drop sends nothing to non-customers", "[resolver]") {
    Rig rig(config_with(Drop{}));
    CHECK_FALSE(rig.ask("netflix.com", kStranger));
    CHECK_FALSE(rig.ask("www.example.org", kStranger, false));
    CHECK(rig.resolver.stats().dropped == 2);
}

TEST_CASE("RD=0 for an uncached name is a root referral and never recurses", "[resolver]") {
    Rig rig(config_with(Drop{}));
    auto r = rig.ask("uncached.example", kCustomer, false);
    CHECK(is_referral(r));
    CHECK(r->flags.rcode == Rcode::NoError);
    CHECK(rig.upstream.seen.empty());

    auto ch = rig.ask("www.netflix.com", kCustomer, false);
    CHECK(is_referral(ch));
    CHECK(rig.upstream.seen.empty());
}

TEST_CASE("RD=0 after a fill answers with the remaining TTL", "[resolver]") {
    Rig rig(config_with(Drop{}));
    rig.ask("www.example.org", kCustomer, true, 0s);
    rig.ask("www.netflix.com", kCustomer, true, 0s);
    auto plain = rig.ask("www.example.org", kCustomer, false, 250s);
    REQUIRE(first_a(plain));
    CHECK(plain->answers[0].ttl == 350);
    auto ch = rig.ask("www.netflix.com", kCustomer, false, 250s);
    REQUIRE(first_a(ch) == kProxyA);
    CHECK(ch->answers[0].ttl == 50);
    CHECK(rig.upstream.seen.size() == 1);
}

TEST_CASE("unreachable upstream is ServFail", "[resolver]") {
    Rig rig(config_with(ResolveCorrectly{}));
    rig.upstream.unreachable = true;
    auto r = rig.ask("www.example.org", kCustomer);
    REQUIRE(r);
    CHECK(r->flags.rcode == Rcode::ServFail);
    CHECK(r->answers.empty());
}

TEST_CASE("every mode x source x name class x RD cell is defined and deterministic", "[resolver][property]") {
    struct Mode {
        const char* label;
        NonCustomerMode mode;
    };
    const std::vector<Mode> modes{{"resolve", ResolveCorrectly{}}, {"static", StaticIp{kStatic}}, {"drop", Drop{}}};
    for (const auto& mode : modes) {
        for (bool registered : {true, false}) {
            for (bool channel : {true, false}) {
                for (bool rd : {true, false}) {
                    INFO(mode.label << " registered=" << registered << " channel=" << channel << " rd=" << rd);
                    auto name = channel ? "www.netflix.com" : "www.example.org";
                    auto src = registered ? kCustomer : kStranger;
                    Rig a(config_with(mode.mode)), b(config_with(mode.mode));
                    auto ra = a.ask(name, src, rd);
                    auto rb = b.ask(name, src, rd);
                    REQUIRE(ra.has_value() == rb.has_value());
                    if (ra) CHECK(dns::encode(*ra) == dns::encode(*rb));

                    if (!registered && std::holds_alternative<Drop>(mode.mode)) {
                        CHECK_FALSE(ra);
                    } else if (!registered && std::holds_alternative<StaticIp>(mode.mode)) {
                        CHECK(first_a(ra) == kStatic);
                    } else if (!rd) {
                        CHECK(is_referral(ra));
                        CHECK(a.upstream.seen.empty());
                    } else if (registered && channel) {
                        CHECK(first_a(ra) == kProxyA);
                    } else {
                        CHECK(first_a(ra) == RecordingUpstream::origin_for(name));
                    }
                }
            }
        }
    }
}

TEST_CASE("under ResolveUnsupportedCorrectly non-channel answers do not reveal registration",
          "[resolver][property]") {
    std::mt19937_64 rng(2024);
    for (NonCustomerMode mode : {NonCustomerMode{Drop{}}, NonCustomerMode{StaticIp{kStatic}}}) {
        Rig rig(config_with(mode, Mitigation::ResolveUnsupportedCorrectly));
        for (int i = 0; i < 300; ++i) {
            auto name = testgen::random_name(rng) + ".org";
            if (name.size() > 250) continue;
            bool rd = rng() % 2;
            VirtualTime t{static_cast<std::int64_t>(rng() % 900000)};
            auto reg = rig.ask(name, kCustomer, rd, t);
            auto unreg = rig.ask(name, kStranger, rd, t + VirtualTime{static_cast<std::int64_t>(rng() % 5000)});
            REQUIRE(reg);
            REQUIRE(unreg);
            REQUIRE(canonical(*reg) == canonical(*unreg));
        }
    }
}

TEST_CASE("mitigations leave subdomains of channels distinguishable", "[resolver]") {
    for (auto m : {Mitigation::ResolveUnsupportedCorrectly, Mitigation::ResolveAllCorrectlyProxyChannels}) {
        Rig rig(config_with(Drop{}, m));
        auto nonce = "n3f2a91.netflix.com";
        CHECK(first_a(rig.ask(nonce, kCustomer)) == kProxyA);
        CHECK(first_a(rig.ask(nonce, kStranger)) == kOrigin);
    }
}

TEST_CASE("the strong mitigation recurses channel names for customers and discards the answer", "[resolver]") {
    Rig rig(config_with(Drop{}, Mitigation::ResolveAllCorrectlyProxyChannels));
    auto r = rig.ask("www.netflix.com", kCustomer);
    CHECK(first_a(r) == kProxyA);
    CHECK(rig.upstream.seen == std::vector<std::string>{"www.netflix.com"});
    CHECK_FALSE(rig.resolver.recursive_cache().peek({"www.netflix.com"}));

    Rig weak(config_with(Drop{}, Mitigation::ResolveUnsupportedCorrectly));
    weak.ask("www.netflix.com", kCustomer);
    CHECK(weak.upstream.seen.empty());
}

TEST_CASE("channel answers for customers never carry the origin address", "[resolver][property]") {
    std::mt19937_64 rng(7);
    for (auto m : {Mitigation::None, Mitigation::ResolveUnsupportedCorrectly, Mitigation::ResolveAllCorrectlyProxyChannels}) {
        Rig rig(config_with(ResolveCorrectly{}, m));
        for (int i = 0; i < 200; ++i) {
            auto name = testgen::random_label(rng, 20) + ".netflix.com";
            auto r = rig.ask(name, kCustomer, true, VirtualTime{i * 1000});
            REQUIRE(r);
            for (const auto& rr : r->answers) REQUIRE(rr.address() != kOrigin);
        }
    }
}

TEST_CASE("per-channel TTL overrides the default", "[resolver]") {
    Rig rig(config_with(Drop{}));
    auto r = rig.ask("cdn.akamaihd.net", kCustomer);
    REQUIRE(first_a(r) == kProxyB);
    CHECK(r->answers[0].ttl == 120);
}

TEST_CASE("registry changes apply to the next query", "[resolver]") {
    Rig rig(config_with(Drop{}));
    CHECK_FALSE(rig.ask("www.netflix.com", kStranger));
    rig.registry->add(kStranger);
    CHECK(first_a(rig.ask("www.netflix.com", kStranger)) == kProxyA);
    rig.registry->remove(kStranger);
    CHECK_FALSE(rig.ask("www.netflix.com", kStranger));
}

TEST_CASE("reconfigure swaps the policy", "[resolver]") {
    Rig rig(config_with(Drop{}));
    rig.resolver.reconfigure(config_with(StaticIp{kStatic}));
    CHECK(first_a(rig.ask("x.example", kStranger)) == kStatic);
}

TEST_CASE("select_proxy round-robins per name", "[resolver]") {
    ProxySelector sel;
    std::vector<Ipv4> pool{kProxyA, kProxyB};
    CHECK(sel.select(pool, "netflix.com") == kProxyA);
    CHECK(sel.select(pool, "netflix.com") == kProxyB);
    CHECK(sel.select(pool, "netflix.com") == kProxyA);
    CHECK(sel.select(pool, "www.netflix.com") == kProxyA);
    std::vector<Ipv4> single{kProxyB};
    for (int i = 0; i < 5; ++i) CHECK(sel.select(single, "netflix.com") == kProxyB);
    CHECK_THROWS(sel.select({}, "x"));
}

TEST_CASE("channel matching is label-aligned and longest-first", "[resolver]") {
    ChannelTable t;
    t.add({"netflix.com", {kProxyA}, true, std::nullopt});
    t.add({"akamaihd.net", {kProxyB}, false, std::nullopt});
    t.add({"video.netflix.com", {kProxyB}, true, std::nullopt});
    CHECK(is_channel(t, "www.netflix.com") == "netflix.com");
    CHECK(is_channel(t, "netflix.com") == "netflix.com");
    CHECK_FALSE(is_channel(t, "notnetflix.com"));
    CHECK(is_channel(t, "cdn.akamaihd.net") == "akamaihd.net");
    CHECK(is_channel(t, "a.video.netflix.com") == "video.netflix.com");
    CHECK(t.advertised_suffixes() == std::vector<std::string>{"netflix.com", "video.netflix.com"});
    CHECK_THROWS(t.add({"hulu.com", {}, true, std::nullopt}));
    CHECK_THROWS(t.add({"netflix.com", {kProxyA}, true, std::nullopt}));

    ChannelTable all;
    all.add({"", {kProxyA}, true, std::nullopt});
    CHECK(is_channel(all, "anything.example") == "");
}
