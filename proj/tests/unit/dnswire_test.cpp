#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <thread>

#include "../support/fixtures.hpp"
#include "../support/generators.hpp"
#include "sdns/dnswire/cache.hpp"
#include "sdns/dnswire/message.hpp"

using namespace sdns;
using namespace sdns::dns;
using namespace std::chrono_literals;

namespace {

const auto& corpus() {
    static const auto c = testfx::read_corpus("dns_corpus.hex");
    return c;
}

}  // namespace

TEST_CASE("query for example.com encodes to 29 bytes and round-trips", "[dnswire]") {
    auto q = DnsMessage::query(1, "example.com", true);
    auto bytes = encode(q);
    CHECK(bytes.size() == 29);
    CHECK(bytes == corpus().at("query_example_com"));
    CHECK(decode(bytes) == q);
    CHECK_FALSE(q.flags.is_response);
    CHECK(q.answers.empty());
}

TEST_CASE("answer TTL survives decode", "[dnswire]") {
    auto m = decode(corpus().at("response_a_ttl300_ptr"));
    CHECK(m.id == 0x1234);
    CHECK(m.flags.is_response);
    REQUIRE(m.answers.size() == 1);
    CHECK(m.answers[0].name == "example.com");
    CHECK(m.answers[0].ttl == 300);
    CHECK(m.answers[0].address() == Ipv4(1, 2, 3, 4));
}

TEST_CASE("compression pointers expand to full names", "[dnswire]") {
    auto m = decode(corpus().at("compressed_owner_and_ns"));
    CHECK(m.question.qname == "www.example.com");
    REQUIRE(m.answers.size() == 1);
    CHECK(m.answers[0].name == "www.example.com");
    CHECK(m.answers[0].ttl == 60);
    CHECK(m.answers[0].address() == Ipv4(93, 184, 216, 34));
    REQUIRE(m.authority.size() == 1);
    CHECK(m.authority[0].name == "example.com");
    CHECK(m.authority[0].ttl == 3600);
    CHECK(std::get<NameRdata>(m.authority[0].rdata).name == "ns1.example.com");
    // Re-encoding emits uncompressed names; the decoded message is unchanged.
    CHECK(decode(encode(m)) == m);
}

TEST_CASE("root referral decodes with the root as owner", "[dnswire]") {
    auto m = decode(corpus().at("root_referral"));
    CHECK(m.answers.empty());
    REQUIRE(m.authority.size() == 1);
    CHECK(m.authority[0].name.empty());
    CHECK(std::get<NameRdata>(m.authority[0].rdata).name == "a.root-servers.net");
}

TEST_CASE("malformed inputs are rejected", "[dnswire]") {
    for (const char* name : {"pointer_loop", "forward_pointer", "truncated_3_bytes", "missing_answer"}) {
        INFO(name);
        CHECK_THROWS_AS(decode(corpus().at(name)), Malformed);
    }
    CHECK_THROWS_AS(decode(std::vector<std::uint8_t>{}), Malformed);
}

TEST_CASE("unknown record types are kept opaque", "[dnswire]") {
    const auto& bytes = corpus().at("opaque_aaaa");
    auto m = decode(bytes);
    REQUIRE(m.answers.size() == 1);
    CHECK(m.answers[0].rtype == 28);
    CHECK(m.answers[0].ttl == 120);
    const auto& op = std::get<OpaqueRdata>(m.answers[0].rdata);
    REQUIRE(op.bytes.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) CHECK(op.bytes[i] == i);
    CHECK(decode(encode(m)) == m);
}

TEST_CASE("decode lowercases names", "[dnswire]") {
    CHECK(decode(corpus().at("mixed_case_qname")).question.qname == "example.com");
}

TEST_CASE("name limits", "[dnswire]") {
    std::string label64(64, 'a');
    CHECK_THROWS_AS(normalize_name(label64 + ".com"), InvalidName);
    DnsMessage bad;
    bad.question.qname = label64 + ".com";
    CHECK_THROWS_AS(encode(bad), InvalidName);

    std::string label63(63, 'b');
    std::string name = label63 + "." + label63 + "." + label63 + "." + std::string(61, 'c');  // 253 chars, 255 on the wire
    CHECK(normalize_name(name) == name);
    CHECK_THROWS_AS(normalize_name(name + "c"), InvalidName);
    CHECK_THROWS_AS(normalize_name("a..b"), InvalidName);
    CHECK(normalize_name("WWW.Example.COM.") == "www.example.com");
}

TEST_CASE("codec round-trips generated messages", "[dnswire][property]") {
    std::mt19937_64 rng(0x5eed);
    for (int i = 0; i < 10000; ++i) {
        auto m = testgen::random_message(rng);
        auto bytes = encode(m);
        auto back = decode(bytes);
        REQUIRE(back == m);
        REQUIRE(encode(back) == bytes);
    }
}

TEST_CASE("random bytes never crash the decoder", "[dnswire][property]") {
    std::mt19937_64 rng(17);
    int ok = 0;
    for (int i = 0; i < 20000; ++i) {
        auto bytes = testgen::random_bytes(rng, rng() % 80);
        try {
            auto m = decode(bytes);
            (void)m;
            ++ok;
        } catch (const Malformed&) {
        }
    }
    SUCCEED("decoded " << ok);
}

TEST_CASE("truncating a valid message anywhere is Malformed", "[dnswire][property]") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        auto bytes = encode(testgen::random_message(rng));
        for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
            std::vector<std::uint8_t> prefix(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
            REQUIRE_THROWS_AS(decode(prefix), Malformed);
        }
    }
}

// ---------------------------------------------------------------- cache

SCENARIO("cache entries expire exactly at inserted_at + ttl_max", "[cache]") {
    RecordCache cache;
    CacheKey key{"example.com"};
    std::vector<ResourceRecord> recs{ResourceRecord::a("example.com", Ipv4(1, 2, 3, 4), 300)};

    GIVEN("an entry inserted at t=0 with ttl_max 300") {
        REQUIRE(cache.put(key, recs, 300, 0s));
        THEN("at t=100 it has 200 s left") {
            auto e = cache.get(key, 100s);
            REQUIRE(e);
            CHECK(e->remaining_ttl(100s) == 200);
            CHECK(e->records[0].ttl == 200);
        }
        THEN("at t=299.999 it is still served") { CHECK(cache.get(key, 299999ms)); }
        THEN("at t=300 it is a miss and is evicted") {
            CHECK_FALSE(cache.get(key, 300s));
            CHECK(cache.size() == 0);
        }
        THEN("a put while live keeps the original insertion time") {
            CHECK_FALSE(cache.put(key, recs, 300, 100s));
            CHECK(cache.peek(key)->inserted_at == 0s);
        }
        THEN("a put after expiry refreshes it") {
            CHECK(cache.put(key, recs, 300, 400s));
            CHECK(cache.peek(key)->inserted_at == 400s);
        }
    }
    GIVEN("an empty cache") {
        THEN("a never-inserted key misses") { CHECK_FALSE(cache.get(key, 0s)); }
        THEN("ttl_max 0 is rejected") { CHECK_THROWS(cache.put(key, recs, 0, 0s)); }
    }
}

TEST_CASE("remaining TTL never increases between puts", "[cache][property]") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        RecordCache cache;
        CacheKey key{"t" + std::to_string(trial) + ".example"};
        std::uint32_t ttl = 1 + static_cast<std::uint32_t>(rng() % 3600);
        VirtualTime now{static_cast<std::int64_t>(rng() % 100000)};
        cache.put(key, {ResourceRecord::a(key.qname, Ipv4(10, 0, 0, 1), ttl)}, ttl, now);
        std::uint32_t last = ttl;
        for (int step = 0; step < 50; ++step) {
            now += VirtualTime{static_cast<std::int64_t>(rng() % 20000)};
            auto e = cache.get(key, now);
            std::uint32_t rem = e ? e->remaining_ttl(now) : 0;
            REQUIRE(rem <= last);
            last = rem;
        }
    }
}

TEST_CASE("cache digest covers only live entries", "[cache]") {
    RecordCache a, b;
    a.put({"x.example"}, {ResourceRecord::a("x.example", Ipv4(1, 1, 1, 1), 60)}, 60, 0s);
    b.put({"x.example"}, {ResourceRecord::a("x.example", Ipv4(1, 1, 1, 1), 60)}, 60, 0s);
    CHECK(a.digest(10s) == b.digest(10s));
    b.put({"y.example"}, {ResourceRecord::a("y.example", Ipv4(1, 1, 1, 2), 5)}, 5, 0s);
    CHECK(a.digest(10s) == b.digest(10s));
    CHECK(a.digest(1s) != b.digest(1s));
}

TEST_CASE("cache tolerates concurrent writers and readers", "[cache]") {
    RecordCache cache;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&cache, t] {
            for (int i = 0; i < 2000; ++i) {
                CacheKey key{"n" + std::to_string(i % 50) + ".example"};
                VirtualTime now{i};
                if ((i + t) % 2 == 0)
                    cache.put(key, {ResourceRecord::a(key.qname, Ipv4(10, 0, 0, 1), 1)}, 1, now);
                else
                    (void)cache.get(key, now);
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(cache.size() <= 50);
}
