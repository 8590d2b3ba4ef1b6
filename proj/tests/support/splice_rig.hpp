#pragma once

// Drives raw byte streams through a simulated geo proxy to an origin that
// records what it receives, so both directions can be compared bytewise.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sdns/netlab/scenario.hpp"
#include "sdns/presets.hpp"
#include "sdns/proxy/destination.hpp"

namespace sdns::testgen {

struct SpliceCase {
    bool tls = true;
    std::vector<std::uint8_t> request;  // first bytes carry the Host header or ClientHello
    std::vector<std::uint8_t> reply;
    std::vector<std::size_t> request_chunks;
    std::vector<std::size_t> reply_chunks;

    std::vector<std::uint8_t> client_received;
    std::vector<std::uint8_t> origin_received;
    bool client_saw_close = false;
};

inline std::vector<std::size_t> random_chunks(std::mt19937_64& rng, std::size_t total) {
    std::vector<std::size_t> out;
    while (total > 0) {
        std::size_t n = std::min<std::size_t>(total, 1 + rng() % 700);
        out.push_back(n);
        total -= n;
    }
    return out;
}

inline SpliceCase random_splice_case(std::mt19937_64& rng, const std::string& host) {
    SpliceCase c;
    c.tls = rng() % 2;
    if (c.tls) {
        c.request = proxy::build_client_hello(host, rng());
        auto body = random_bytes(rng, rng() % 3000);
        auto rec = proxy::tls_record(proxy::kTlsApplicationData, body);
        c.request.insert(c.request.end(), rec.begin(), rec.end());
    } else {
        std::string head = "POST /upload HTTP/1.1\r\nHost: " + host + "\r\n\r\n";
        c.request.assign(head.begin(), head.end());
        auto body = random_bytes(rng, rng() % 3000);
        c.request.insert(c.request.end(), body.begin(), body.end());
    }
    c.reply = random_bytes(rng, 1 + rng() % 8000);
    c.request_chunks = random_chunks(rng, c.request.size());
    c.reply_chunks = random_chunks(rng, c.reply.size());
    return c;
}

/// The walkthrough network with its channel origin replaced by a raw listener.
class SpliceRig {
public:
    explicit SpliceRig(std::uint64_t seed) {
        auto doc = presets::get("walkthrough", seed);
        doc["script"] = nlohmann::json::array();
        auto& origins = doc["origins"];
        for (auto it = origins.begin(); it != origins.end(); ++it) {
            if ((*it)["node"] == "netflix-origin") {
                origins.erase(it);
                break;
            }
        }
        world_ = netlab::build_world(netlab::parse_scenario(doc), seed, netlab::LogMode::Summary);
        auto& sim = world_->sim();
        origin_node_ = sim.topology().id_of("netflix-origin");
        client_node_ = sim.topology().id_of("client");
        proxy_ip_ = sim.topology().node(sim.topology().id_of("proxy-1")).ip;
        for (std::uint16_t port : {netlab::kHttpPort, netlab::kHttpsPort}) {
            sim.listen(origin_node_, port, [this](netlab::ConnId id, Ipv4) { return accept(id); });
        }
    }

    netlab::World& world() { return *world_; }

    /// Starts `c` at `at`; `c` must outlive the simulation run.
    void start(SpliceCase& c, VirtualTime at) {
        auto& sim = world_->sim();
        sim.at(at, [this, &c, &sim] {
            queue_.push_back(&c);
            netlab::StreamHandler h;
            auto conn = std::make_shared<netlab::ConnId>(0);
            h.on_connected = [&c, &sim, conn] {
                std::size_t off = 0;
                for (auto n : c.request_chunks) {
                    sim.write(*conn, netlab::Side::Client, std::span(c.request).subspan(off, n));
                    off += n;
                }
            };
            h.on_data = [&c](std::span<const std::uint8_t> b) {
                c.client_received.insert(c.client_received.end(), b.begin(), b.end());
            };
            h.on_closed = [&c, &sim, conn] {
                c.client_saw_close = true;
                sim.close(*conn, netlab::Side::Client);
            };
            *conn = sim.connect(client_node_, proxy_ip_, c.tls ? netlab::kHttpsPort : netlab::kHttpPort, std::move(h));
        });
    }

private:
    netlab::StreamHandler accept(netlab::ConnId id) {
        SpliceCase* c = queue_.at(next_++);
        auto& sim = world_->sim();
        netlab::StreamHandler h;
        h.on_data = [c, id, &sim](std::span<const std::uint8_t> b) {
            c->origin_received.insert(c->origin_received.end(), b.begin(), b.end());
            if (c->origin_received.size() != c->request.size()) return;
            std::size_t off = 0;
            for (auto n : c->reply_chunks) {
                sim.write(id, netlab::Side::Server, std::span(c->reply).subspan(off, n));
                off += n;
            }
            sim.close(id, netlab::Side::Server);
        };
        h.on_closed = [id, &sim] { sim.close(id, netlab::Side::Server); };
        return h;
    }

    std::unique_ptr<netlab::World> world_;
    netlab::NodeId origin_node_ = 0;
    netlab::NodeId client_node_ = 0;
    Ipv4 proxy_ip_;
    std::vector<SpliceCase*> queue_;
    std::size_t next_ = 0;
};

}  // namespace sdns::testgen
