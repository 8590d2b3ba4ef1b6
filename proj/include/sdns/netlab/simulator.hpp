#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "sdns/core.hpp"
#include "sdns/netlab/event_log.hpp"
#include "sdns/netlab/topology.hpp"

namespace sdns::netlab {

struct Datagram {
    Ipv4 src;  // as claimed by the sender; may be spoofed
    Ipv4 dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::vector<std::uint8_t> payload;
};

using UdpHandler = std::function<void(const Datagram&)>;

enum class SendStatus { Sent, NoRoute, SpoofRejected };

using ConnId = std::uint64_t;
enum class Side { Client, Server };

/// Callbacks for one end of a stream. Any may be empty.
struct StreamHandler {
    std::function<void()> on_connected;  // client side only
    std::function<void()> on_refused;    // client side only
    std::function<void(std::span<const std::uint8_t>)> on_data;
    std::function<void()> on_closed;  // the peer closed
};

/// Called on the server node for each new connection; returns its handler.
using AcceptHandler = std::function<StreamHandler(ConnId conn, Ipv4 peer)>;

/// Single-threaded discrete-event network simulator with a virtual clock.
/// UDP datagrams travel the routed path latency; replies address whatever
/// source the datagram claimed. Streams are reliable and ordered.
class Simulator {
public:
    explicit Simulator(Topology topology, std::uint64_t seed = 0, LogMode mode = LogMode::Full);

    VirtualTime now() const { return now_; }
    std::uint64_t seed() const { return seed_; }
    const Topology& topology() const { return topology_; }
    EventLog& log() { return log_; }
    const EventLog& log() const { return log_; }

    /// Generator for a named substream of the master seed.
    std::mt19937_64 rng(std::string_view stream) const { return std::mt19937_64(derive_seed(seed_, stream)); }

    void at(VirtualTime when, std::function<void()> fn);
    void after(VirtualTime delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); }

    /// Runs every event scheduled at or before `horizon`, then sets the clock to it.
    void run_until(VirtualTime horizon);
    /// Runs until no events remain.
    void run();
    /// Runs events until `done` holds, the queue drains, or the next event is
    /// past `deadline`. Returns done().
    bool run_until(const std::function<bool()>& done, VirtualTime deadline);
    bool idle() const { return queue_.empty(); }
    std::uint64_t events_processed() const { return processed_; }

    void set_node_up(NodeId node, bool up);
    bool node_up(NodeId node) const;

    void bind_udp(NodeId node, std::uint16_t port, UdpHandler handler);
    void unbind_udp(NodeId node, std::uint16_t port);
    /// `src_claim` must be the sender's own IP unless `spoofed` is set, and
    /// spoofing requires the sender's can_spoof flag.
    SendStatus send_udp(NodeId sender, Ipv4 src_claim, Ipv4 dst, std::uint16_t src_port, std::uint16_t dst_port,
                        std::vector<std::uint8_t> payload, bool spoofed = false);

    void listen(NodeId node, std::uint16_t port, AcceptHandler handler);
    ConnId connect(NodeId from, Ipv4 to, std::uint16_t port, StreamHandler handler);
    void write(ConnId conn, Side from, std::span<const std::uint8_t> bytes);
    void close(ConnId conn, Side from);
    std::size_t open_connections() const { return conns_.size(); }

private:
    struct Scheduled {
        VirtualTime time;
        std::uint64_t seq;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Scheduled& a, const Scheduled& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    struct Endpoint {
        NodeId node = 0;
        StreamHandler handler;
        bool closed = false;       // this side called close()
        bool peer_closed = false;  // FIN from the other side arrived
    };
    struct Connection {
        Endpoint client;
        Endpoint server;
        VirtualTime latency{0};
        bool established = false;
    };

    Endpoint& end(Connection& c, Side s) { return s == Side::Client ? c.client : c.server; }
    void maybe_forget(ConnId id);
    void step();

    Topology topology_;
    std::uint64_t seed_;
    EventLog log_;
    VirtualTime now_{0};
    std::uint64_t next_seq_ = 0;
    std::uint64_t processed_ = 0;
    std::vector<Scheduled> queue_;
    std::vector<bool> down_;
    std::map<std::pair<NodeId, std::uint16_t>, UdpHandler> udp_;
    std::map<std::pair<NodeId, std::uint16_t>, AcceptHandler> listeners_;
    std::unordered_map<ConnId, Connection> conns_;
    ConnId next_conn_ = 1;
    std::uint64_t next_msg_ = 1;
};

}  // namespace sdns::netlab
