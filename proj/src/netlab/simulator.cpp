#include "sdns/netlab/simulator.hpp"

#include <algorithm>

namespace sdns::netlab {

Simulator::Simulator(Topology topology, std::uint64_t seed, LogMode mode)
    : topology_(std::move(topology)), seed_(seed), log_(mode), down_(topology_.size(), false) {
    for (NodeId id = 0; id < topology_.size(); ++id)
        log_.record(now_, id, EventKind::Setup, 0, topology_.node(id).ip.value(),
                    log_.keeps_events() ? std::string(to_string(topology_.node(id).role)) : std::string{});
}

void Simulator::at(VirtualTime when, std::function<void()> fn) {
    if (when < now_) when = now_;
    queue_.push_back(Scheduled{when, next_seq_++, std::move(fn)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
}

void Simulator::step() {
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Scheduled item = std::move(queue_.back());
    queue_.pop_back();
    now_ = item.time;
    ++processed_;
    item.fn();
}

void Simulator::run_until(VirtualTime horizon) {
    while (!queue_.empty() && queue_.front().time <= horizon) step();
    if (horizon > now_) now_ = horizon;
}

bool Simulator::run_until(const std::function<bool()>& done, VirtualTime deadline) {
    while (!done() && !queue_.empty() && queue_.front().time <= deadline) step();
    return done();
}

void Simulator::run() {
    while (!queue_.empty()) step();
}

void Simulator::set_node_up(NodeId node, bool up) { down_.at(node) = !up; }

bool Simulator::node_up(NodeId node) const { return node < down_.size() && !down_[node]; }

void Simulator::bind_udp(NodeId node, std::uint16_t port, UdpHandler handler) {
    udp_[{node, port}] = std::move(handler);
}

void Simulator::unbind_udp(NodeId node, std::uint16_t port) { udp_.erase({node, port}); }

SendStatus Simulator::send_udp(NodeId sender, Ipv4 src_claim, Ipv4 dst, std::uint16_t src_port,
                               std::uint16_t dst_port, std::vector<std::uint8_t> payload, bool spoofed) {
    const auto& spec = topology_.node(sender);
    bool claims_other = src_claim != spec.ip;
    if ((claims_other && !spoofed) || (spoofed && !spec.can_spoof)) {
        log_.record(now_, sender, EventKind::UdpDrop, 0, 0, log_.keeps_events() ? "spoof rejected" : "");
        return SendStatus::SpoofRejected;
    }
    std::uint64_t msg = next_msg_++;
    std::uint64_t digest = fnv1a64(payload);
    log_.record(now_, sender, EventKind::UdpSend, msg, digest,
                log_.keeps_events() ? src_claim.to_string() + ":" + std::to_string(src_port) + " -> " +
                                          dst.to_string() + ":" + std::to_string(dst_port)
                                    : std::string{});
    auto dst_node = topology_.find_ip(dst);
    std::optional<VirtualTime> lat;
    if (dst_node && node_up(sender)) lat = topology_.latency(sender, *dst_node);
    if (!lat) {
        log_.record(now_, sender, EventKind::UdpDrop, msg, digest, log_.keeps_events() ? "no route" : "");
        return SendStatus::NoRoute;
    }
    NodeId to = *dst_node;
    at(now_ + *lat, [this, to, msg, digest,
                     d = Datagram{src_claim, dst, src_port, dst_port, std::move(payload)}]() {
        auto it = udp_.find({to, d.dst_port});
        if (!node_up(to) || it == udp_.end()) {
            log_.record(now_, to, EventKind::UdpDrop, msg, digest, log_.keeps_events() ? "unbound or down" : "");
            return;
        }
        log_.record(now_, to, EventKind::UdpDeliver, msg, digest);
        it->second(d);
    });
    return SendStatus::Sent;
}

void Simulator::listen(NodeId node, std::uint16_t port, AcceptHandler handler) {
    listeners_[{node, port}] = std::move(handler);
}

ConnId Simulator::connect(NodeId from, Ipv4 to, std::uint16_t port, StreamHandler handler) {
    ConnId id = next_conn_++;
    auto dst_node = topology_.find_ip(to);
    std::optional<VirtualTime> lat;
    if (dst_node && node_up(from)) lat = topology_.latency(from, *dst_node);
    log_.record(now_, from, EventKind::TcpConnect, id, to.value(),
                log_.keeps_events() ? to.to_string() + ":" + std::to_string(port) : std::string{});
    if (!lat) {
        auto refused = std::move(handler.on_refused);
        at(now_, [this, from, id, refused = std::move(refused)]() {
            log_.record(now_, from, EventKind::TcpRefused, id, 0, log_.keeps_events() ? "no route" : "");
            if (refused) refused();
        });
        return id;
    }
    Connection conn;
    conn.client.node = from;
    conn.client.handler = std::move(handler);
    conn.server.node = *dst_node;
    conn.latency = *lat;
    conns_.emplace(id, std::move(conn));
    Ipv4 client_ip = topology_.node(from).ip;
    at(now_ + *lat, [this, id, port, client_ip]() {
        auto it = conns_.find(id);
        if (it == conns_.end()) return;
        Connection& c = it->second;
        auto lit = listeners_.find({c.server.node, port});
        if (!node_up(c.server.node) || lit == listeners_.end()) {
            log_.record(now_, c.server.node, EventKind::TcpRefused, id, 0);
            at(now_ + c.latency, [this, id]() {
                auto cit = conns_.find(id);
                if (cit == conns_.end()) return;
                auto refused = std::move(cit->second.client.handler.on_refused);
                conns_.erase(cit);
                if (refused) refused();
            });
            return;
        }
        log_.record(now_, c.server.node, EventKind::TcpAccept, id, client_ip.value());
        c.established = true;
        c.server.handler = lit->second(id, client_ip);
        at(now_ + c.latency, [this, id]() {
            auto cit = conns_.find(id);
            if (cit == conns_.end() || cit->second.client.closed) return;
            if (cit->second.client.handler.on_connected) cit->second.client.handler.on_connected();
        });
    });
    return id;
}

void Simulator::write(ConnId id, Side from, std::span<const std::uint8_t> bytes) {
    auto it = conns_.find(id);
    if (it == conns_.end() || bytes.empty()) return;
    Connection& c = it->second;
    if (end(c, from).closed) return;
    Side to = from == Side::Client ? Side::Server : Side::Client;
    at(now_ + c.latency, [this, id, to, data = std::vector<std::uint8_t>(bytes.begin(), bytes.end())]() {
        auto cit = conns_.find(id);
        if (cit == conns_.end()) return;
        Endpoint& rx = end(cit->second, to);
        if (rx.closed) return;
        log_.record(now_, rx.node, EventKind::TcpData, id, log_.keeps_events() ? fnv1a64(data) : data.size());
        if (rx.handler.on_data) rx.handler.on_data(data);
    });
}

void Simulator::close(ConnId id, Side from) {
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    Connection& c = it->second;
    Endpoint& me = end(c, from);
    if (me.closed) return;
    me.closed = true;
    Side to = from == Side::Client ? Side::Server : Side::Client;
    at(now_ + c.latency, [this, id, to]() {
        auto cit = conns_.find(id);
        if (cit == conns_.end()) return;
        Endpoint& rx = end(cit->second, to);
        if (rx.peer_closed) return;
        rx.peer_closed = true;
        log_.record(now_, rx.node, EventKind::TcpClose, id, 0);
        if (!rx.closed && rx.handler.on_closed) rx.handler.on_closed();
        maybe_forget(id);
    });
}

void Simulator::maybe_forget(ConnId id) {
    auto it = conns_.find(id);
    if (it == conns_.end()) return;
    const auto& c = it->second;
    if (c.client.closed && c.server.closed && c.client.peer_closed && c.server.peer_closed) conns_.erase(it);
}

}  // namespace sdns::netlab
