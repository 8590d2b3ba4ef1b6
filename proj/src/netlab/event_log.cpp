#include "sdns/netlab/event_log.hpp"

#include <ostream>

#include "json.hpp"

namespace sdns::netlab {

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Setup: return "setup";
        case EventKind::UdpSend: return "udp_send";
        case EventKind::UdpDeliver: return "udp_deliver";
        case EventKind::UdpDrop: return "udp_drop";
        case EventKind::TcpConnect: return "tcp_connect";
        case EventKind::TcpAccept: return "tcp_accept";
        case EventKind::TcpRefused: return "tcp_refused";
        case EventKind::TcpData: return "tcp_data";
        case EventKind::TcpClose: return "tcp_close";
        case EventKind::DnsQuery: return "dns_query";
        case EventKind::DnsResponse: return "dns_response";
        case EventKind::UpstreamQuery: return "upstream_query";
        case EventKind::AuthQuery: return "auth_query";
        case EventKind::HttpRequest: return "http_request";
        case EventKind::HttpResponse: return "http_response";
        case EventKind::ProxyDecision: return "proxy_decision";
        case EventKind::Action: return "action";
        case EventKind::Probe: return "probe";
        case EventKind::kCount: break;
    }
    return "unknown";
}

void EventLog::record(VirtualTime time, NodeId node, EventKind kind, std::uint64_t msg, std::uint64_t digest,
                      std::string detail) {
    std::uint64_t seq = next_seq_++;
    ++counts_[static_cast<std::size_t>(kind)];
    std::uint64_t h = fingerprint_;
    h = splitmix64(h ^ static_cast<std::uint64_t>(time.count()));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(node) << 8) ^ static_cast<std::uint64_t>(kind));
    h = splitmix64(h ^ msg);
    h = splitmix64(h ^ digest);
    if (!detail.empty()) h = fnv1a64(detail, h);
    fingerprint_ = h;
    if (mode_ == LogMode::Full) events_.push_back(Event{time, seq, node, kind, msg, digest, std::move(detail)});
}

void EventLog::write_jsonl(std::ostream& os, const Topology& topo) const {
    for (const auto& e : events_) {
        nlohmann::json j;
        j["t_ms"] = e.time.count();
        j["seq"] = e.seq;
        j["node"] = e.node < topo.size() ? topo.node(e.node).name : std::to_string(e.node);
        j["kind"] = to_string(e.kind);
        j["msg"] = e.msg;
        j["digest"] = to_hex(e.digest);
        if (!e.detail.empty()) j["detail"] = e.detail;
        os << j.dump() << '\n';
    }
}

}  // namespace sdns::netlab
