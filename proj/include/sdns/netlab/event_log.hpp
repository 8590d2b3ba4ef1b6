#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdns/core.hpp"
#include "sdns/netlab/topology.hpp"

namespace sdns::netlab {

enum class EventKind : std::uint8_t {
    Setup,
    UdpSend,
    UdpDeliver,
    UdpDrop,
    TcpConnect,
    TcpAccept,
    TcpRefused,
    TcpData,
    TcpClose,
    DnsQuery,
    DnsResponse,
    UpstreamQuery,
    AuthQuery,
    HttpRequest,
    HttpResponse,
    ProxyDecision,
    Action,
    Probe,
    kCount
};

const char* to_string(EventKind k);

struct Event {
    VirtualTime time{0};
    std::uint64_t seq = 0;
    NodeId node = 0;
    EventKind kind = EventKind::Setup;
    std::uint64_t msg = 0;     // links a send with its delivery
    std::uint64_t digest = 0;  // payload digest
    std::string detail;
};

enum class LogMode {
    Full,     // keep every event
    Summary,  // keep counts and a running fingerprint only
};

/// Totally ordered record of what happened in a run, ordered by (time, seq).
class EventLog {
public:
    explicit EventLog(LogMode mode = LogMode::Full) : mode_(mode) {}

    bool keeps_events() const { return mode_ == LogMode::Full; }
    void record(VirtualTime time, NodeId node, EventKind kind, std::uint64_t msg, std::uint64_t digest,
                std::string detail = {});

    const std::vector<Event>& events() const { return events_; }
    std::uint64_t count(EventKind k) const { return counts_[static_cast<std::size_t>(k)]; }
    std::uint64_t total() const { return next_seq_; }
    /// Order-sensitive hash over every recorded event (kept in both modes).
    std::uint64_t fingerprint() const { return fingerprint_; }

    /// One JSON object per line: t_ms, seq, node, kind, msg, digest, detail.
    void write_jsonl(std::ostream& os, const Topology& topo) const;

private:
    LogMode mode_;
    std::vector<Event> events_;
    std::array<std::uint64_t, static_cast<std::size_t>(EventKind::kCount)> counts_{};
    std::uint64_t next_seq_ = 0;
    std::uint64_t fingerprint_ = 0xcbf29ce484222325ull;
};

}  // namespace sdns::netlab
