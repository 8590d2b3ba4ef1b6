#pragma once

// The smart resolver on a real UDP socket, and an upstream that forwards
// recursive lookups to another DNS server.

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "sdns/live/net.hpp"
#include "sdns/resolver/smart_resolver.hpp"

namespace sdns::live {

/// Asks a recursive server (RD=1) and reports the smallest answer TTL as TTL_max.
class UdpForwardUpstream : public resolver::Upstream {
public:
    explicit UdpForwardUpstream(Endpoint server, std::chrono::milliseconds timeout = std::chrono::seconds(2));
    std::optional<resolver::UpstreamAnswer> lookup(const dns::Question& q, Ipv4 resolver_ip, VirtualTime now) override;

private:
    Endpoint server_;
    std::chrono::milliseconds timeout_;
    std::mutex mu_;
    std::uint16_t next_id_;
};

/// Serves a SmartResolver on UDP. Query time is measured from start().
class UdpResolverServer {
public:
    UdpResolverServer(resolver::SmartResolver& resolver, Endpoint bind_to);
    ~UdpResolverServer();
    UdpResolverServer(const UdpResolverServer&) = delete;
    UdpResolverServer& operator=(const UdpResolverServer&) = delete;

    Endpoint endpoint() const { return bound_; }
    void start();
    void stop();
    std::uint64_t served() const { return served_; }
    std::uint64_t malformed() const { return malformed_; }

private:
    void loop();

    resolver::SmartResolver& resolver_;
    Fd sock_;
    Endpoint bound_;
    Waker waker_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<std::uint64_t> served_{0};
    std::atomic<std::uint64_t> malformed_{0};
    std::chrono::steady_clock::time_point epoch_;
};

}  // namespace sdns::live
