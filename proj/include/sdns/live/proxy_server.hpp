#pragma once

// The geo proxy on real TCP sockets: sniff Host or SNI, authorize, then
// splice bytes to the honestly resolved origin. One poll() thread.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "sdns/live/net.hpp"
#include "sdns/proxy/policy.hpp"
#include "sdns/proxy/splice.hpp"

namespace sdns::live {

using HostResolver = std::function<std::optional<Ipv4>(const std::string& hostname)>;

/// getaddrinfo, first IPv4 result.
HostResolver system_host_resolver();

struct LiveProxyConfig {
    Endpoint http_listen{Ipv4(127, 0, 0, 1), 0};
    Endpoint tls_listen{Ipv4(127, 0, 0, 1), 0};
    std::uint16_t origin_http_port = 80;
    std::uint16_t origin_tls_port = 443;
};

class TcpProxyServer {
public:
    struct Completed {
        Ipv4 client;
        proxy::DestinationClaim claim;
        proxy::TransferStats stats;
    };

    TcpProxyServer(std::shared_ptr<const proxy::ProxyPolicy> policy, std::shared_ptr<resolver::CustomerRegistry> registry,
                   HostResolver resolve, LiveProxyConfig config);
    ~TcpProxyServer();
    TcpProxyServer(const TcpProxyServer&) = delete;
    TcpProxyServer& operator=(const TcpProxyServer&) = delete;

    Endpoint http_endpoint() const { return http_bound_; }
    Endpoint tls_endpoint() const { return tls_bound_; }
    void start();
    void stop();

    std::vector<Completed> completed() const;
    std::uint64_t refused() const { return refused_; }

private:
    struct Conn;
    void loop();
    void accept_all(int listener, bool tls);
    void on_client_readable(Conn& c);
    void on_origin_readable(Conn& c);
    void on_origin_writable(Conn& c);
    void decide(Conn& c);
    void refuse(Conn& c, bool with_banner);
    bool flush(int fd, std::vector<std::uint8_t>& pending);
    bool finished(Conn& c);

    std::shared_ptr<const proxy::ProxyPolicy> policy_;
    std::shared_ptr<resolver::CustomerRegistry> registry_;
    HostResolver resolve_;
    LiveProxyConfig config_;
    Fd http_listener_;
    Fd tls_listener_;
    Endpoint http_bound_;
    Endpoint tls_bound_;
    Waker waker_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::vector<std::unique_ptr<Conn>> conns_;
    mutable std::mutex done_mu_;
    std::vector<Completed> completed_;
    std::atomic<std::uint64_t> refused_{0};
};

}  // namespace sdns::live
