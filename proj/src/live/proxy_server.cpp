#include "sdns/live/proxy_server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>

namespace sdns::live {

HostResolver system_host_resolver() {
    return [](const std::string& hostname) -> std::optional<Ipv4> {
        if (auto literal = Ipv4::parse(hostname)) return literal;
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (::getaddrinfo(hostname.c_str(), nullptr, &hints, &res) != 0 || !res) return std::nullopt;
        auto* sa = reinterpret_cast<sockaddr_in*>(res->ai_addr);
        Ipv4 ip(ntohl(sa->sin_addr.s_addr));
        ::freeaddrinfo(res);
        return ip;
    };
}

struct TcpProxyServer::Conn {
    enum class Phase { Sniffing, Connecting, Splicing, Draining };
    Phase phase = Phase::Sniffing;
    bool tls = false;
    Ipv4 peer;
    Ipv4 local;
    Fd client;
    Fd origin;
    std::vector<std::uint8_t> sniffed;
    std::vector<std::uint8_t> to_client;
    std::vector<std::uint8_t> to_origin;
    std::optional<proxy::DestinationClaim> claim;
    std::unique_ptr<proxy::SpliceSession> splice;
    bool close_client_after_flush = false;
    bool close_origin_after_flush = false;
    bool recorded = false;
};

TcpProxyServer::TcpProxyServer(std::shared_ptr<const proxy::ProxyPolicy> policy,
                               std::shared_ptr<resolver::CustomerRegistry> registry, HostResolver resolve,
                               LiveProxyConfig config)
    : policy_(std::move(policy)),
      registry_(std::move(registry)),
      resolve_(std::move(resolve)),
      config_(config),
      http_listener_(tcp_listener(config.http_listen)),
      tls_listener_(tcp_listener(config.tls_listen)),
      http_bound_(local_endpoint(http_listener_.get())),
      tls_bound_(local_endpoint(tls_listener_.get())) {}

TcpProxyServer::~TcpProxyServer() { stop(); }

void TcpProxyServer::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] { loop(); });
}

void TcpProxyServer::stop() {
    if (!running_.exchange(false)) return;
    waker_.wake();
    if (thread_.joinable()) thread_.join();
    conns_.clear();
}

std::vector<TcpProxyServer::Completed> TcpProxyServer::completed() const {
    std::lock_guard lock(done_mu_);
    return completed_;
}

void TcpProxyServer::accept_all(int listener, bool tls) {
    while (true) {
        sockaddr_in sa{};
        socklen_t len = sizeof sa;
        int fd = ::accept4(listener, reinterpret_cast<sockaddr*>(&sa), &len, SOCK_NONBLOCK | SOCK_CLOEXEC);
        if (fd < 0) return;
        auto c = std::make_unique<Conn>();
        c->tls = tls;
        c->client.reset(fd);
        c->peer = Ipv4(ntohl(sa.sin_addr.s_addr));
        c->local = local_endpoint(fd).ip;
        conns_.push_back(std::move(c));
    }
}

bool TcpProxyServer::flush(int fd, std::vector<std::uint8_t>& pending) {
    while (!pending.empty()) {
        auto n = ::send(fd, pending.data(), pending.size(), MSG_NOSIGNAL);
        if (n < 0) return errno == EAGAIN || errno == EWOULDBLOCK;
        pending.erase(pending.begin(), pending.begin() + n);
    }
    return true;
}

void TcpProxyServer::refuse(Conn& c, bool with_banner) {
    ++refused_;
    c.phase = Conn::Phase::Draining;
    if (with_banner) {
        auto b = proxy::banner(*policy_);
        c.to_client.insert(c.to_client.end(), b.begin(), b.end());
    }
    c.close_client_after_flush = true;
}

void TcpProxyServer::decide(Conn& c) {
    auto result = proxy::extract_destination(c.sniffed);
    if (result.status == proxy::ExtractResult::Status::Incomplete) return;
    if (!result.complete()) return refuse(c, !c.tls);
    c.claim = result.claim;
    if (!c.tls && result.claim.hostname == c.local.to_string()) return refuse(c, true);
    if (!proxy::authorize(*policy_, result.claim, c.peer, *registry_).allowed) return refuse(c, !c.tls);
    auto origin = resolve_(result.claim.hostname);
    if (!origin) return refuse(c, !c.tls);
    try {
        c.origin = tcp_connect_nonblocking({*origin, c.tls ? config_.origin_tls_port : config_.origin_http_port});
    } catch (const Error&) {
        return refuse(c, false);
    }
    c.phase = Conn::Phase::Connecting;
    Conn* self = &c;
    c.splice = std::make_unique<proxy::SpliceSession>(
        [self](std::span<const std::uint8_t> b) { self->to_origin.insert(self->to_origin.end(), b.begin(), b.end()); },
        [self](std::span<const std::uint8_t> b) { self->to_client.insert(self->to_client.end(), b.begin(), b.end()); },
        [self] { self->close_origin_after_flush = true; }, [self] { self->close_client_after_flush = true; });
    c.splice->from_client(c.sniffed);
    c.sniffed.clear();
}

void TcpProxyServer::on_client_readable(Conn& c) {
    std::uint8_t buf[16384];
    while (c.client) {
        auto n = ::recv(c.client.get(), buf, sizeof buf, 0);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) return;
            n = 0;
        }
        if (n == 0) {
            if (c.splice) {
                c.splice->client_closed();
                c.client.reset();
                c.to_client.clear();
            } else {
                c.phase = Conn::Phase::Draining;
                c.close_client_after_flush = true;
            }
            return;
        }
        std::span<const std::uint8_t> data(buf, static_cast<std::size_t>(n));
        if (c.phase == Conn::Phase::Sniffing) {
            c.sniffed.insert(c.sniffed.end(), data.begin(), data.end());
            decide(c);
        } else if (c.splice) {
            c.splice->from_client(data);
        }
    }
}

void TcpProxyServer::on_origin_readable(Conn& c) {
    std::uint8_t buf[16384];
    while (c.origin) {
        auto n = ::recv(c.origin.get(), buf, sizeof buf, 0);
        if (n < 0) {
            if (errno == EAGAIN || errno == EWOULDBLOCK) return;
            n = 0;
        }
        if (n == 0) {
            c.splice->origin_closed();
            c.origin.reset();
            c.to_origin.clear();
            return;
        }
        c.splice->from_origin(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
    }
}

void TcpProxyServer::on_origin_writable(Conn& c) {
    if (c.phase == Conn::Phase::Connecting) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(c.origin.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            c.origin.reset();
            c.splice.reset();
            c.phase = Conn::Phase::Draining;
            c.close_client_after_flush = true;
            return;
        }
        c.phase = Conn::Phase::Splicing;
    }
    if (!flush(c.origin.get(), c.to_origin)) c.splice->origin_closed();
}

bool TcpProxyServer::finished(Conn& c) {
    if (c.close_origin_after_flush && c.origin && c.to_origin.empty() && c.phase != Conn::Phase::Connecting)
        c.origin.reset();
    if (c.close_client_after_flush && c.client && c.to_client.empty()) c.client.reset();
    bool done = (!c.client || c.close_client_after_flush) && (!c.origin || c.close_origin_after_flush) &&
                c.to_client.empty() && (c.to_origin.empty() || !c.origin);
    if (done && c.splice && c.splice->finished() && !c.recorded && c.claim) {
        c.recorded = true;
        std::lock_guard lock(done_mu_);
        completed_.push_back({c.peer, *c.claim, c.splice->stats()});
    }
    return done && !c.client && !c.origin;
}

void TcpProxyServer::loop() {
    std::vector<pollfd> fds;
    while (running_) {
        fds.clear();
        fds.push_back({waker_.read_fd(), POLLIN, 0});
        fds.push_back({http_listener_.get(), POLLIN, 0});
        fds.push_back({tls_listener_.get(), POLLIN, 0});
        for (const auto& c : conns_) {
            short cev = 0, oev = 0;
            if (c->client) {
                if (!c->close_client_after_flush && !(c->splice && c->splice->finished())) cev |= POLLIN;
                if (!c->to_client.empty()) cev |= POLLOUT;
            }
            if (c->origin) {
                if (c->phase == Conn::Phase::Connecting || !c->to_origin.empty()) oev |= POLLOUT;
                if (c->phase == Conn::Phase::Splicing && !(c->splice && c->splice->finished())) oev |= POLLIN;
            }
            fds.push_back({c->client ? c->client.get() : -1, cev, 0});
            fds.push_back({c->origin ? c->origin.get() : -1, oev, 0});
        }
        if (::poll(fds.data(), fds.size(), 1000) < 0) {
            if (errno == EINTR) continue;
            throw_errno("poll");
        }
        if (fds[0].revents) waker_.drain();
        std::size_t existing = conns_.size();
        for (std::size_t i = 0; i < existing; ++i) {
            Conn& c = *conns_[i];
            const auto& cp = fds[3 + 2 * i];
            const auto& op = fds[4 + 2 * i];
            if (c.client && (cp.revents & (POLLIN | POLLHUP | POLLERR))) on_client_readable(c);
            if (c.client && (cp.revents & POLLOUT) && !flush(c.client.get(), c.to_client)) {
                c.to_client.clear();
                if (c.splice) c.splice->client_closed();
                c.close_client_after_flush = true;
            }
            if (c.origin && (op.revents & POLLOUT)) on_origin_writable(c);
            if (c.origin && c.phase == Conn::Phase::Splicing && (op.revents & (POLLIN | POLLHUP | POLLERR)))
                on_origin_readable(c);
        }
        if (fds[1].revents & POLLIN) accept_all(http_listener_.get(), false);
        if (fds[2].revents & POLLIN) accept_all(tls_listener_.get(), true);
        std::erase_if(conns_, [this](const std::unique_ptr<Conn>& c) { return finished(*c); });
    }
}

}  // namespace sdns::live
