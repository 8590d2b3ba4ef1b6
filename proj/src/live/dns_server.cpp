#include "sdns/live/dns_server.hpp"

#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <random>

namespace sdns::live {

UdpForwardUpstream::UdpForwardUpstream(Endpoint server, std::chrono::milliseconds timeout)
    : server_(server), timeout_(timeout), next_id_(static_cast<std::uint16_t>(std::random_device{}())) {}

std::optional<resolver::UpstreamAnswer> UdpForwardUpstream::lookup(const dns::Question& q, Ipv4, VirtualTime) {
    std::uint16_t id;
    {
        std::lock_guard lock(mu_);
        id = next_id_++;
    }
    auto query = dns::DnsMessage::query(id, q.qname, true);
    query.question.qtype = q.qtype;
    auto sock = udp_socket({Ipv4(0, 0, 0, 0), 0});
    send_datagram(sock.get(), server_, dns::encode(query));
    auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left <= std::chrono::milliseconds::zero()) return std::nullopt;
        auto got = recv_datagram(sock.get(), left);
        if (!got) return std::nullopt;
        dns::DnsMessage reply;
        try {
            reply = dns::decode(got->first);
        } catch (const dns::Malformed&) {
            continue;
        }
        if (reply.id != id || !reply.flags.is_response || reply.question != query.question) continue;
        resolver::UpstreamAnswer out;
        out.rcode = reply.flags.rcode;
        for (auto& rr : reply.answers) {
            if (rr.rtype != q.qtype) continue;
            out.ttl = out.records.empty() ? rr.ttl : std::min(out.ttl, rr.ttl);
            out.records.push_back(std::move(rr));
        }
        return out;
    }
}

UdpResolverServer::UdpResolverServer(resolver::SmartResolver& resolver, Endpoint bind_to)
    : resolver_(resolver), sock_(udp_socket(bind_to)), bound_(local_endpoint(sock_.get())) {
    set_nonblocking(sock_.get());
}

UdpResolverServer::~UdpResolverServer() { stop(); }

void UdpResolverServer::start() {
    if (running_.exchange(true)) return;
    epoch_ = std::chrono::steady_clock::now();
    thread_ = std::thread([this] { loop(); });
}

void UdpResolverServer::stop() {
    if (!running_.exchange(false)) return;
    waker_.wake();
    if (thread_.joinable()) thread_.join();
}

void UdpResolverServer::loop() {
    std::vector<std::uint8_t> buf(65535);
    while (running_) {
        pollfd fds[2] = {{sock_.get(), POLLIN, 0}, {waker_.read_fd(), POLLIN, 0}};
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            throw_errno("poll");
        }
        if (fds[1].revents) waker_.drain();
        if (!(fds[0].revents & POLLIN)) continue;
        while (true) {
            sockaddr_in sa{};
            socklen_t len = sizeof sa;
            auto n = ::recvfrom(sock_.get(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
            if (n < 0) break;
            Endpoint from{Ipv4(ntohl(sa.sin_addr.s_addr)), ntohs(sa.sin_port)};
            dns::DnsMessage query;
            try {
                query = dns::decode(std::span(buf).first(static_cast<std::size_t>(n)));
            } catch (const dns::Malformed&) {
                ++malformed_;
                continue;
            }
            auto now = std::chrono::duration_cast<VirtualTime>(std::chrono::steady_clock::now() - epoch_);
            auto reply = resolver_.resolve(query, from.ip, now);
            if (!reply) continue;
            ++served_;
            try {
                send_datagram(sock_.get(), from, dns::encode(*reply));
            } catch (const Error&) {
            }
        }
    }
}

}  // namespace sdns::live
