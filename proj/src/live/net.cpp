#include "sdns/live/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>

namespace sdns::live {

namespace {

sockaddr_in to_sockaddr(Endpoint e) {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(e.port);
    sa.sin_addr.s_addr = htonl(e.ip.value());
    return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa) { return {Ipv4(ntohl(sa.sin_addr.s_addr)), ntohs(sa.sin_port)}; }

}  // namespace

void Fd::reset(int fd) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
}

void throw_errno(const char* what) { throw Error(std::string(what) + ": " + std::strerror(errno)); }

void set_nonblocking(int fd) {
    int flags = ::fcntl(fd, F_GETFL, 0);
    if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0) throw_errno("fcntl");
}

Fd udp_socket(Endpoint bind_to) {
    Fd fd(::socket(AF_INET, SOCK_DGRAM | SOCK_CLOEXEC, 0));
    if (!fd) throw_errno("socket");
    auto sa = to_sockaddr(bind_to);
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) throw_errno("bind");
    return fd;
}

Fd tcp_listener(Endpoint bind_to, int backlog) {
    Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd) throw_errno("socket");
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto sa = to_sockaddr(bind_to);
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) throw_errno("bind");
    if (::listen(fd.get(), backlog) < 0) throw_errno("listen");
    set_nonblocking(fd.get());
    return fd;
}

Fd tcp_connect_nonblocking(Endpoint to) {
    Fd fd(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!fd) throw_errno("socket");
    set_nonblocking(fd.get());
    auto sa = to_sockaddr(to);
    if (::connect(fd.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0 && errno != EINPROGRESS)
        throw_errno("connect");
    return fd;
}

Endpoint local_endpoint(int fd) {
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len) < 0) throw_errno("getsockname");
    return from_sockaddr(sa);
}

void send_datagram(int fd, Endpoint to, std::span<const std::uint8_t> bytes) {
    auto sa = to_sockaddr(to);
    if (::sendto(fd, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0)
        throw_errno("sendto");
}

std::optional<std::pair<std::vector<std::uint8_t>, Endpoint>> recv_datagram(int fd, std::chrono::milliseconds timeout) {
    pollfd p{fd, POLLIN, 0};
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0) throw_errno("poll");
    if (rc == 0) return std::nullopt;
    std::vector<std::uint8_t> buf(65535);
    sockaddr_in sa{};
    socklen_t len = sizeof sa;
    auto n = ::recvfrom(fd, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&sa), &len);
    if (n < 0) throw_errno("recvfrom");
    buf.resize(static_cast<std::size_t>(n));
    return std::make_pair(std::move(buf), from_sockaddr(sa));
}

Waker::Waker() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC | O_NONBLOCK) < 0) throw_errno("pipe");
    read_.reset(fds[0]);
    write_.reset(fds[1]);
}

void Waker::wake() {
    char c = 1;
    [[maybe_unused]] auto n = ::write(write_.get(), &c, 1);
}

void Waker::drain() {
    char buf[64];
    while (::read(read_.get(), buf, sizeof buf) > 0) {
    }
}

}  // namespace sdns::live
