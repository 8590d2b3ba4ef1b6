#pragma once

// Thin POSIX socket helpers for the live (non-simulated) services.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sdns/core.hpp"

namespace sdns::live {

/// Owns a file descriptor.
class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) reset(std::exchange(o.fd_, -1));
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }
    void reset(int fd = -1);

private:
    int fd_ = -1;
};

struct Endpoint {
    Ipv4 ip;
    std::uint16_t port = 0;
};

/// Throws sdns::Error with errno text.
[[noreturn]] void throw_errno(const char* what);

Fd udp_socket(Endpoint bind_to);
Fd tcp_listener(Endpoint bind_to, int backlog = 64);
/// Non-blocking connect; completion is signalled by writability.
Fd tcp_connect_nonblocking(Endpoint to);
void set_nonblocking(int fd);
Endpoint local_endpoint(int fd);

void send_datagram(int fd, Endpoint to, std::span<const std::uint8_t> bytes);
/// Waits up to `timeout` for one datagram.
std::optional<std::pair<std::vector<std::uint8_t>, Endpoint>> recv_datagram(int fd, std::chrono::milliseconds timeout);

/// Self-pipe used to wake a poll() loop from another thread.
class Waker {
public:
    Waker();
    void wake();
    void drain();
    int read_fd() const { return read_.get(); }

private:
    Fd read_;
    Fd write_;
};

}  // namespace sdns::live
