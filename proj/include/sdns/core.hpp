#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdns {

/// Virtual simulation time, measured from the start of a scenario.
using VirtualTime = std::chrono::milliseconds;

inline constexpr VirtualTime seconds_to_time(double s) {
    return VirtualTime{static_cast<std::int64_t>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))};
}

inline constexpr double to_seconds(VirtualTime t) {
    return static_cast<double>(t.count()) / 1000.0;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration document that cannot be turned into a scenario or audit.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// IPv4 address held in host byte order.
class Ipv4 {
public:
    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    static std::optional<Ipv4> parse(std::string_view text);
    /// Throws sdns::Error on malformed input.
    static Ipv4 from_string(std::string_view text);

    constexpr std::uint32_t value() const { return value_; }
    constexpr std::uint32_t slash24() const { return value_ & 0xFFFFFF00u; }
    std::string to_string() const;

    friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

private:
    std::uint32_t value_ = 0;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ull);

/// One step of the splitmix64 generator; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Seed for a named substream of a master seed (per node, per purpose).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

std::string to_hex(std::uint64_t v);
std::string to_lower(std::string_view s);

}  // namespace sdns

template <>
struct std::hash<sdns::Ipv4> {
    std::size_t operator()(sdns::Ipv4 ip) const noexcept { return std::hash<std::uint32_t>{}(ip.value()); }
};
