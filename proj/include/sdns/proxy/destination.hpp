#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdns/core.hpp"

namespace sdns::proxy {

enum class Protocol { HttpHost, TlsSni };

/// Where the client says it wants to go, read from the first request bytes.
struct DestinationClaim {
    std::string hostname;
    Protocol protocol = Protocol::HttpHost;

    friend bool operator==(const DestinationClaim&, const DestinationClaim&) = default;
};

/// Cap on bytes buffered while waiting for a complete request head or ClientHello.
inline constexpr std::size_t kMaxPrefixBytes = 16 * 1024;

struct ExtractResult {
    enum class Status { Complete, Incomplete, NoDestination };
    Status status = Status::NoDestination;
    DestinationClaim claim;  // valid when status == Complete

    bool complete() const { return status == Status::Complete; }
};

/// Reads the Host header of an HTTP/1.x request head or the SNI host_name of a
/// TLS ClientHello. Incomplete means more bytes are needed; once the prefix
/// reaches kMaxPrefixBytes that turns into NoDestination.
ExtractResult extract_destination(std::span<const std::uint8_t> prefix);

/// True when the bytes look like the start of a TLS handshake record.
bool looks_like_tls(std::span<const std::uint8_t> prefix);

// TLS record helpers. The proxy never terminates TLS; these exist so the
// simulator's endpoints can speak something ClientHello-shaped.

inline constexpr std::uint8_t kTlsHandshake = 0x16;
inline constexpr std::uint8_t kTlsApplicationData = 0x17;

/// A TLS 1.2-style ClientHello record, with a server_name extension when `sni` is set.
std::vector<std::uint8_t> build_client_hello(const std::optional<std::string>& sni, std::uint64_t random_seed);
/// A ServerHello-shaped handshake record.
std::vector<std::uint8_t> build_server_hello(std::uint64_t random_seed);
std::vector<std::uint8_t> tls_record(std::uint8_t content_type, std::span<const std::uint8_t> payload);

struct TlsRecord {
    std::uint8_t content_type = 0;
    std::vector<std::uint8_t> payload;
};

/// Splits a byte stream into complete records; returns how many bytes were consumed.
std::size_t split_tls_records(std::span<const std::uint8_t> bytes, std::vector<TlsRecord>& out);

/// SNI host name of a ClientHello record, if present and well formed.
std::optional<std::string> client_hello_sni(std::span<const std::uint8_t> record);

}  // namespace sdns::proxy
