#pragma once

// Minimal RFC 1035 codec for the subset the resolver and the audit tooling
// need: one question, A and NS records, class IN. Names are emitted without
// compression; compression pointers are accepted on decode.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sdns/core.hpp"

namespace sdns::dns {

class InvalidName : public Error {
public:
    using Error::Error;
};

class Malformed : public Error {
public:
    using Error::Error;
};

enum class RecordType : std::uint16_t { A = 1, NS = 2 };
inline constexpr std::uint16_t kClassIn = 1;

enum class Rcode : std::uint8_t { NoError = 0, ServFail = 2, NxDomain = 3, Refused = 5 };

struct Flags {
    bool is_response = false;
    bool authoritative = false;
    bool truncated = false;
    bool recursion_desired = false;
    bool recursion_available = false;
    Rcode rcode = Rcode::NoError;

    friend bool operator==(const Flags&, const Flags&) = default;
};

struct Question {
    std::string qname;  // lowercase, no trailing dot; "" is the root
    std::uint16_t qtype = static_cast<std::uint16_t>(RecordType::A);
    std::uint16_t qclass = kClassIn;

    friend bool operator==(const Question&, const Question&) = default;
};

/// Rdata of a record type the codec does not interpret; kept verbatim.
struct OpaqueRdata {
    std::vector<std::uint8_t> bytes;
    friend bool operator==(const OpaqueRdata&, const OpaqueRdata&) = default;
};

/// NS rdata: the nameserver host name.
struct NameRdata {
    std::string name;
    friend bool operator==(const NameRdata&, const NameRdata&) = default;
};

using Rdata = std::variant<Ipv4, NameRdata, OpaqueRdata>;

struct ResourceRecord {
    std::string name;
    std::uint16_t rtype = static_cast<std::uint16_t>(RecordType::A);
    std::uint16_t rclass = kClassIn;
    std::uint32_t ttl = 0;
    Rdata rdata;

    static ResourceRecord a(std::string name, Ipv4 ip, std::uint32_t ttl);
    static ResourceRecord ns(std::string name, std::string host, std::uint32_t ttl);

    bool is_a() const { return rtype == static_cast<std::uint16_t>(RecordType::A); }
    /// The address of an A record; throws if this is not one.
    Ipv4 address() const;

    friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

struct DnsMessage {
    std::uint16_t id = 0;
    Flags flags;
    Question question;
    std::vector<ResourceRecord> answers;
    std::vector<ResourceRecord> authority;
    std::vector<ResourceRecord> additional;

    static DnsMessage query(std::uint16_t id, std::string_view qname, bool recursion_desired);
    /// A response skeleton echoing id, question and RD of `query`.
    static DnsMessage reply_to(const DnsMessage& query, Rcode rcode = Rcode::NoError);

    friend bool operator==(const DnsMessage&, const DnsMessage&) = default;
};

/// Lowercases and strips one trailing dot; throws InvalidName on label or
/// total length violations or empty inner labels.
std::string normalize_name(std::string_view name);

std::vector<std::uint8_t> encode(const DnsMessage& msg);
DnsMessage decode(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> from_hex(std::string_view hex);
std::string hex(std::span<const std::uint8_t> bytes);

}  // namespace sdns::dns
