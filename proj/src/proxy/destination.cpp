#include "sdns/proxy/destination.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "sdns/dnswire/message.hpp"

namespace sdns::proxy {
namespace {

using Status = ExtractResult::Status;

ExtractResult no_destination() { return {Status::NoDestination, {}}; }
ExtractResult incomplete(std::size_t have) {
    return have >= kMaxPrefixBytes ? no_destination() : ExtractResult{Status::Incomplete, {}};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::optional<std::string> host_without_port(std::string_view host) {
    host = trim(host);
    if (host.empty()) return std::nullopt;
    if (host.front() == '[') {
        auto close = host.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        return std::string(host.substr(1, close - 1));
    }
    auto colon = host.rfind(':');
    if (colon != std::string_view::npos) {
        auto port = host.substr(colon + 1);
        if (port.empty() || !std::all_of(port.begin(), port.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::nullopt;
        host = host.substr(0, colon);
    }
    try {
        auto name = dns::normalize_name(host);
        if (name.empty()) return std::nullopt;
        return name;
    } catch (const dns::InvalidName&) {
        return std::nullopt;
    }
}

ExtractResult extract_http(std::span<const std::uint8_t> prefix) {
    std::string_view text(reinterpret_cast<const char*>(prefix.data()), prefix.size());
    auto end = text.find("\r\n\r\n");
    if (end == std::string_view::npos) return incomplete(prefix.size());
    auto head = text.substr(0, end + 2);
    auto first_eol = head.find("\r\n");
    auto request_line = head.substr(0, first_eol);
    auto sp = request_line.find(' ');
    if (sp == std::string_view::npos || sp == 0) return no_destination();
    if (request_line.find(" HTTP/1.") == std::string_view::npos) return no_destination();

    std::size_t pos = first_eol + 2;
    while (pos < head.size()) {
        auto eol = head.find("\r\n", pos);
        auto line = head.substr(pos, eol - pos);
        pos = eol + 2;
        auto colon = line.find(':');
        if (colon == std::string_view::npos) continue;
        if (!iequals(trim(line.substr(0, colon)), "host")) continue;
        auto host = host_without_port(line.substr(colon + 1));
        if (!host) return no_destination();
        return {Status::Complete, {*host, Protocol::HttpHost}};
    }
    return no_destination();
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> d) : d_(d) {}
    bool skip(std::size_t n) {
        if (pos_ + n > d_.size()) return false;
        pos_ += n;
        return true;
    }
    std::optional<std::uint32_t> read(int width) {
        if (pos_ + static_cast<std::size_t>(width) > d_.size()) return std::nullopt;
        std::uint32_t v = 0;
        for (int i = 0; i < width; ++i) v = (v << 8) | d_[pos_++];
        return v;
    }
    std::optional<std::span<const std::uint8_t>> take(std::size_t n) {
        if (pos_ + n > d_.size()) return std::nullopt;
        auto s = d_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::span<const std::uint8_t> d_;
    std::size_t pos_ = 0;
};

/// Walks a ClientHello handshake body. nullopt on a malformed body,
/// optional<string>{} (empty) when well formed but without host_name.
std::optional<std::optional<std::string>> parse_hello_body(std::span<const std::uint8_t> body) {
    Cursor c(body);
    if (!c.skip(2 + 32)) return std::nullopt;  // client_version, random
    auto sid = c.read(1);
    if (!sid || !c.skip(*sid)) return std::nullopt;
    auto suites = c.read(2);
    if (!suites || !c.skip(*suites)) return std::nullopt;
    auto comp = c.read(1);
    if (!comp || !c.skip(*comp)) return std::nullopt;
    auto ext_total = c.read(2);
    if (!ext_total) return std::optional<std::string>{};  // no extensions at all
    auto exts = c.take(*ext_total);
    if (!exts) return std::nullopt;
    Cursor e(*exts);
    for (;;) {
        auto type = e.read(2);
        if (!type) break;
        auto len = e.read(2);
        if (!len) return std::nullopt;
        auto data = e.take(*len);
        if (!data) return std::nullopt;
        if (*type != 0) continue;
        Cursor sn(*data);
        auto list_len = sn.read(2);
        if (!list_len) return std::nullopt;
        auto list = sn.take(*list_len);
        if (!list) return std::nullopt;
        Cursor l(*list);
        for (;;) {
            auto name_type = l.read(1);
            if (!name_type) break;
            auto name_len = l.read(2);
            if (!name_len) return std::nullopt;
            auto name = l.take(*name_len);
            if (!name) return std::nullopt;
            if (*name_type == 0)
                return std::optional<std::string>{std::string(reinterpret_cast<const char*>(name->data()), name->size())};
        }
        return std::optional<std::string>{};
    }
    return std::optional<std::string>{};
}

ExtractResult extract_tls(std::span<const std::uint8_t> prefix) {
    if (prefix.size() < 5) return incomplete(prefix.size());
    std::size_t record_len = (std::size_t{prefix[3]} << 8) | prefix[4];
    if (prefix.size() < 5 + record_len) return incomplete(prefix.size());
    auto sni = client_hello_sni(prefix.subspan(0, 5 + record_len));
    if (!sni) return no_destination();
    try {
        auto name = dns::normalize_name(*sni);
        if (name.empty()) return no_destination();
        return {Status::Complete, {name, Protocol::TlsSni}};
    } catch (const dns::InvalidName&) {
        return no_destination();
    }
}

void put16(std::vector<std::uint8_t>& v, std::size_t n) {
    v.push_back(static_cast<std::uint8_t>(n >> 8));
    v.push_back(static_cast<std::uint8_t>(n & 0xFF));
}

void put24(std::vector<std::uint8_t>& v, std::size_t n) {
    v.push_back(static_cast<std::uint8_t>(n >> 16));
    put16(v, n & 0xFFFF);
}

std::vector<std::uint8_t> random_bytes(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

}  // namespace

bool looks_like_tls(std::span<const std::uint8_t> prefix) {
    return !prefix.empty() && prefix[0] == kTlsHandshake && (prefix.size() < 2 || prefix[1] == 0x03);
}

ExtractResult extract_destination(std::span<const std::uint8_t> prefix) {
    if (prefix.empty()) return incomplete(0);
    if (looks_like_tls(prefix)) return extract_tls(prefix);
    return extract_http(prefix);
}

std::optional<std::string> client_hello_sni(std::span<const std::uint8_t> record) {
    if (record.size() < 9 || record[0] != kTlsHandshake) return std::nullopt;
    std::size_t record_len = (std::size_t{record[3]} << 8) | record[4];
    if (record.size() < 5 + record_len) return std::nullopt;
    auto hs = record.subspan(5, record_len);
    if (hs.size() < 4 || hs[0] != 0x01) return std::nullopt;
    std::size_t body_len = (std::size_t{hs[1]} << 16) | (std::size_t{hs[2]} << 8) | hs[3];
    if (hs.size() < 4 + body_len) return std::nullopt;
    auto parsed = parse_hello_body(hs.subspan(4, body_len));
    if (!parsed || !*parsed) return std::nullopt;
    return **parsed;
}

std::vector<std::uint8_t> tls_record(std::uint8_t content_type, std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> out{content_type, 0x03, 0x03};
    put16(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

std::vector<std::uint8_t> build_client_hello(const std::optional<std::string>& sni, std::uint64_t random_seed) {
    std::mt19937_64 rng(random_seed);
    std::vector<std::uint8_t> body{0x03, 0x03};
    auto random = random_bytes(rng, 32);
    body.insert(body.end(), random.begin(), random.end());
    body.push_back(32);
    auto sid = random_bytes(rng, 32);
    body.insert(body.end(), sid.begin(), sid.end());
    const std::uint16_t suites[] = {0x1301, 0x1302, 0xc02b, 0xc02f, 0xc00a, 0x009c};
    put16(body, sizeof(suites));
    for (auto s : suites) put16(body, s);
    body.push_back(1);
    body.push_back(0);

    std::vector<std::uint8_t> exts;
    if (sni) {
        std::vector<std::uint8_t> entry{0x00};
        put16(entry, sni->size());
        entry.insert(entry.end(), sni->begin(), sni->end());
        put16(exts, 0x0000);
        put16(exts, entry.size() + 2);
        put16(exts, entry.size());
        exts.insert(exts.end(), entry.begin(), entry.end());
    }
    // supported_groups and supported_versions, so the hello is not SNI-only.
    const std::uint8_t groups[] = {0x00, 0x0a, 0x00, 0x06, 0x00, 0x04, 0x00, 0x1d, 0x00, 0x17};
    exts.insert(exts.end(), std::begin(groups), std::end(groups));
    const std::uint8_t versions[] = {0x00, 0x2b, 0x00, 0x05, 0x04, 0x03, 0x04, 0x03, 0x03};
    exts.insert(exts.end(), std::begin(versions), std::end(versions));
    put16(body, exts.size());
    body.insert(body.end(), exts.begin(), exts.end());

    std::vector<std::uint8_t> hs{0x01};
    put24(hs, body.size());
    hs.insert(hs.end(), body.begin(), body.end());
    auto rec = tls_record(kTlsHandshake, hs);
    rec[2] = 0x01;  // record-layer version 1.0, as browsers send
    return rec;
}

std::vector<std::uint8_t> build_server_hello(std::uint64_t random_seed) {
    std::mt19937_64 rng(random_seed);
    std::vector<std::uint8_t> body{0x03, 0x03};
    auto random = random_bytes(rng, 32);
    body.insert(body.end(), random.begin(), random.end());
    body.push_back(0);
    put16(body, 0xc02f);
    body.push_back(0);
    std::vector<std::uint8_t> hs{0x02};
    put24(hs, body.size());
    hs.insert(hs.end(), body.begin(), body.end());
    return tls_record(kTlsHandshake, hs);
}

std::size_t split_tls_records(std::span<const std::uint8_t> bytes, std::vector<TlsRecord>& out) {
    std::size_t pos = 0;
    while (pos + 5 <= bytes.size()) {
        std::size_t len = (std::size_t{bytes[pos + 3]} << 8) | bytes[pos + 4];
        if (pos + 5 + len > bytes.size()) break;
        out.push_back({bytes[pos], {bytes.begin() + static_cast<std::ptrdiff_t>(pos + 5),
                                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + 5 + len)}});
        pos += 5 + len;
    }
    return pos;
}

}  // namespace sdns::proxy
