#include "sdns/dnswire/message.hpp"

#include <cstdio>

namespace sdns::dns {
namespace {

constexpr std::size_t kMaxLabel = 63;
constexpr std::size_t kMaxWireName = 255;
constexpr int kMaxPointerJumps = 64;

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v & 0xFFFF));
    }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    void name(std::string_view n) {
        std::string norm = normalize_name(n);
        std::string_view rest = norm;
        while (!rest.empty()) {
            auto dot = rest.find('.');
            auto label = rest.substr(0, dot);
            u8(static_cast<std::uint8_t>(label.size()));
            for (char c : label) u8(static_cast<std::uint8_t>(c));
            rest = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
        }
        u8(0);
    }

    std::size_t size() const { return out_.size(); }
    void patch16(std::size_t at, std::uint16_t v) {
        out_[at] = static_cast<std::uint8_t>(v >> 8);
        out_[at + 1] = static_cast<std::uint8_t>(v & 0xFF);
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::string name() {
        std::string out;
        std::size_t cursor = pos_;
        std::size_t resume = 0;
        bool jumped = false;
        int jumps = 0;
        std::size_t wire_len = 1;
        // Pointers must go strictly backwards from the label that holds them.
        std::size_t floor = pos_;
        for (;;) {
            if (cursor >= data_.size()) throw Malformed("name runs past end of message");
            std::uint8_t len = data_[cursor];
            if ((len & 0xC0) == 0xC0) {
                if (cursor + 1 >= data_.size()) throw Malformed("truncated compression pointer");
                std::size_t target = static_cast<std::size_t>(((len & 0x3F) << 8) | data_[cursor + 1]);
                if (!jumped) resume = cursor + 2;
                if (target >= floor || ++jumps > kMaxPointerJumps) throw Malformed("compression pointer loop");
                jumped = true;
                cursor = target;
                floor = target;
                continue;
            }
            if ((len & 0xC0) != 0) throw Malformed("unsupported label type");
            if (len == 0) {
                ++cursor;
                break;
            }
            if (cursor + 1 + len > data_.size()) throw Malformed("label runs past end of message");
            wire_len += 1u + len;
            if (wire_len > kMaxWireName) throw Malformed("name longer than 255 bytes");
            if (!out.empty()) out.push_back('.');
            for (std::size_t i = 0; i < len; ++i) {
                char c = static_cast<char>(data_[cursor + 1 + i]);
                if (c == '.') throw Malformed("label contains a dot");
                out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
            }
            cursor += 1u + len;
        }
        pos_ = jumped ? resume : cursor;
        return out;
    }

    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > data_.size()) throw Malformed("message truncated");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

void write_record(Writer& w, const ResourceRecord& rr) {
    w.name(rr.name);
    w.u16(rr.rtype);
    w.u16(rr.rclass);
    w.u32(rr.ttl);
    std::size_t len_at = w.size();
    w.u16(0);
    std::visit(
        [&](const auto& rd) {
            using T = std::decay_t<decltype(rd)>;
            if constexpr (std::is_same_v<T, Ipv4>) {
                w.u32(rd.value());
            } else if constexpr (std::is_same_v<T, NameRdata>) {
                w.name(rd.name);
            } else {
                w.bytes(rd.bytes);
            }
        },
        rr.rdata);
    std::size_t rdlen = w.size() - len_at - 2;
    if (rdlen > 0xFFFF) throw InvalidName("rdata too long");
    w.patch16(len_at, static_cast<std::uint16_t>(rdlen));
}

ResourceRecord read_record(Reader& r) {
    ResourceRecord rr;
    rr.name = r.name();
    rr.rtype = r.u16();
    rr.rclass = r.u16();
    rr.ttl = r.u32();
    std::uint16_t rdlen = r.u16();
    std::size_t start = r.pos();
    bool in = rr.rclass == kClassIn;
    if (in && rr.rtype == static_cast<std::uint16_t>(RecordType::A)) {
        if (rdlen != 4) throw Malformed("A record rdata must be 4 bytes");
        rr.rdata = Ipv4{r.u32()};
    } else if (in && rr.rtype == static_cast<std::uint16_t>(RecordType::NS)) {
        rr.rdata = NameRdata{r.name()};
        if (r.pos() - start != rdlen) throw Malformed("NS rdata length mismatch");
    } else {
        auto b = r.bytes(rdlen);
        rr.rdata = OpaqueRdata{{b.begin(), b.end()}};
    }
    return rr;
}

std::uint16_t pack_flags(const Flags& f) {
    std::uint16_t v = 0;
    if (f.is_response) v |= 0x8000;
    if (f.authoritative) v |= 0x0400;
    if (f.truncated) v |= 0x0200;
    if (f.recursion_desired) v |= 0x0100;
    if (f.recursion_available) v |= 0x0080;
    v |= static_cast<std::uint16_t>(f.rcode) & 0x0F;
    return v;
}

Flags unpack_flags(std::uint16_t v) {
    if ((v >> 11) & 0x0F) throw Malformed("only standard queries (opcode 0) are supported");
    Flags f;
    f.is_response = v & 0x8000;
    f.authoritative = v & 0x0400;
    f.truncated = v & 0x0200;
    f.recursion_desired = v & 0x0100;
    f.recursion_available = v & 0x0080;
    f.rcode = static_cast<Rcode>(v & 0x0F);
    return f;
}

}  // namespace

ResourceRecord ResourceRecord::a(std::string name, Ipv4 ip, std::uint32_t ttl) {
    return ResourceRecord{normalize_name(name), static_cast<std::uint16_t>(RecordType::A), kClassIn, ttl, ip};
}

ResourceRecord ResourceRecord::ns(std::string name, std::string host, std::uint32_t ttl) {
    return ResourceRecord{normalize_name(name), static_cast<std::uint16_t>(RecordType::NS), kClassIn, ttl,
                          NameRdata{normalize_name(host)}};
}

Ipv4 ResourceRecord::address() const {
    if (const auto* ip = std::get_if<Ipv4>(&rdata)) return *ip;
    throw Error("record for '" + name + "' is not an A record");
}

DnsMessage DnsMessage::query(std::uint16_t id, std::string_view qname, bool recursion_desired) {
    DnsMessage m;
    m.id = id;
    m.flags.recursion_desired = recursion_desired;
    m.question.qname = normalize_name(qname);
    return m;
}

DnsMessage DnsMessage::reply_to(const DnsMessage& query, Rcode rcode) {
    DnsMessage m;
    m.id = query.id;
    m.flags.is_response = true;
    m.flags.recursion_desired = query.flags.recursion_desired;
    m.flags.rcode = rcode;
    m.question = query.question;
    return m;
}

std::string normalize_name(std::string_view name) {
    if (!name.empty() && name.back() == '.') name.remove_suffix(1);
    std::string out = to_lower(name);
    if (out.empty()) return out;
    std::size_t wire = 1;
    std::size_t start = 0;
    for (;;) {
        auto dot = out.find('.', start);
        std::size_t len = (dot == std::string::npos ? out.size() : dot) - start;
        if (len == 0) throw InvalidName("empty label in '" + out + "'");
        if (len > kMaxLabel) throw InvalidName("label longer than 63 bytes in '" + out.substr(0, 80) + "'");
        wire += 1 + len;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (wire > kMaxWireName) throw InvalidName("name longer than 255 bytes");
    return out;
}

std::vector<std::uint8_t> encode(const DnsMessage& msg) {
    Writer w;
    w.u16(msg.id);
    w.u16(pack_flags(msg.flags));
    w.u16(1);
    auto count = [](const auto& v) {
        if (v.size() > 0xFFFF) throw InvalidName("too many records");
        return static_cast<std::uint16_t>(v.size());
    };
    w.u16(count(msg.answers));
    w.u16(count(msg.authority));
    w.u16(count(msg.additional));
    w.name(msg.question.qname);
    w.u16(msg.question.qtype);
    w.u16(msg.question.qclass);
    for (const auto& rr : msg.answers) write_record(w, rr);
    for (const auto& rr : msg.authority) write_record(w, rr);
    for (const auto& rr : msg.additional) write_record(w, rr);
    return w.take();
}

DnsMessage decode(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    DnsMessage m;
    m.id = r.u16();
    m.flags = unpack_flags(r.u16());
    std::uint16_t qd = r.u16();
    std::uint16_t an = r.u16();
    std::uint16_t ns = r.u16();
    std::uint16_t ar = r.u16();
    if (qd != 1) throw Malformed("expected exactly one question");
    m.question.qname = r.name();
    m.question.qtype = r.u16();
    m.question.qclass = r.u16();
    m.answers.reserve(an);
    for (int i = 0; i < an; ++i) m.answers.push_back(read_record(r));
    for (int i = 0; i < ns; ++i) m.authority.push_back(read_record(r));
    for (int i = 0; i < ar; ++i) m.additional.push_back(read_record(r));
    if (!r.at_end()) throw Malformed("trailing bytes after message");
    return m;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    std::vector<std::uint8_t> out;
    int hi = -1;
    for (char c : hex) {
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
        else throw Error(std::string("invalid hex character '") + c + "'");
        if (hi < 0) {
            hi = v;
        } else {
            out.push_back(static_cast<std::uint8_t>((hi << 4) | v));
            hi = -1;
        }
    }
    if (hi >= 0) throw Error("odd number of hex digits");
    return out;
}

std::string hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0F]);
    }
    return out;
}

}  // namespace sdns::dns
