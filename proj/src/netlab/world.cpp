#include "sdns/netlab/world.hpp"

#include <charconv>

#include "sdns/audit/deproxy.hpp"
#include "sdns/proxy/destination.hpp"

namespace sdns::netlab {

using dns::DnsMessage;
using dns::Rcode;

namespace {

std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string_view as_text(std::span<const std::uint8_t> b) {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

const char* reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 502: return "Bad Gateway";
        default: return "Status";
    }
}

template <typename Map>
auto& lookup_service(Map& m, const Topology& topo, std::string_view node, const char* what) {
    auto it = m.find(topo.id_of(node));
    if (it == m.end()) throw Error(std::string("node '") + std::string(node) + "' runs no " + what);
    return *it->second;
}

}  // namespace

// ---------------------------------------------------------------- authoritative

AuthoritativeServer::AuthoritativeServer(NodeId node, std::vector<AuthZone> zones)
    : node_(node), zones_(std::move(zones)) {
    for (auto& z : zones_) {
        z.zone = dns::normalize_name(z.zone);
        std::map<std::string, std::vector<Ipv4>> normalized;
        for (auto& [name, ips] : z.records) normalized[dns::normalize_name(name)] = ips;
        z.records = std::move(normalized);
    }
}

const AuthZone* AuthoritativeServer::zone_for(std::string_view qname) const {
    const AuthZone* best = nullptr;
    for (const auto& z : zones_)
        if (resolver::suffix_matches(qname, z.zone) && (!best || z.zone.size() > best->zone.size())) best = &z;
    return best;
}

std::optional<std::uint32_t> AuthoritativeServer::ttl_for(std::string_view qname) const {
    if (const auto* z = zone_for(qname)) return z->ttl;
    return std::nullopt;
}

resolver::UpstreamAnswer AuthoritativeServer::answer(const dns::Question& q, Ipv4 from, VirtualTime now) {
    log_.push_back({now, q.qname, from});
    seen_.insert(q.qname);
    resolver::UpstreamAnswer out;
    const auto* z = zone_for(q.qname);
    if (!z) {
        out.rcode = Rcode::Refused;
        return out;
    }
    out.ttl = z->ttl;
    if (q.qtype != static_cast<std::uint16_t>(dns::RecordType::A)) return out;
    if (auto it = z->records.find(q.qname); it != z->records.end()) {
        for (auto ip : it->second) out.records.push_back(dns::ResourceRecord::a(q.qname, ip, z->ttl));
    } else if (z->wildcard && q.qname != z->zone) {
        out.records.push_back(dns::ResourceRecord::a(q.qname, *z->wildcard, z->ttl));
    } else {
        out.rcode = Rcode::NxDomain;
    }
    return out;
}

void AuthoritativeServer::clear_log() {
    log_.clear();
    seen_.clear();
}

// ---------------------------------------------------------------- origins

int geofence_check(const Topology& topo, const GeofencePolicy& policy, Ipv4 requester) {
    if (!policy.allowed_regions) return 200;
    auto region = topo.region_of(requester);
    if (!region) return 403;
    return policy.allowed_regions->contains(*region) ? 200 : 403;
}

struct OriginServer::Conn {
    ConnId id = 0;
    Ipv4 peer;
    std::vector<std::uint8_t> buf;
    bool answered = false;
};

OriginServer::OriginServer(Simulator& sim, NodeId node, OriginConfig config)
    : sim_(sim), node_(node), ip_(sim.topology().node(node).ip), config_(std::move(config)) {
    std::set<std::string> names;
    for (const auto& h : config_.hostnames) names.insert(dns::normalize_name(h));
    config_.hostnames = std::move(names);
    sim_.listen(node_, kHttpPort, [this](ConnId id, Ipv4 peer) { return accept(id, peer, false); });
    sim_.listen(node_, kHttpsPort, [this](ConnId id, Ipv4 peer) { return accept(id, peer, true); });
}

StreamHandler OriginServer::accept(ConnId id, Ipv4 peer, bool) {
    auto c = std::make_shared<Conn>();
    c->id = id;
    c->peer = peer;
    StreamHandler h;
    h.on_data = [this, c](std::span<const std::uint8_t> bytes) { on_data(c, bytes); };
    h.on_closed = [this, id] { sim_.close(id, Side::Server); };
    return h;
}

void OriginServer::on_data(const std::shared_ptr<Conn>& c, std::span<const std::uint8_t> bytes) {
    if (c->answered) return;
    c->buf.insert(c->buf.end(), bytes.begin(), bytes.end());
    std::string head;
    std::string sni;
    bool tls = proxy::looks_like_tls(c->buf);
    if (tls) {
        std::vector<proxy::TlsRecord> records;
        proxy::split_tls_records(c->buf, records);
        if (records.size() < 2) return;
        auto hello = proxy::tls_record(records[0].content_type, records[0].payload);
        sni = proxy::client_hello_sni(hello).value_or("");
        if (records[1].content_type != proxy::kTlsApplicationData) {
            c->answered = true;
            sim_.close(c->id, Side::Server);
            return;
        }
        head = std::string(as_text(records[1].payload));
    } else {
        auto text = as_text(c->buf);
        auto end = text.find("\r\n\r\n");
        if (end == std::string_view::npos) return;
        head = std::string(text.substr(0, end + 4));
    }
    c->answered = true;
    std::string response = respond(head, sni, c->peer, tls);
    if (tls) {
        auto out = proxy::build_server_hello(splitmix64(c->id ^ ip_.value()));
        auto app = proxy::tls_record(proxy::kTlsApplicationData, as_bytes(response));
        out.insert(out.end(), app.begin(), app.end());
        sim_.write(c->id, Side::Server, out);
    } else {
        sim_.write(c->id, Side::Server, as_bytes(response));
    }
    sim_.close(c->id, Side::Server);
}

std::string OriginServer::respond(const std::string& request_head, const std::string& sni, Ipv4 peer, bool tls) {
    AccessLogEntry entry;
    entry.time = sim_.now();
    entry.requester = peer;
    entry.tls = tls;
    auto line_end = request_head.find("\r\n");
    auto request_line = std::string_view(request_head).substr(0, line_end);
    auto sp1 = request_line.find(' ');
    auto sp2 = request_line.find(' ', sp1 == std::string_view::npos ? 0 : sp1 + 1);
    if (sp1 != std::string_view::npos && sp2 != std::string_view::npos)
        entry.path = std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
    auto dest = proxy::extract_destination(as_bytes(request_head));
    entry.host = dest.complete() ? dest.claim.hostname : sni;
    entry.ip_literal = Ipv4::parse(entry.host).has_value();

    bool served = config_.hostnames.contains(entry.host) || entry.host == ip_.to_string();
    entry.status = served ? geofence_check(sim_.topology(), config_.geofence, peer) : 404;

    std::string body;
    if (config_.deproxy_page && !entry.ip_literal && entry.path == "/") {
        entry.session_id = "s" + std::to_string(next_session_++);
        if (entry.status == 200) {
            body = audit::build_deproxy_page(ip_, entry.session_id);
        }
    } else if (entry.path.rfind("/image.jpg?", 0) == 0) {
        entry.session_id = entry.path.substr(std::string_view("/image.jpg?").size());
        if (entry.status == 200) body = "image";
    } else if (entry.status == 200) {
        body = config_.body;
    }
    if (sim_.log().keeps_events())
        sim_.log().record(sim_.now(), node_, EventKind::HttpResponse, 0, static_cast<std::uint64_t>(entry.status),
                          std::to_string(entry.status) + " " + entry.host + entry.path + " for " + peer.to_string());
    log_.push_back(entry);
    return http_response(entry.status, body);
}

// ---------------------------------------------------------------- resolvers

std::optional<resolver::UpstreamAnswer> SimUpstream::lookup(const dns::Question& q, Ipv4 resolver_ip,
                                                            VirtualTime now) {
    auto& sim = world_.sim();
    auto* auth = world_.authoritative_for(q.qname);
    auto rnode = sim.topology().find_ip(resolver_ip);
    if (!auth) {
        resolver::UpstreamAnswer nx;
        nx.rcode = Rcode::NxDomain;
        return nx;
    }
    if (!sim.node_up(auth->node())) return std::nullopt;
    if (rnode && !sim.topology().latency(*rnode, auth->node())) return std::nullopt;
    bool detail = sim.log().keeps_events();
    if (rnode) sim.log().record(now, *rnode, EventKind::UpstreamQuery, 0, fnv1a64(q.qname), detail ? q.qname : "");
    sim.log().record(now, auth->node(), EventKind::AuthQuery, 0, fnv1a64(q.qname),
                     detail ? q.qname + " from " + resolver_ip.to_string() : "");
    return auth->answer(q, resolver_ip, now);
}

ResolverService::ResolverService(Simulator& sim, NodeId node, std::unique_ptr<resolver::SmartResolver> resolver)
    : sim_(sim), node_(node), resolver_(std::move(resolver)) {
    sim_.bind_udp(node_, kDnsPort, [this](const Datagram& d) {
        DnsMessage query;
        try {
            query = dns::decode(d.payload);
        } catch (const Error&) {
            return;
        }
        bool detail = sim_.log().keeps_events();
        sim_.log().record(sim_.now(), node_, EventKind::DnsQuery, query.id, fnv1a64(query.question.qname),
                          detail ? query.question.qname + " rd=" + (query.flags.recursion_desired ? "1" : "0") +
                                       " from " + d.src.to_string()
                                 : "");
        auto response = resolver_->resolve(query, d.src, sim_.now());
        if (!response) return;
        auto bytes = dns::encode(*response);
        if (detail) {
            std::string answer;
            for (const auto& rr : response->answers)
                if (rr.is_a()) answer += rr.address().to_string() + " ttl=" + std::to_string(rr.ttl) + " ";
            sim_.log().record(sim_.now(), node_, EventKind::DnsResponse, query.id, fnv1a64(bytes),
                              query.question.qname + " -> " + (answer.empty() ? "(no answer)" : answer));
        } else {
            sim_.log().record(sim_.now(), node_, EventKind::DnsResponse, query.id, 0);
        }
        sim_.send_udp(node_, sim_.topology().node(node_).ip, d.src, kDnsPort, d.src_port, std::move(bytes));
    });
}

// ---------------------------------------------------------------- proxies

struct ProxyService::Conn {
    enum class Phase { Sniffing, Connecting, Splicing, Done };
    ConnId client = 0;
    ConnId origin = 0;
    Ipv4 peer;
    Ipv4 origin_ip;
    std::uint16_t port = 0;
    Phase phase = Phase::Sniffing;
    std::vector<std::uint8_t> buf;
    proxy::DestinationClaim claim;
    bool client_closed = false;
    bool recorded = false;
    std::unique_ptr<proxy::SpliceSession> splice;
};

ProxyService::ProxyService(Simulator& sim, NodeId node, std::shared_ptr<const proxy::ProxyPolicy> policy,
                           std::shared_ptr<resolver::CustomerRegistry> registry, resolver::Upstream& upstream)
    : sim_(sim),
      node_(node),
      ip_(sim.topology().node(node).ip),
      policy_(std::move(policy)),
      registry_(std::move(registry)),
      honest_(resolver::ResolverConfig{}, std::make_shared<resolver::CustomerRegistry>(), upstream,
              sim.topology().node(node).ip) {
    for (std::uint16_t port : {kHttpPort, kHttpsPort})
        sim_.listen(node_, port, [this, port](ConnId id, Ipv4 peer) { return accept(id, peer, port); });
}

StreamHandler ProxyService::accept(ConnId id, Ipv4 peer, std::uint16_t port) {
    auto c = std::make_shared<Conn>();
    c->client = id;
    c->peer = peer;
    c->port = port;
    StreamHandler h;
    h.on_data = [this, c](std::span<const std::uint8_t> bytes) { on_client_data(c, bytes); };
    h.on_closed = [this, c] {
        c->client_closed = true;
        if (c->phase == Conn::Phase::Splicing) {
            c->splice->client_closed();
            if (!c->recorded) {
                c->recorded = true;
                completed_.push_back({c->peer, c->claim, c->origin_ip, c->splice->stats()});
            }
        }
        if (c->phase != Conn::Phase::Connecting) {
            if (c->phase == Conn::Phase::Sniffing) c->phase = Conn::Phase::Done;
            sim_.close(c->client, Side::Server);
        }
    };
    return h;
}

void ProxyService::on_client_data(const std::shared_ptr<Conn>& c, std::span<const std::uint8_t> bytes) {
    switch (c->phase) {
        case Conn::Phase::Sniffing:
            c->buf.insert(c->buf.end(), bytes.begin(), bytes.end());
            decide(c);
            break;
        case Conn::Phase::Connecting:
            c->buf.insert(c->buf.end(), bytes.begin(), bytes.end());
            break;
        case Conn::Phase::Splicing:
            c->splice->from_client(bytes);
            break;
        case Conn::Phase::Done:
            break;
    }
}

void ProxyService::decide(const std::shared_ptr<Conn>& c) {
    auto result = proxy::extract_destination(c->buf);
    if (result.status == proxy::ExtractResult::Status::Incomplete) return;
    bool tls = proxy::looks_like_tls(c->buf);
    ProxyDecisionRecord record{sim_.now(), c->peer, std::nullopt, false, false};
    auto finish = [&](bool relayed) {
        record.relayed = relayed;
        record.bannered = !relayed && !tls;
        if (sim_.log().keeps_events())
            sim_.log().record(sim_.now(), node_, EventKind::ProxyDecision, c->client, relayed,
                              (record.claim ? record.claim->hostname : std::string("(none)")) +
                                  (relayed ? " relay" : tls ? " close" : " banner") + " for " + c->peer.to_string());
        decisions_.push_back(record);
    };
    if (!result.complete()) {
        finish(false);
        refuse(c, !tls);
        return;
    }
    record.claim = result.claim;
    c->claim = result.claim;
    if (!tls && result.claim.hostname == ip_.to_string()) {
        finish(false);
        refuse(c, true);
        return;
    }
    auto decision = proxy::authorize(*policy_, result.claim, c->peer, *registry_);
    if (!decision.allowed) {
        finish(false);
        refuse(c, !tls);
        return;
    }
    auto origin = honest_resolve(result.claim.hostname);
    if (!origin || *origin == ip_) {
        finish(false);
        refuse(c, !tls);
        return;
    }
    finish(true);
    open_origin(c, *origin);
}

void ProxyService::refuse(const std::shared_ptr<Conn>& c, bool with_banner) {
    c->phase = Conn::Phase::Done;
    if (with_banner) sim_.write(c->client, Side::Server, proxy::banner(*policy_));
    sim_.close(c->client, Side::Server);
}

std::optional<Ipv4> ProxyService::honest_resolve(const std::string& hostname) {
    if (auto literal = Ipv4::parse(hostname)) return literal;
    auto query = DnsMessage::query(0, hostname, true);
    auto response = honest_.resolve(query, ip_, sim_.now());
    if (!response || response->flags.rcode != Rcode::NoError) return std::nullopt;
    for (const auto& rr : response->answers)
        if (rr.is_a()) return rr.address();
    return std::nullopt;
}

void ProxyService::open_origin(const std::shared_ptr<Conn>& c, Ipv4 origin) {
    c->phase = Conn::Phase::Connecting;
    c->origin_ip = origin;
    StreamHandler h;
    h.on_connected = [this, c] {
        c->splice = std::make_unique<proxy::SpliceSession>(
            [this, c](std::span<const std::uint8_t> b) { sim_.write(c->origin, Side::Client, b); },
            [this, c](std::span<const std::uint8_t> b) { sim_.write(c->client, Side::Server, b); },
            [this, c] { sim_.close(c->origin, Side::Client); },
            [this, c] { sim_.close(c->client, Side::Server); });
        c->phase = Conn::Phase::Splicing;
        auto first = std::move(c->buf);
        c->splice->from_client(first);
        if (c->client_closed) {
            c->splice->client_closed();
            c->recorded = true;
            completed_.push_back({c->peer, c->claim, c->origin_ip, c->splice->stats()});
            sim_.close(c->client, Side::Server);
        }
    };
    h.on_data = [c](std::span<const std::uint8_t> b) {
        if (c->splice) c->splice->from_origin(b);
    };
    h.on_closed = [this, c] {
        if (c->splice) {
            c->splice->origin_closed();
            if (!c->recorded) {
                c->recorded = true;
                completed_.push_back({c->peer, c->claim, c->origin_ip, c->splice->stats()});
            }
        }
        sim_.close(c->origin, Side::Client);
    };
    h.on_refused = [this, c] {
        c->phase = Conn::Phase::Done;
        sim_.close(c->client, Side::Server);
    };
    c->origin = sim_.connect(node_, origin, c->port, std::move(h));
}

// ---------------------------------------------------------------- clients

FetchRequest FetchRequest::parse_url(std::string_view url) {
    FetchRequest req;
    if (url.rfind("https://", 0) == 0) {
        url.remove_prefix(8);
    } else if (url.rfind("http://", 0) == 0) {
        req.https = false;
        url.remove_prefix(7);
    } else {
        throw Error("unsupported URL '" + std::string(url) + "'");
    }
    auto slash = url.find('/');
    req.host = to_lower(url.substr(0, slash));
    req.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
    if (req.host.empty()) throw Error("URL without host");
    return req;
}

std::optional<HttpResponse> parse_http_response(std::string_view raw) {
    if (raw.rfind("HTTP/1.", 0) != 0) return std::nullopt;
    auto sp = raw.find(' ');
    if (sp == std::string_view::npos || sp + 4 > raw.size()) return std::nullopt;
    HttpResponse out;
    auto code = raw.substr(sp + 1, 3);
    if (std::from_chars(code.data(), code.data() + 3, out.status).ec != std::errc{}) return std::nullopt;
    auto end = raw.find("\r\n\r\n");
    if (end != std::string_view::npos) out.body = std::string(raw.substr(end + 4));
    return out;
}

std::string http_response(int status, std::string_view body) {
    std::string out = "HTTP/1.1 " + std::to_string(status) + " " + reason_phrase(status) +
                      "\r\nContent-Type: text/html\r\nContent-Length: " + std::to_string(body.size()) +
                      "\r\nConnection: close\r\n\r\n";
    out.append(body);
    return out;
}

std::string http_get(std::string_view host, std::string_view path) {
    std::string out = "GET ";
    out.append(path);
    out += " HTTP/1.1\r\nHost: ";
    out.append(host);
    out += "\r\nUser-Agent: netlab\r\nAccept: */*\r\nConnection: close\r\n\r\n";
    return out;
}

ClientAgent::ClientAgent(Simulator& sim, NodeId node, std::optional<Ipv4> resolver)
    : sim_(sim),
      node_(node),
      ip_(sim.topology().node(node).ip),
      resolver_(resolver),
      next_id_(static_cast<std::uint16_t>(sim.rng("stub:" + sim.topology().node(node).name)())) {
    sim_.bind_udp(node_, kStubPort, [this](const Datagram& d) { on_dns(d); });
}

void ClientAgent::resolve(std::string_view hostname, bool recursion_desired, DnsCallback done,
                          std::optional<Ipv4> server, VirtualTime timeout) {
    auto target = server ? server : resolver_;
    if (!target) {
        done(std::nullopt);
        return;
    }
    std::uint16_t id = next_id_++;
    while (pending_.contains(id)) id = next_id_++;
    auto query = DnsMessage::query(id, hostname, recursion_desired);
    pending_[id] = Pending{std::move(done)};
    auto status = sim_.send_udp(node_, ip_, *target, kStubPort, kDnsPort, dns::encode(query));
    (void)status;
    sim_.after(timeout, [this, id, qname = query.question.qname] {
        auto it = pending_.find(id);
        if (it == pending_.end()) return;
        auto cb = std::move(it->second.done);
        pending_.erase(it);
        cb(std::nullopt);
    });
}

void ClientAgent::on_dns(const Datagram& d) {
    DnsMessage msg;
    try {
        msg = dns::decode(d.payload);
    } catch (const Error&) {
        return;
    }
    auto it = pending_.find(msg.id);
    if (it == pending_.end() || !msg.flags.is_response) return;
    auto cb = std::move(it->second.done);
    pending_.erase(it);
    cb(std::move(msg));
}

void ClientAgent::fetch(FetchRequest req, FetchCallback done) {
    if (req.connect_to) {
        auto target = *req.connect_to;
        connect_and_send(std::move(req), target, std::move(done));
        return;
    }
    if (auto literal = Ipv4::parse(req.host)) {
        connect_and_send(std::move(req), *literal, std::move(done));
        return;
    }
    auto host = req.host;
    resolve(host, true, [this, req = std::move(req), done = std::move(done)](std::optional<DnsMessage> r) mutable {
        if (!r || r->flags.rcode != Rcode::NoError) {
            done(FetchResult{false, 0, {}, std::nullopt, "resolution failed"});
            return;
        }
        for (const auto& rr : r->answers) {
            if (rr.is_a()) {
                connect_and_send(std::move(req), rr.address(), std::move(done));
                return;
            }
        }
        done(FetchResult{false, 0, {}, std::nullopt, "no address"});
    });
}

void ClientAgent::connect_and_send(FetchRequest req, Ipv4 target, FetchCallback done) {
    struct State {
        ConnId conn = 0;
        std::vector<std::uint8_t> buf;
        FetchCallback done;
        bool finished = false;
        bool https = false;
        Ipv4 target;
    };
    auto st = std::make_shared<State>();
    st->done = std::move(done);
    st->https = req.https;
    st->target = target;

    std::vector<std::uint8_t> request;
    auto get = http_get(req.host, req.path);
    if (req.https) {
        std::optional<std::string> sni;
        if (!Ipv4::parse(req.host)) sni = req.host;
        request = proxy::build_client_hello(sni, splitmix64(ip_.value() ^ (sim_.events_processed() << 20)));
        auto app = proxy::tls_record(proxy::kTlsApplicationData, as_bytes(get));
        request.insert(request.end(), app.begin(), app.end());
    } else {
        request.assign(get.begin(), get.end());
    }
    if (sim_.log().keeps_events())
        sim_.log().record(sim_.now(), node_, EventKind::HttpRequest, 0, target.value(),
                          std::string(req.https ? "https://" : "http://") + req.host + req.path + " via " +
                              target.to_string());

    auto finish = [this, st](FetchResult r) {
        if (st->finished) return;
        st->finished = true;
        ++fetches_completed_;
        st->done(std::move(r));
    };
    StreamHandler h;
    h.on_connected = [this, st, request = std::move(request)] { sim_.write(st->conn, Side::Client, request); };
    h.on_data = [st](std::span<const std::uint8_t> b) { st->buf.insert(st->buf.end(), b.begin(), b.end()); };
    h.on_closed = [this, st, finish] {
        sim_.close(st->conn, Side::Client);
        std::string raw;
        if (st->https) {
            std::vector<proxy::TlsRecord> records;
            proxy::split_tls_records(st->buf, records);
            for (const auto& rec : records)
                if (rec.content_type == proxy::kTlsApplicationData) raw.append(as_text(rec.payload));
        } else {
            raw.assign(as_text(st->buf));
        }
        FetchResult r;
        r.server_ip = st->target;
        if (auto parsed = parse_http_response(raw)) {
            r.completed = true;
            r.status = parsed->status;
            r.body = std::move(parsed->body);
        } else {
            r.error = st->buf.empty() ? "connection closed without response" : "unparseable response";
        }
        finish(std::move(r));
    };
    h.on_refused = [st, finish] { finish(FetchResult{false, 0, {}, st->target, "connection refused"}); };
    st->conn = sim_.connect(node_, target, req.https ? kHttpsPort : kHttpPort, std::move(h));
}

void ClientAgent::browse(std::string_view url, std::function<void(std::vector<FetchResult>)> done) {
    auto results = std::make_shared<std::vector<FetchResult>>();
    fetch(FetchRequest::parse_url(url), [this, results, done = std::move(done)](FetchResult page) {
        std::vector<std::string> images;
        std::string_view body = page.body;
        for (std::size_t pos = 0; (pos = body.find("<img src=\"", pos)) != std::string_view::npos;) {
            pos += 10;
            auto end = body.find('"', pos);
            if (end == std::string_view::npos) break;
            images.emplace_back(body.substr(pos, end - pos));
            pos = end;
        }
        results->push_back(std::move(page));
        if (images.empty()) {
            done(std::move(*results));
            return;
        }
        auto remaining = std::make_shared<std::size_t>(images.size());
        for (const auto& img : images) {
            fetch(FetchRequest::parse_url(img), [results, remaining, done](FetchResult r) {
                results->push_back(std::move(r));
                if (--*remaining == 0) done(std::move(*results));
            });
        }
    });
}

// ---------------------------------------------------------------- world

World::World(Topology topology, std::uint64_t seed, LogMode mode)
    : sim_(std::move(topology), seed, mode), upstream_(*this) {}

AuthoritativeServer& World::add_authoritative(std::string_view node, std::vector<AuthZone> zones) {
    NodeId id = topology().id_of(node);
    auto server = std::make_unique<AuthoritativeServer>(id, std::move(zones));
    for (const auto& z : server->zones()) zone_index_[z.zone] = id;
    auto& ref = *server;
    auths_[id] = std::move(server);
    sim_.bind_udp(id, kDnsPort, [this, &ref, id](const Datagram& d) {
        DnsMessage query;
        try {
            query = dns::decode(d.payload);
        } catch (const Error&) {
            return;
        }
        sim_.log().record(sim_.now(), id, EventKind::AuthQuery, query.id, fnv1a64(query.question.qname),
                          sim_.log().keeps_events() ? query.question.qname + " from " + d.src.to_string() : "");
        auto answer = ref.answer(query.question, d.src, sim_.now());
        auto r = DnsMessage::reply_to(query, answer.rcode);
        r.flags.authoritative = true;
        r.answers = std::move(answer.records);
        sim_.send_udp(id, topology().node(id).ip, d.src, kDnsPort, d.src_port, dns::encode(r));
    });
    return ref;
}

OriginServer& World::add_origin(std::string_view node, OriginConfig config) {
    NodeId id = topology().id_of(node);
    auto& slot = origins_[id];
    slot = std::make_unique<OriginServer>(sim_, id, std::move(config));
    return *slot;
}

Provider& World::add_provider(ProviderConfig config) {
    if (providers_.contains(config.name)) throw Error("duplicate provider '" + config.name + "'");
    Provider p;
    p.name = config.name;
    p.registry = std::make_shared<resolver::CustomerRegistry>(config.registered);
    p.proxy_policy = std::make_shared<const proxy::ProxyPolicy>(config.proxy_policy);
    for (const auto& name : config.resolver_nodes) {
        NodeId id = topology().id_of(name);
        auto r = std::make_unique<resolver::SmartResolver>(config.resolver, p.registry, upstream_,
                                                           topology().node(id).ip);
        resolvers_[id] = std::make_unique<ResolverService>(sim_, id, std::move(r));
        p.resolver_nodes.push_back(id);
    }
    for (const auto& name : config.proxy_nodes) {
        NodeId id = topology().id_of(name);
        proxies_[id] = std::make_unique<ProxyService>(sim_, id, p.proxy_policy, p.registry, upstream_);
        p.proxy_nodes.push_back(id);
    }
    return providers_.emplace(p.name, std::move(p)).first->second;
}

ResolverService& World::add_honest_resolver(std::string_view node) {
    NodeId id = topology().id_of(node);
    auto r = std::make_unique<resolver::SmartResolver>(resolver::ResolverConfig{},
                                                       std::make_shared<resolver::CustomerRegistry>(), upstream_,
                                                       topology().node(id).ip);
    auto& slot = resolvers_[id];
    slot = std::make_unique<ResolverService>(sim_, id, std::move(r));
    return *slot;
}

ClientAgent& World::add_client(std::string_view node, std::optional<std::string_view> resolver_node) {
    NodeId id = topology().id_of(node);
    std::optional<Ipv4> resolver_ip;
    if (resolver_node) resolver_ip = topology().node(topology().id_of(*resolver_node)).ip;
    auto& slot = clients_[id];
    if (!slot) {
        slot = std::make_unique<ClientAgent>(sim_, id, resolver_ip);
    } else if (resolver_ip) {
        slot->set_resolver(*resolver_ip);
    }
    return *slot;
}

AuthoritativeServer* World::authoritative_for(std::string_view qname) {
    std::string_view rest = qname;
    for (;;) {
        if (auto it = zone_index_.find(std::string(rest)); it != zone_index_.end()) return auths_.at(it->second).get();
        if (rest.empty()) return nullptr;
        auto dot = rest.find('.');
        rest = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
    }
}

AuthoritativeServer& World::authoritative(std::string_view node) {
    return lookup_service(auths_, topology(), node, "authoritative server");
}
OriginServer& World::origin(std::string_view node) { return lookup_service(origins_, topology(), node, "origin"); }
ResolverService& World::resolver(std::string_view node) {
    return lookup_service(resolvers_, topology(), node, "resolver");
}
ProxyService& World::proxy(std::string_view node) { return lookup_service(proxies_, topology(), node, "proxy"); }

ClientAgent& World::client(std::string_view node) {
    NodeId id = topology().id_of(node);
    auto it = clients_.find(id);
    if (it == clients_.end()) return add_client(node);
    return *it->second;
}

Provider& World::provider(std::string_view name) {
    auto it = providers_.find(std::string(name));
    if (it == providers_.end()) throw Error("unknown provider '" + std::string(name) + "'");
    return it->second;
}

void World::reconfigure_provider(std::string_view name, resolver::ResolverPolicy policy) {
    auto& p = provider(name);
    for (NodeId id : p.resolver_nodes) {
        auto& r = resolvers_.at(id)->resolver();
        auto cfg = *r.config();
        cfg.policy = policy;
        r.reconfigure(std::move(cfg));
    }
}

std::uint64_t World::cache_digest(VirtualTime now) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (auto& [id, svc] : resolvers_) h = splitmix64(h ^ id ^ svc->resolver().cache_digest(now));
    return h;
}

}  // namespace sdns::netlab
