#include "sdns/audit/deproxy.hpp"

#include <map>

namespace sdns::audit {

std::string build_deproxy_page(Ipv4 origin_ip, std::string_view session_id) {
    if (session_id.empty()) throw Error("de-proxy page needs a session id");
    std::string page = "<html><head><title>welcome</title></head><body><p>content</p><img src=\"https://";
    page += origin_ip.to_string();
    page += "/image.jpg?";
    page += session_id;
    page += "\" width=\"1\" height=\"1\"></body></html>";
    return page;
}

std::vector<DeproxyFinding> detect_deproxy(std::span<const netlab::AccessLogEntry> log, const netlab::Topology& topo) {
    std::map<std::string, DeproxyFinding> sessions;
    for (const auto& e : log) {
        if (e.session_id.empty()) continue;
        auto& f = sessions[e.session_id];
        f.session_id = e.session_id;
        if (e.ip_literal) {
            if (!f.literal_request_ip) f.literal_request_ip = e.requester;
        } else if (!f.hostname_request_ip) {
            f.hostname_request_ip = e.requester;
        }
    }
    std::vector<DeproxyFinding> out;
    for (auto& [sid, f] : sessions) {
        if (f.hostname_request_ip && f.literal_request_ip) {
            auto a = topo.as_of(*f.hostname_request_ip);
            auto b = topo.as_of(*f.literal_request_ip);
            if (a && b) f.sdns = *a != *b;
        }
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace sdns::audit
