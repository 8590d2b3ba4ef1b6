#include "sdns/resolver/channel_table.hpp"

#include "sdns/dnswire/message.hpp"

namespace sdns::resolver {

bool suffix_matches(std::string_view qname, std::string_view suffix) {
    if (suffix.empty()) return true;
    if (qname.size() < suffix.size()) return false;
    if (!qname.ends_with(suffix)) return false;
    return qname.size() == suffix.size() || qname[qname.size() - suffix.size() - 1] == '.';
}

ChannelTable::ChannelTable(std::vector<ChannelEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void ChannelTable::add(ChannelEntry entry) {
    if (entry.proxy_pool.empty()) throw Error("channel '" + entry.suffix + "' has an empty proxy pool");
    entry.suffix = dns::normalize_name(entry.suffix);
    auto key = entry.suffix;
    if (!entries_.emplace(key, std::move(entry)).second) throw Error("duplicate channel '" + key + "'");
}

const ChannelEntry* ChannelTable::find(std::string_view qname) const {
    // Walk from the full name towards the root so the longest suffix wins.
    std::string_view rest = qname;
    for (;;) {
        if (auto it = entries_.find(std::string(rest)); it != entries_.end()) return &it->second;
        if (rest.empty()) return nullptr;
        auto dot = rest.find('.');
        rest = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
    }
}

std::optional<std::string> ChannelTable::match(std::string_view qname) const {
    if (const auto* e = find(qname)) return e->suffix;
    return std::nullopt;
}

std::vector<std::string> ChannelTable::advertised_suffixes() const {
    std::vector<std::string> out;
    for (const auto& [suffix, e] : entries_)
        if (e.advertised) out.push_back(suffix);
    return out;
}

void CustomerRegistry::add(Ipv4 ip) {
    std::lock_guard lock(mu_);
    ips_.insert(ip);
}

void CustomerRegistry::remove(Ipv4 ip) {
    std::lock_guard lock(mu_);
    ips_.erase(ip);
}

bool CustomerRegistry::contains(Ipv4 ip) const {
    std::lock_guard lock(mu_);
    return ips_.contains(ip);
}

std::set<Ipv4> CustomerRegistry::snapshot() const {
    std::lock_guard lock(mu_);
    return ips_;
}

std::size_t CustomerRegistry::size() const {
    std::lock_guard lock(mu_);
    return ips_.size();
}

}  // namespace sdns::resolver
