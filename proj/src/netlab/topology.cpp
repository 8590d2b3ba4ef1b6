#include "sdns/netlab/topology.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

namespace sdns::netlab {

namespace {
constexpr std::pair<Role, const char*> kRoleNames[] = {
    {Role::Client, "client"},       {Role::SdnsResolver, "sdns_resolver"},
    {Role::HonestResolver, "honest_resolver"}, {Role::AuthoritativeNs, "authoritative_ns"},
    {Role::Proxy, "proxy"},         {Role::Origin, "origin"},
    {Role::Observer, "observer"},   {Role::Router, "router"},
};
}  // namespace

const char* to_string(Role r) {
    for (auto [role, name] : kRoleNames)
        if (role == r) return name;
    return "unknown";
}

std::optional<Role> parse_role(std::string_view s) {
    for (auto [role, name] : kRoleNames)
        if (s == name) return role;
    return std::nullopt;
}

NodeId Topology::add_node(NodeSpec spec) {
    if (by_name_.contains(spec.name)) throw Error("duplicate node name '" + spec.name + "'");
    if (by_ip_.contains(spec.ip.value())) throw Error("duplicate node IP " + spec.ip.to_string());
    auto id = static_cast<NodeId>(nodes_.size());
    by_name_.emplace(spec.name, id);
    by_ip_.emplace(spec.ip.value(), id);
    nodes_.push_back(std::move(spec));
    adjacency_.emplace_back();
    trees_.clear();
    return id;
}

void Topology::add_link(NodeId a, NodeId b, VirtualTime latency) {
    if (a >= nodes_.size() || b >= nodes_.size()) throw Error("link references unknown node");
    if (a == b) throw Error("self link on '" + nodes_[a].name + "'");
    if (latency < VirtualTime::zero()) throw Error("negative link latency");
    adjacency_[a].push_back({b, latency});
    adjacency_[b].push_back({a, latency});
    trees_.clear();
}

std::optional<NodeId> Topology::find_ip(Ipv4 ip) const {
    auto it = by_ip_.find(ip.value());
    if (it == by_ip_.end()) return std::nullopt;
    return it->second;
}

std::optional<NodeId> Topology::find_name(std::string_view name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

NodeId Topology::id_of(std::string_view name) const {
    if (auto id = find_name(name)) return *id;
    throw Error("unknown node '" + std::string(name) + "'");
}

const Topology::Tree& Topology::tree_from(NodeId src) const {
    if (auto it = trees_.find(src); it != trees_.end()) return it->second;
    Tree t;
    t.dist.assign(nodes_.size(), -1);
    t.parent.assign(nodes_.size(), src);
    using Item = std::pair<std::int64_t, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    std::vector<bool> done(nodes_.size(), false);
    t.dist[src] = 0;
    pq.emplace(0, src);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = true;
        for (const auto& link : adjacency_[u]) {
            std::int64_t nd = d + link.latency.count();
            auto v = link.to;
            if (done[v]) continue;
            bool better = t.dist[v] < 0 || nd < t.dist[v] || (nd == t.dist[v] && u < t.parent[v]);
            if (better) {
                t.dist[v] = nd;
                t.parent[v] = u;
                pq.emplace(nd, v);
            }
        }
    }
    return trees_.emplace(src, std::move(t)).first->second;
}

std::optional<Route> Topology::route(NodeId src, NodeId dst) const {
    if (src >= nodes_.size() || dst >= nodes_.size()) return std::nullopt;
    const auto& t = tree_from(src);
    if (t.dist[dst] < 0) return std::nullopt;
    Route r;
    r.latency = VirtualTime{t.dist[dst]};
    for (NodeId at = dst;; at = t.parent[at]) {
        r.hops.push_back(at);
        if (at == src) break;
    }
    std::reverse(r.hops.begin(), r.hops.end());
    return r;
}

std::optional<VirtualTime> Topology::latency(NodeId src, NodeId dst) const {
    if (src >= nodes_.size() || dst >= nodes_.size()) return std::nullopt;
    const auto& t = tree_from(src);
    if (t.dist[dst] < 0) return std::nullopt;
    return VirtualTime{t.dist[dst]};
}

std::optional<std::uint32_t> Topology::as_of(Ipv4 ip) const {
    if (auto id = find_ip(ip)) return nodes_[*id].as_number;
    return std::nullopt;
}

std::optional<std::string> Topology::region_of(Ipv4 ip) const {
    if (auto id = find_ip(ip)) return nodes_[*id].region;
    return std::nullopt;
}

}  // namespace sdns::netlab
