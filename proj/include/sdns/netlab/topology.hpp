#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdns/core.hpp"

namespace sdns::netlab {

using NodeId = std::uint32_t;

enum class Role { Client, SdnsResolver, HonestResolver, AuthoritativeNs, Proxy, Origin, Observer, Router };

const char* to_string(Role r);
std::optional<Role> parse_role(std::string_view s);

struct NodeSpec {
    std::string name;
    Ipv4 ip;
    std::uint32_t as_number = 0;
    std::string region;
    Role role = Role::Client;
    bool can_spoof = false;
};

struct Route {
    std::vector<NodeId> hops;  // src first, dst last
    VirtualTime latency{0};
};

class NoPath : public Error {
public:
    using Error::Error;
};

/// Nodes with unique IPs, bidirectional links with latency, and
/// deterministic shortest-path routing (ties go to the lower node id).
class Topology {
public:
    /// Throws sdns::Error on a duplicate name or IP.
    NodeId add_node(NodeSpec spec);
    void add_link(NodeId a, NodeId b, VirtualTime latency);

    std::size_t size() const { return nodes_.size(); }
    const NodeSpec& node(NodeId id) const { return nodes_.at(id); }
    NodeSpec& node(NodeId id) { return nodes_.at(id); }
    const std::vector<NodeSpec>& nodes() const { return nodes_; }

    std::optional<NodeId> find_ip(Ipv4 ip) const;
    std::optional<NodeId> find_name(std::string_view name) const;
    /// Throws sdns::Error when the name is unknown.
    NodeId id_of(std::string_view name) const;

    std::optional<Route> route(NodeId src, NodeId dst) const;
    std::optional<VirtualTime> latency(NodeId src, NodeId dst) const;

    std::optional<std::uint32_t> as_of(Ipv4 ip) const;
    std::optional<std::string> region_of(Ipv4 ip) const;

    struct Link {
        NodeId to;
        VirtualTime latency;
    };
    const std::vector<Link>& links_of(NodeId id) const { return adjacency_.at(id); }

private:
    struct Tree {
        std::vector<std::int64_t> dist;  // -1 when unreachable
        std::vector<NodeId> parent;
    };
    const Tree& tree_from(NodeId src) const;

    std::vector<NodeSpec> nodes_;
    std::vector<std::vector<Link>> adjacency_;
    std::unordered_map<std::uint32_t, NodeId> by_ip_;
    std::map<std::string, NodeId, std::less<>> by_name_;
    mutable std::unordered_map<NodeId, Tree> trees_;
};

}  // namespace sdns::netlab
