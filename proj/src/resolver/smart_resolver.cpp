#include "sdns/resolver/smart_resolver.hpp"

namespace sdns::resolver {

using dns::DnsMessage;
using dns::Rcode;
using dns::ResourceRecord;

namespace {

constexpr std::uint32_t kRootNsTtl = 518400;

bool is_a_query(const DnsMessage& req) {
    return req.question.qtype == static_cast<std::uint16_t>(dns::RecordType::A);
}

}  // namespace

Ipv4 ProxySelector::select(const std::vector<Ipv4>& pool, std::string_view qname) {
    if (pool.empty()) throw Error("select_proxy on an empty pool");
    std::uint64_t pool_key = 0xcbf29ce484222325ull;
    for (auto ip : pool) pool_key = splitmix64(pool_key ^ ip.value());
    std::lock_guard lock(mu_);
    auto& counter = counters_[{pool_key, std::string(qname)}];
    return pool[counter++ % pool.size()];
}

SmartResolver::SmartResolver(ResolverConfig config, std::shared_ptr<CustomerRegistry> registry, Upstream& upstream,
                             Ipv4 own_ip)
    : config_(std::make_shared<const ResolverConfig>(std::move(config))),
      registry_(registry ? std::move(registry) : std::make_shared<CustomerRegistry>()),
      upstream_(upstream),
      own_ip_(own_ip) {}

void SmartResolver::reconfigure(ResolverConfig config) {
    auto next = std::make_shared<const ResolverConfig>(std::move(config));
    std::lock_guard lock(config_mu_);
    config_ = std::move(next);
}

std::shared_ptr<const ResolverConfig> SmartResolver::config() const {
    std::lock_guard lock(config_mu_);
    return config_;
}

std::vector<ResourceRecord> SmartResolver::root_referral() {
    std::vector<ResourceRecord> out;
    for (char letter = 'a'; letter <= 'm'; ++letter)
        out.push_back(ResourceRecord::ns("", std::string(1, letter) + ".root-servers.net", kRootNsTtl));
    return out;
}

std::optional<DnsMessage> SmartResolver::resolve(const DnsMessage& req, Ipv4 src, VirtualTime now) {
    ++queries_;
    if (req.flags.is_response) {
        auto r = DnsMessage::reply_to(req, Rcode::Refused);
        r.flags.recursion_desired = req.flags.recursion_desired;
        return r;
    }
    auto cfg = config();
    const ChannelEntry* channel = cfg->channels.find(req.question.qname);

    if (!registry_->contains(src)) {
        // Any mitigation means non-customers are resolved honestly. Channel
        // names included: handing them a proxy would give the service away.
        if (cfg->policy.mitigation == Mitigation::None) {
            const auto& mode = cfg->policy.non_customer_mode;
            if (std::holds_alternative<Drop>(mode)) {
                ++dropped_;
                return std::nullopt;
            }
            if (const auto* fixed = std::get_if<StaticIp>(&mode)) return static_answer(*cfg, req, fixed->address);
        }
        return recursive_answer(req, now);
    }

    if (channel) return channel_answer(*cfg, *channel, req, now);
    return recursive_answer(req, now);
}

DnsMessage SmartResolver::referral(const DnsMessage& req) {
    ++referrals_;
    auto r = DnsMessage::reply_to(req);
    r.flags.recursion_available = true;
    r.authority = root_referral();
    return r;
}

DnsMessage SmartResolver::recursive_answer(const DnsMessage& req, VirtualTime now) {
    dns::CacheKey key{req.question.qname, req.question.qtype};
    if (auto hit = recursive_cache_.get(key, now)) {
        auto r = DnsMessage::reply_to(req);
        r.flags.recursion_available = true;
        r.answers = std::move(hit->records);
        return r;
    }
    // RD=0 never triggers recursion; this is what keeps snooping side-effect free.
    if (!req.flags.recursion_desired) return referral(req);

    ++upstream_lookups_;
    auto answer = upstream_.lookup(req.question, own_ip_, now);
    if (!answer) {
        auto r = DnsMessage::reply_to(req, Rcode::ServFail);
        r.flags.recursion_available = true;
        return r;
    }
    auto r = DnsMessage::reply_to(req, answer->rcode);
    r.flags.recursion_available = true;
    if (answer->rcode == Rcode::NoError && !answer->records.empty() && answer->ttl > 0) {
        recursive_cache_.put(key, answer->records, answer->ttl, now);
        for (auto& rr : answer->records) rr.ttl = answer->ttl;
    }
    r.answers = std::move(answer->records);
    return r;
}

DnsMessage SmartResolver::channel_answer(const ResolverConfig& cfg, const ChannelEntry& channel, const DnsMessage& req,
                                         VirtualTime now) {
    auto r = DnsMessage::reply_to(req);
    r.flags.recursion_available = true;
    if (!is_a_query(req)) return r;

    dns::CacheKey key{req.question.qname, req.question.qtype};
    if (auto hit = channel_cache_.get(key, now)) {
        r.answers = std::move(hit->records);
        return r;
    }
    if (!req.flags.recursion_desired) return referral(req);

    if (cfg.policy.mitigation == Mitigation::ResolveAllCorrectlyProxyChannels) {
        // Resolve for real and throw the answer away; not cached.
        ++upstream_lookups_;
        (void)upstream_.lookup(req.question, own_ip_, now);
    }
    std::uint32_t ttl = channel.answer_ttl.value_or(cfg.policy.answer_ttl_default);
    Ipv4 proxy = selector_.select(channel.proxy_pool, req.question.qname);
    ++proxy_answers_;
    auto record = ResourceRecord::a(req.question.qname, proxy, ttl);
    if (ttl > 0) channel_cache_.put(key, {record}, ttl, now);
    r.answers.push_back(std::move(record));
    return r;
}

DnsMessage SmartResolver::static_answer(const ResolverConfig& cfg, const DnsMessage& req, Ipv4 address) {
    auto r = DnsMessage::reply_to(req);
    r.flags.recursion_available = true;
    if (is_a_query(req))
        r.answers.push_back(ResourceRecord::a(req.question.qname, address, cfg.policy.answer_ttl_default));
    return r;
}

std::uint64_t SmartResolver::cache_digest(VirtualTime now) const {
    return splitmix64(recursive_cache_.digest(now)) ^ channel_cache_.digest(now);
}

SmartResolver::Stats SmartResolver::stats() const {
    return Stats{queries_.load(), dropped_.load(), upstream_lookups_.load(), proxy_answers_.load(), referrals_.load()};
}

}  // namespace sdns::resolver
