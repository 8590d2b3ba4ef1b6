#include "sdns/live/snoop.hpp"

#include "sdns/dnswire/message.hpp"

namespace sdns::live {

double max_probe_rate_per_hour(std::uint32_t ttl_max) { return ttl_max == 0 ? 0.0 : 3600.0 / ttl_max; }

LiveSnooper::LiveSnooper(Endpoint resolver, double rate_per_hour, std::uint32_t min_ttl_max,
                         std::chrono::milliseconds timeout)
    : resolver_(resolver),
      rate_(rate_per_hour),
      timeout_(timeout),
      sock_(udp_socket({Ipv4(0), 0})),
      ids_(std::random_device{}()),
      epoch_(std::chrono::steady_clock::now()) {
    if (!(rate_per_hour > 0.0)) throw ConfigError("probe rate must be positive");
    if (rate_per_hour > max_probe_rate_per_hour(min_ttl_max))
        throw ConfigError("probe rate " + std::to_string(rate_per_hour) + "/h exceeds one probe per TTL (" +
                          std::to_string(max_probe_rate_per_hour(min_ttl_max)) + "/h)");
}

std::optional<audit::ProbeRecord> LiveSnooper::probe(const std::string& hostname, std::uint32_t ttl_max) {
    std::lock_guard lock(mu_);
    auto sent = std::chrono::duration_cast<VirtualTime>(std::chrono::steady_clock::now() - epoch_);
    if (!limiter_.allow(hostname, ttl_max, sent)) return std::nullopt;
    auto id = static_cast<std::uint16_t>(ids_());
    auto query = dns::DnsMessage::query(id, hostname, false);
    send_datagram(sock_.get(), resolver_, dns::encode(query));

    auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::optional<dns::DnsMessage> reply;
    while (!reply) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        auto got = recv_datagram(sock_.get(), left);
        if (!got) break;
        if (got->second.ip != resolver_.ip || got->second.port != resolver_.port) continue;
        try {
            auto msg = dns::decode(got->first);
            if (msg.id == id && msg.flags.is_response) reply = std::move(msg);
        } catch (const dns::Malformed&) {
        }
    }
    auto received = std::chrono::duration_cast<VirtualTime>(std::chrono::steady_clock::now() - epoch_);
    return audit::interpret_snoop(hostname, ttl_max, reply ? sent + (received - sent) / 2 : sent, reply);
}

}  // namespace sdns::live
