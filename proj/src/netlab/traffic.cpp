#include "sdns/netlab/traffic.hpp"

#include <memory>

namespace sdns::netlab {

std::vector<VirtualTime> poisson_arrivals(double rate_per_hour, VirtualTime start, VirtualTime duration,
                                          std::mt19937_64& rng) {
    if (!(rate_per_hour > 0)) throw Error("traffic rate must be positive");
    std::exponential_distribution<double> gap_ms(rate_per_hour / 3.6e6);
    std::vector<VirtualTime> out;
    const double end = static_cast<double>(duration.count());
    for (double t = gap_ms(rng); t < end; t += gap_ms(rng))
        out.push_back(start + VirtualTime(static_cast<std::int64_t>(t)));
    return out;
}

std::vector<VirtualTime> poisson_traffic(World& world, const TrafficSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "traffic:" + spec.client + ":" + spec.hostname));
    auto arrivals = poisson_arrivals(spec.rate_per_hour, spec.start, spec.duration, rng);
    if (arrivals.empty()) return arrivals;

    ClientAgent& client = world.client(spec.client);
    Simulator& sim = world.sim();
    auto times = std::make_shared<const std::vector<VirtualTime>>(arrivals);
    FetchRequest req;
    req.https = spec.https;
    req.host = spec.hostname;
    bool fetch = spec.fetch;
    std::string hostname = spec.hostname;

    // Self-rescheduling chain keeps one pending event per stream.
    auto fire = std::make_shared<std::function<void(std::size_t)>>();
    *fire = [&sim, &client, times, req, fetch, hostname, weak = std::weak_ptr(fire)](std::size_t i) {
        if (fetch) {
            client.fetch(req, [](FetchResult) {});
        } else {
            client.resolve(hostname, true, [](std::optional<dns::DnsMessage>) {});
        }
        if (i + 1 < times->size()) {
            auto self = weak.lock();
            sim.at((*times)[i + 1], [self, i] { (*self)(i + 1); });
        }
    };
    sim.at(arrivals.front(), [fire] { (*fire)(0); });
    return arrivals;
}

}  // namespace sdns::netlab
