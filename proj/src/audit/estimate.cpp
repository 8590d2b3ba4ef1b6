#include "sdns/audit/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdns::audit {

namespace {

std::vector<const ProbeRecord*> by_time(std::span<const ProbeRecord> probes) {
    std::vector<const ProbeRecord*> out;
    out.reserve(probes.size());
    for (const auto& p : probes) out.push_back(&p);
    std::stable_sort(out.begin(), out.end(),
                     [](const ProbeRecord* a, const ProbeRecord* b) { return a->probe_time < b->probe_time; });
    return out;
}

}  // namespace

VirtualTime refresh_time(const ProbeRecord& p) {
    if (!p.hit()) throw InsufficientData("refresh time needs a cache hit");
    return p.probe_time - seconds_to_time(p.ttl_max) + seconds_to_time(p.remaining_ttl);
}

std::vector<VirtualTime> distinct_refreshes(std::span<const ProbeRecord> probes, VirtualTime probe_interval) {
    std::vector<VirtualTime> out;
    for (const auto* p : by_time(probes)) {
        if (!p->hit()) continue;
        auto tr = refresh_time(*p);
        // Genuine refreshes are at least one TTL apart, so anything closer
        // than half a probe interval is the same insertion seen again.
        if (!out.empty() && 2 * (tr > out.back() ? tr - out.back() : out.back() - tr) <= probe_interval) continue;
        out.push_back(tr);
    }
    return out;
}

RateEstimate estimate_rate(std::span<const ProbeRecord> probes, std::uint32_t ttl_max) {
    if (ttl_max == 0) throw Error("ttl_max must be positive");
    RateEstimate est;
    est.refresh_times = distinct_refreshes(probes, seconds_to_time(ttl_max));
    if (est.refresh_times.size() < 3)
        throw InsufficientData("need at least two inter-refresh gaps, have " +
                               std::to_string(est.refresh_times.empty() ? 0 : est.refresh_times.size() - 1));
    std::vector<double> idle;
    for (std::size_t i = 1; i < est.refresh_times.size(); ++i)
        idle.push_back(to_seconds(est.refresh_times[i] - est.refresh_times[i - 1]) - ttl_max);
    const double r = static_cast<double>(idle.size());
    double sum = 0;
    for (double g : idle) sum += g;
    if (!(sum > 0)) throw InsufficientData("no idle time between refreshes");
    const double mean = sum / r;
    double ss = 0;
    for (double g : idle) ss += (g - mean) * (g - mean);
    const double sd = std::sqrt(ss / (r - 1));
    const double margin = 1.96 * sd / std::sqrt(r);

    est.refreshes_observed = idle.size();
    est.lambda_per_hour = 3600.0 / mean;
    est.ci_low_per_hour = 3600.0 / (mean + margin);
    est.ci_high_per_hour = mean - margin > 0 ? 3600.0 / (mean - margin) : std::numeric_limits<double>::infinity();
    est.ci95_half_width = (est.ci_high_per_hour - est.ci_low_per_hour) / 2;
    return est;
}

bool erratic_ttls(std::span<const ProbeRecord> probes) {
    const ProbeRecord* prev = nullptr;
    for (const auto* p : by_time(probes)) {
        if (p->ttl_out_of_range || (p->hit() && p->remaining_ttl > p->ttl_max)) return true;
        if (!p->hit()) {
            if (p->outcome == ProbeOutcome::Miss) prev = nullptr;
            continue;
        }
        // A higher TTL means a new insertion, which can only follow the
        // previous entry's expiry. One second of slack covers TTL truncation.
        VirtualTime prev_expiry = prev ? prev->probe_time + std::chrono::seconds(prev->remaining_ttl) : VirtualTime{};
        if (prev && p->remaining_ttl > prev->remaining_ttl &&
            refresh_time(*p) + std::chrono::seconds(1) < prev_expiry)
            return true;
        prev = p;
    }
    return false;
}

std::int64_t estimate_users(double lambda_site, double lambda_client) {
    if (!(lambda_client > 0)) throw Error("per-client rate must be positive");
    return std::llround(lambda_site / lambda_client);
}

std::int64_t ProfitModel::users_per_link() const {
    if (!(per_user_mbps > 0)) throw Error("per-user bandwidth must be positive");
    // The epsilon absorbs 1000 / (20/3) landing a hair under 150.
    return static_cast<std::int64_t>(std::floor(link_capacity_mbps / per_user_mbps + 1e-9));
}

double estimate_profit(double users, double price, const ProfitModel& model) {
    if (users < 0) throw Error("user count must be non-negative");
    auto per_link = model.users_per_link();
    if (per_link <= 0) throw Error("a link must carry at least one user");
    return users * (price - model.link_cost / static_cast<double>(per_link));
}

}  // namespace sdns::audit
