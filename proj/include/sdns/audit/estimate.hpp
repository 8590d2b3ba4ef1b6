#pragma once

// Request-rate, user-count and profit estimation from snooped cache state.

#include <cstdint>
#include <span>
#include <vector>

#include "sdns/audit/snoop.hpp"

namespace sdns::audit {

class InsufficientData : public Error {
public:
    using Error::Error;
};

/// When the probed entry was last inserted: T_p - (ttl_max - T_l).
/// Throws InsufficientData for anything but a Hit.
VirtualTime refresh_time(const ProbeRecord& p);

/// Distinct refresh times in probe order. Consecutive Hits whose refresh
/// times fall within half a probe interval of each other count once.
std::vector<VirtualTime> distinct_refreshes(std::span<const ProbeRecord> probes, VirtualTime probe_interval);

struct RateEstimate {
    double lambda_per_hour = 0;
    /// 95% interval; ci_high is infinite when the idle-gap interval reaches zero.
    double ci_low_per_hour = 0;
    double ci_high_per_hour = 0;
    double ci95_half_width = 0;
    std::size_t refreshes_observed = 0;  // inter-refresh gaps used
    std::vector<VirtualTime> refresh_times;

    bool covers(double lambda) const { return lambda >= ci_low_per_hour && lambda <= ci_high_per_hour; }
};

/// Rate from the idle gaps between refreshes: each gap minus ttl_max is an
/// exponential wait for the next request. Needs at least two gaps.
RateEstimate estimate_rate(std::span<const ProbeRecord> probes, std::uint32_t ttl_max);

/// TTL readings that cannot come from an honest cache: above ttl_max, or
/// rising while the previously seen entry had not yet expired.
bool erratic_ttls(std::span<const ProbeRecord> probes);

inline constexpr double kGoogleRequestsPerClientHour = 2.63;

/// round(lambda_site / lambda_client), halves away from zero.
std::int64_t estimate_users(double lambda_site, double lambda_client = kGoogleRequestsPerClientHour);

struct ProfitModel {
    double price_per_user = 0;           // per month
    double per_user_mbps = 3e9 * 8 / 3600 / 1e6;  // 3 GB per hour
    double link_capacity_mbps = 1000;
    double link_cost = 10;               // per link per month

    std::int64_t users_per_link() const;
};

/// Monthly profit: users * (price - link_cost / users_per_link).
double estimate_profit(double users, double price, const ProfitModel& model = {});
inline double estimate_profit(double users, const ProfitModel& model) {
    return estimate_profit(users, model.price_per_user, model);
}

}  // namespace sdns::audit
