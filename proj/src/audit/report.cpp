#include "sdns/audit/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace sdns::audit {

using nlohmann::json;

namespace {

json opt_ip(const std::optional<Ipv4>& ip) { return ip ? json(ip->to_string()) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const ProbeRecord& p) {
    json j{{"hostname", p.hostname},
           {"probe_time_ms", p.probe_time.count()},
           {"outcome", to_string(p.outcome)},
           {"ttl_max", p.ttl_max}};
    if (p.hit()) j["remaining_ttl"] = p.remaining_ttl;
    if (p.ttl_out_of_range) j["ttl_out_of_range"] = true;
    return j;
}

json to_json(const RateEstimate& e) {
    json times = json::array();
    for (auto t : e.refresh_times) times.push_back(t.count());
    return {{"lambda_per_hour", e.lambda_per_hour},
            {"ci95_low", e.ci_low_per_hour},
            {"ci95_high", finite_or_null(e.ci_high_per_hour)},
            {"ci95_half_width", finite_or_null(e.ci95_half_width)},
            {"refreshes_observed", e.refreshes_observed},
            {"refresh_times_ms", times}};
}

json to_json(const EnumerationVerdict& v) {
    return {{"candidate", v.candidate.to_string()},
            {"verdict", to_string(v.verdict)},
            {"nonce", v.nonce_name},
            {"nonce_observed", v.nonce_observed}};
}

json to_json(const DeproxyFinding& f) {
    return {{"session_id", f.session_id},
            {"hostname_request_ip", opt_ip(f.hostname_request_ip)},
            {"literal_request_ip", opt_ip(f.literal_request_ip)},
            {"sdns", f.sdns ? json(*f.sdns) : json("indeterminate")}};
}

json to_json(const ProxyClassification& c) {
    return {{"proxy", c.proxy.to_string()},   {"open_http", c.open_http}, {"universal_http", c.universal_http},
            {"open_sni", c.open_sni},         {"universal_sni", c.universal_sni},
            {"probes_issued", c.probes_issued}};
}

json to_json(const Candidate& c) { return {{"hostname", c.hostname}, {"ip", c.ip.to_string()}}; }

json AuditReport::to_json() const {
    return {{"command", command},
            {"inputs_digest", inputs_digest},
            {"seed", seed},
            {"findings", findings},
            {"generated_at", generated_at}};
}

std::string inputs_digest(const json& inputs) { return to_hex(fnv1a64(inputs.dump())); }

std::string utc_timestamp() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

std::vector<std::vector<bool>> presence_matrix(const std::map<std::string, std::vector<ProbeRecord>>& records,
                                               VirtualTime start, std::size_t hours) {
    std::vector<std::vector<bool>> out;
    for (const auto& [host, probes] : records) {
        std::vector<bool> row(hours, false);
        for (const auto& p : probes) {
            if (!p.hit() || p.probe_time < start) continue;
            auto h = static_cast<std::size_t>((p.probe_time - start) / std::chrono::hours(1));
            if (h < hours) row[h] = true;
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_heatmap_csv(std::ostream& os, const std::map<std::string, std::vector<ProbeRecord>>& records,
                       VirtualTime start, std::size_t hours) {
    os << "hostname";
    for (std::size_t h = 0; h < hours; ++h) os << ",h" << h;
    os << '\n';
    auto matrix = presence_matrix(records, start, hours);
    std::size_t i = 0;
    for (const auto& [host, probes] : records) {
        os << host;
        for (bool b : matrix[i]) os << ',' << (b ? 1 : 0);
        os << '\n';
        ++i;
    }
}

void write_classification_csv(std::ostream& os, const std::vector<ClassificationRow>& rows) {
    os << "provider,proxy,open_http,universal_http,open_sni,universal_sni\n";
    for (const auto& r : rows) {
        const auto& c = r.result;
        os << r.provider << ',' << c.proxy.to_string() << ',' << c.open_http << ',' << c.universal_http << ','
           << c.open_sni << ',' << c.universal_sni << '\n';
    }
}

void write_popularity_csv(std::ostream& os, const std::vector<PopularityRow>& rows) {
    os << "hostname,lambda_per_hour,ci95_low,ci95_high,refreshes,users,erratic\n";
    os << std::fixed << std::setprecision(2);
    for (const auto& r : rows) {
        os << r.hostname << ',';
        if (r.estimate) {
            os << r.estimate->lambda_per_hour << ',' << r.estimate->ci_low_per_hour << ',';
            if (std::isfinite(r.estimate->ci_high_per_hour)) {
                os << r.estimate->ci_high_per_hour;
            } else {
                os << "inf";
            }
            os << ',' << r.estimate->refreshes_observed;
        } else {
            os << ",,,0";
        }
        os << ',' << r.users << ',' << (r.erratic ? 1 : 0) << '\n';
    }
}

}  // namespace sdns::audit
