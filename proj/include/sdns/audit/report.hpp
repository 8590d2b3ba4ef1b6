#pragma once

// JSON and CSV renderings of audit results.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdns/audit/deproxy.hpp"
#include "sdns/audit/discovery.hpp"
#include "sdns/audit/enumerate.hpp"
#include "sdns/audit/estimate.hpp"
#include "sdns/audit/snoop.hpp"

namespace sdns::audit {

nlohmann::json to_json(const ProbeRecord& p);
nlohmann::json to_json(const RateEstimate& e);
nlohmann::json to_json(const EnumerationVerdict& v);
nlohmann::json to_json(const DeproxyFinding& f);
nlohmann::json to_json(const ProxyClassification& c);
nlohmann::json to_json(const Candidate& c);

struct AuditReport {
    std::string command;
    std::string inputs_digest;  // hex digest of the canonical inputs
    std::uint64_t seed = 0;
    nlohmann::json findings = nlohmann::json::object();
    std::string generated_at;  // ISO-8601 UTC

    nlohmann::json to_json() const;
};

/// Digest of a JSON value in its canonical (sorted-key, compact) form.
std::string inputs_digest(const nlohmann::json& inputs);
std::string utc_timestamp();

/// hostname x hour: true when any probe in that hour was a Hit.
std::vector<std::vector<bool>> presence_matrix(const std::map<std::string, std::vector<ProbeRecord>>& records,
                                               VirtualTime start, std::size_t hours);
void write_heatmap_csv(std::ostream& os, const std::map<std::string, std::vector<ProbeRecord>>& records,
                       VirtualTime start, std::size_t hours);

struct ClassificationRow {
    std::string provider;
    ProxyClassification result;
};
void write_classification_csv(std::ostream& os, const std::vector<ClassificationRow>& rows);

struct PopularityRow {
    std::string hostname;
    std::optional<RateEstimate> estimate;  // nullopt: not enough refreshes
    std::int64_t users = 0;
    bool erratic = false;
};
void write_popularity_csv(std::ostream& os, const std::vector<PopularityRow>& rows);

}  // namespace sdns::audit
