#pragma once

// The audit commands behind the command-line tool. Each takes a scenario
// document (usually a preset) and a seed and returns structured findings
// plus any tabular side outputs. Nothing here reads the wall clock.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdns/audit/enumerate.hpp"

namespace sdns::app {

/// Reading or writing a file failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A preset name, or a path to a JSON scenario document. A missing file is
/// an IoError; a malformed one a ConfigError.
nlohmann::json load_config(const std::string& preset_or_path, std::uint64_t seed);
std::string read_file(const std::string& path);

struct CommandOutput {
    nlohmann::json findings = nlohmann::json::object();
    /// Side outputs by suffix, e.g. "heatmap.csv".
    std::map<std::string, std::string> files;
};

CommandOutput simulate(const nlohmann::json& doc, std::uint64_t seed);

struct SnoopOptions {
    std::optional<std::vector<std::string>> hostnames;  // default: the document's list
    std::optional<double> hours;                        // default: the document's duration
};
/// Probes every hostname once per TTL_max while the scenario's traffic runs.
CommandOutput snoop(const nlohmann::json& doc, std::uint64_t seed, const SnoopOptions& opts);
/// Snoops, then estimates each hostname's request rate and user count.
CommandOutput popularity(const nlohmann::json& doc, std::uint64_t seed, const SnoopOptions& opts,
                         double lambda_client);

nlohmann::json estimate_users(double lambda, double lambda_client);
nlohmann::json estimate_profit(double users, double price, double link_cost, double link_capacity_mbps);

struct EnumerateOptions {
    audit::EnumerationVariant variant = audit::EnumerationVariant::ThirdParty;
    std::optional<std::size_t> limit;
};
CommandOutput enumerate(const nlohmann::json& doc, std::uint64_t seed, const EnumerateOptions& opts);

CommandOutput deproxy_demo(const nlohmann::json& doc, std::uint64_t seed);

/// Ground truth rows as CSV text; default: the document's own.
CommandOutput discover_proxies(const nlohmann::json& doc, std::uint64_t seed,
                               const std::optional<std::string>& ground_truth_csv);
CommandOutput classify_proxies(const nlohmann::json& doc, std::uint64_t seed);
/// Scans every node address for the banner text (default: the document's).
CommandOutput fingerprint(const nlohmann::json& doc, std::uint64_t seed, const std::optional<std::string>& signature);
CommandOutput path_exposure(const nlohmann::json& doc, std::uint64_t seed);

}  // namespace sdns::app
