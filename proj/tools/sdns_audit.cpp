// sdns-audit: simulate smart DNS deployments and run the audits against them.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <iostream>
#include <thread>

#include "sdns/app/commands.hpp"
#include "sdns/audit/report.hpp"
#include "sdns/dnswire/message.hpp"
#include "sdns/live/snoop.hpp"
#include "sdns/netlab/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sdns;

namespace {

enum Exit : int { kOk = 0, kUsage = 64, kConfig = 65, kInternal = 70, kIo = 74 };

class UsageError : public Error {
public:
    using Error::Error;
};

constexpr const char* kEthicsNotice =
    "Live mode sends real DNS queries to a resolver you do not operate.\n"
    "Probes are RD=0 only and paced to at most one per hostname per TTL_max,\n"
    "so they never add entries to the resolver's cache. Probe only resolvers\n"
    "you are permitted to measure, and keep the rate at or below the default.\n";

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_config) {
    c.config = default_config;
    cmd->add_option("--config", c.config, "Preset name or JSON scenario file")->capture_default_str();
    cmd->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
    cmd->add_option("--out", c.out, "Report path (default: $SDNS_AUDIT_OUT_DIR/<command>.json)");
}

fs::path report_path(const std::string& command, const std::string& out) {
    if (!out.empty()) return out;
    const char* dir = std::getenv("SDNS_AUDIT_OUT_DIR");
    return fs::path(dir && *dir ? dir : ".") / (command + ".json");
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary);
    if (!os || !(os << text) || !os.flush()) throw app::IoError("cannot write '" + path.string() + "'");
}

/// Writes the report and its side files next to it; prints where they went.
void emit(const std::string& command, const Common& c, const json& inputs, const app::CommandOutput& result) {
    audit::AuditReport report;
    report.command = command;
    report.inputs_digest = audit::inputs_digest(inputs);
    report.seed = c.seed;
    report.findings = result.findings;
    report.generated_at = audit::utc_timestamp();
    auto path = report_path(command, c.out);
    write_text(path, report.to_json().dump(2) + "\n");
    std::cout << "report " << path.string() << "\n";
    for (const auto& [suffix, text] : result.files) {
        auto side = path.parent_path() / (path.stem().string() + "-" + suffix);
        write_text(side, text);
        std::cout << "wrote " << side.string() << "\n";
    }
}

std::vector<std::string> read_hostnames(const std::string& path) {
    std::istringstream in(app::read_file(path));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        auto last = line.find_last_not_of(" \t\r");
        out.push_back(dns::normalize_name(line.substr(first, last - first + 1)));
    }
    if (out.empty()) throw ConfigError("no hostnames in '" + path + "'");
    return out;
}

live::Endpoint parse_endpoint(const std::string& text) {
    auto colon = text.find(':');
    auto ip = Ipv4::parse(text.substr(0, colon));
    if (!ip) throw UsageError("--resolver: not an IPv4 address: " + text);
    std::uint16_t port = 53;
    if (colon != std::string::npos) {
        int p = 0;
        try {
            p = std::stoi(text.substr(colon + 1));
        } catch (const std::exception&) {
            p = -1;
        }
        if (p <= 0 || p > 65535) throw UsageError("--resolver: bad port in " + text);
        port = static_cast<std::uint16_t>(p);
    }
    return {*ip, port};
}

struct LiveSnoopArgs {
    bool live = false;
    std::string resolver;
    std::string hostnames;
    std::uint32_t ttl_max = 300;
    std::optional<double> rate;
    unsigned rounds = 1;
};

app::CommandOutput live_snoop(const LiveSnoopArgs& a) {
    std::cerr << kEthicsNotice;
    if (a.resolver.empty() || a.hostnames.empty()) throw UsageError("--live needs --resolver and --hostnames");
    if (a.ttl_max == 0) throw UsageError("--ttl-max must be positive");
    double ceiling = live::max_probe_rate_per_hour(a.ttl_max);
    double rate = a.rate.value_or(ceiling);
    if (rate > ceiling)
        throw UsageError("--rate " + std::to_string(rate) + " exceeds one probe per hostname per TTL_max (" +
                         std::to_string(ceiling) + " per hour)");
    auto names = read_hostnames(a.hostnames);
    live::LiveSnooper snooper(parse_endpoint(a.resolver), rate, a.ttl_max);
    json records = json::array();
    for (unsigned round = 0; round < a.rounds; ++round) {
        if (round > 0) std::this_thread::sleep_for(std::chrono::duration<double>(snooper.interval_seconds()));
        for (const auto& h : names)
            if (auto r = snooper.probe(h, a.ttl_max)) records.push_back(audit::to_json(*r));
    }
    app::CommandOutput out;
    out.findings = {{"mode", "live"},
                    {"resolver", a.resolver},
                    {"rate_per_hour", rate},
                    {"ttl_max", a.ttl_max},
                    {"records", records}};
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"Smart DNS simulation and audit toolkit", "sdns-audit"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    std::map<std::string, Common> commons;
    auto add = [&](const char* name, const char* about, const std::string& default_config) {
        auto* cmd = app.add_subcommand(name, about);
        add_common(cmd, commons[name], default_config);
        return cmd;
    };

    auto* simulate = add("simulate", "Run a scenario and write its event log", "walkthrough");

    app::SnoopOptions snoop_opts;
    std::string hostnames_file;
    std::optional<double> hours;
    LiveSnoopArgs live_args;
    auto* snoop = add("snoop", "Cache-snoop a resolver and write a presence heatmap", "snoop-sim");
    snoop->add_option("--hostnames", hostnames_file, "File with one hostname per line");
    snoop->add_option("--hours", hours, "Campaign length in hours");
    snoop->add_flag("--live", live_args.live, "Probe a real resolver instead of the simulation");
    snoop->add_option("--resolver", live_args.resolver, "Live resolver address, IP[:port]");
    snoop->add_option("--ttl-max", live_args.ttl_max, "Live: authoritative TTL of the probed names")
        ->capture_default_str();
    snoop->add_option("--rate", live_args.rate, "Live: probes per hour per hostname (at most 3600/ttl-max)");
    snoop->add_option("--rounds", live_args.rounds, "Live: probe rounds")->capture_default_str();

    double lambda_client = audit::kGoogleRequestsPerClientHour;
    auto* popularity = add("popularity", "Estimate request rates and users from snooped refreshes", "snoop-sim");
    popularity->add_option("--hostnames", hostnames_file, "File with one hostname per line");
    popularity->add_option("--hours", hours, "Campaign length in hours");
    popularity->add_option("--lambda-c", lambda_client, "Requests per client per hour")->capture_default_str();

    double lambda = 0;
    auto* users = add("estimate-users", "Users behind an aggregate request rate", "");
    users->add_option("--lambda", lambda, "Aggregate requests per hour")->required();
    users->add_option("--lambda-c", lambda_client, "Requests per client per hour")->capture_default_str();

    double user_count = 0, price = 0, link_cost = 10, link_capacity = 1000;
    std::optional<double> lambda_opt;
    auto* profit = add("estimate-profit", "Monthly profit for a user base", "");
    auto* users_opt = profit->add_option("--users", user_count, "Number of users");
    profit->add_option("--lambda", lambda_opt, "Aggregate requests per hour (instead of --users)")->excludes(users_opt);
    profit->add_option("--lambda-c", lambda_client, "Requests per client per hour")->capture_default_str();
    profit->add_option("--price", price, "Monthly price per user")->required();
    profit->add_option("--link-cost", link_cost, "Monthly cost of one link")->capture_default_str();
    profit->add_option("--link-capacity", link_capacity, "Link capacity in Mbps")->capture_default_str();

    std::string variant = "third-party";
    std::optional<std::size_t> limit;
    auto* enumerate = add("enumerate", "Find registered client IPs with forged queries", "vpnuk-sim");
    enumerate->add_option("--variant", variant, "third-party or channel")
        ->check(CLI::IsMember({"third-party", "channel"}))
        ->capture_default_str();
    enumerate->add_option("--limit", limit, "Probe only the first N candidates");

    auto* deproxy = add("deproxy-demo", "Pair hostname and IP-literal fetches to expose proxied users", "deproxy-sim");

    std::optional<std::string> ground_truth;
    auto* discover = add("discover-proxies", "Find and confirm a provider's proxies", "discovery-sim");
    discover->add_option("--ground-truth", ground_truth, "CSV of honest resolutions: hostname,ip[,vantage,timestamp]");

    auto* classify = add("classify-proxy", "Classify proxies as open and/or universal", "provider-proxies");

    std::optional<std::string> signature;
    auto* fingerprint = add("fingerprint", "Scan hosts for a proxy banner", "discovery-sim");
    fingerprint->add_option("--signature", signature, "Banner text to look for");

    auto* exposure = add("path-exposure", "Compare ASes on the path to public and smart DNS resolvers", "exposure-us");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    const Common& c = commons[name];
    if (!hostnames_file.empty() && !live_args.live) snoop_opts.hostnames = read_hostnames(hostnames_file);
    snoop_opts.hours = hours;
    auto doc = [&] { return app::load_config(c.config, c.seed); };
    json inputs = {{"command", name}, {"seed", c.seed}};

    app::CommandOutput result;
    if (cmd == simulate) {
        inputs["config"] = doc();
        result = app::simulate(inputs["config"], c.seed);
    } else if (cmd == snoop && live_args.live) {
        live_args.hostnames = hostnames_file;
        result = live_snoop(live_args);
        inputs["live"] = true;
    } else if (cmd == snoop || cmd == popularity) {
        inputs["config"] = doc();
        if (snoop_opts.hostnames) inputs["hostnames"] = *snoop_opts.hostnames;
        if (hours) inputs["hours"] = *hours;
        if (cmd == snoop) {
            result = app::snoop(inputs["config"], c.seed, snoop_opts);
        } else {
            inputs["lambda_c"] = lambda_client;
            result = app::popularity(inputs["config"], c.seed, snoop_opts, lambda_client);
        }
    } else if (cmd == users) {
        inputs["lambda"] = lambda;
        inputs["lambda_c"] = lambda_client;
        result.findings = app::estimate_users(lambda, lambda_client);
        std::cout << "users " << result.findings["users"].get<std::int64_t>() << "\n";
    } else if (cmd == profit) {
        if (lambda_opt) user_count = static_cast<double>(audit::estimate_users(*lambda_opt, lambda_client));
        else if (!profit->count("--users")) throw UsageError("estimate-profit needs --users or --lambda");
        inputs.update({{"users", user_count}, {"price", price}, {"link_cost", link_cost}, {"link_capacity", link_capacity}});
        result.findings = app::estimate_profit(user_count, price, link_cost, link_capacity);
        std::cout << "monthly_profit " << result.findings["monthly_profit_rounded"].get<std::int64_t>() << "\n";
    } else if (cmd == enumerate) {
        inputs["config"] = doc();
        inputs["variant"] = variant;
        if (limit) inputs["limit"] = *limit;
        app::EnumerateOptions eo;
        eo.variant = variant == "channel" ? audit::EnumerationVariant::ChannelOperator
                                          : audit::EnumerationVariant::ThirdParty;
        eo.limit = limit;
        result = app::enumerate(inputs["config"], c.seed, eo);
    } else if (cmd == deproxy) {
        inputs["config"] = doc();
        result = app::deproxy_demo(inputs["config"], c.seed);
    } else if (cmd == discover) {
        inputs["config"] = doc();
        std::optional<std::string> csv;
        if (ground_truth) inputs["ground_truth"] = *(csv = app::read_file(*ground_truth));
        result = app::discover_proxies(inputs["config"], c.seed, csv);
    } else if (cmd == classify) {
        inputs["config"] = doc();
        result = app::classify_proxies(inputs["config"], c.seed);
    } else if (cmd == fingerprint) {
        inputs["config"] = doc();
        if (signature) inputs["signature"] = *signature;
        result = app::fingerprint(inputs["config"], c.seed, signature);
    } else if (cmd == exposure) {
        inputs["config"] = doc();
        result = app::path_exposure(inputs["config"], c.seed);
    }
    emit(name, c, inputs, result);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "sdns-audit: " << e.what() << "\n";
        return kUsage;
    } catch (const app::IoError& e) {
        std::cerr << "sdns-audit: " << e.what() << "\n";
        return kIo;
    } catch (const ConfigError& e) {
        std::cerr << "sdns-audit: config: " << e.what() << "\n";
        return kConfig;
    } catch (const netlab::ScriptError& e) {
        std::cerr << "sdns-audit: script: " << e.what() << "\n";
        return kConfig;
    } catch (const dns::InvalidName& e) {
        std::cerr << "sdns-audit: config: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "sdns-audit: internal error: " << e.what() << "\n";
        return kInternal;
    }
}
