#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "sdns/app/commands.hpp"
#include "sdns/presets.hpp"

using namespace sdns;
using nlohmann::json;

TEST_CASE("configs load from presets and files", "[app]") {
    CHECK(app::load_config("walkthrough", 1) == presets::get("walkthrough", 1));
    CHECK_THROWS_AS(app::load_config("/no/such/file.json", 1), app::IoError);

    auto dir = std::filesystem::temp_directory_path() / "sdns-app-test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "ok.json") << presets::get("walkthrough", 1).dump();
    std::ofstream(dir / "bad.json") << "{\"nodes\": [";
    CHECK(app::load_config((dir / "ok.json").string(), 1) == presets::get("walkthrough", 1));
    CHECK_THROWS_AS(app::load_config((dir / "bad.json").string(), 1), ConfigError);
}

TEST_CASE("commands need their audit block", "[app]") {
    CHECK_THROWS_AS(app::enumerate(presets::get("walkthrough", 1), 1, {}), ConfigError);
    CHECK_THROWS_AS(app::deproxy_demo(presets::get("provider-proxies", 1), 1), ConfigError);
}

TEST_CASE("arithmetic commands", "[app]") {
    CHECK(app::estimate_users(41119, 2.63)["users"] == 15635);
    auto p = app::estimate_profit(1356, 4.95, 10, 1000);
    CHECK(p["users_per_link"] == 150);
    CHECK(p["monthly_profit_rounded"] == 6622);
    CHECK_THROWS_AS(app::estimate_users(10, 0), ConfigError);
    CHECK_THROWS_AS(app::estimate_profit(10, 4.95, 10, 0), ConfigError);
}

TEST_CASE("enumeration findings agree with the registry", "[app]") {
    app::EnumerateOptions opts;
    opts.limit = 200;
    auto f = app::enumerate(presets::get("ibvpn-sim", 5), 5, opts).findings;
    CHECK(f["candidates"] == 200);
    CHECK(f["agreeing_with_registry"] == 200);
    CHECK(f["verdicts"].size() == 200);
}

TEST_CASE("popularity estimates cover the scripted rates", "[app]") {
    app::SnoopOptions opts;
    opts.hours = 48;
    auto out = app::popularity(presets::get("snoop-sim", 2), 2, opts, 2.63);
    int covered = 0, with_truth = 0;
    for (const auto& [host, e] : out.findings["hostnames"].items()) {
        CHECK_FALSE(e["erratic"].get<bool>());
        if (!e.contains("true_rate_per_hour")) {
            CHECK(e["estimate"].is_null());
            continue;
        }
        ++with_truth;
        if (e.contains("ci_covers_truth")) covered += e["ci_covers_truth"].get<bool>();
    }
    CHECK(with_truth == 20);
    CHECK(covered >= 17);
    CHECK(out.files.at("popularity.csv").starts_with("hostname,"));
}

TEST_CASE("findings are reproducible for a seed", "[app]") {
    auto a = app::discover_proxies(presets::get("discovery-sim", 4), 4, std::nullopt).findings;
    auto b = app::discover_proxies(presets::get("discovery-sim", 4), 4, std::nullopt).findings;
    CHECK(a == b);
    CHECK(app::simulate(presets::get("walkthrough", 4), 4).findings ==
          app::simulate(presets::get("walkthrough", 4), 4).findings);
}
