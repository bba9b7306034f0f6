#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/simulation.hpp"

using namespace heartsim;
using namespace heartsim::sim;

namespace {

namespace fs = std::filesystem;

fs::path scenario_dir() { return fs::path(SCENARIO_DIR); }

fs::path fresh_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path() /
                     ("heartsim-test-" + std::to_string(::getpid()) + "-" + tag + "-" +
                      std::to_string(counter++));
    fs::remove_all(dir);
    return dir;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Scenario base_scenario() {
    Scenario sc;
    sc.name = "unit";
    sc.seed = 3;
    sc.duration_ms = 60000;
    sc.config.own_number = "+593900000001";
    sc.config.api_key = "A1B2C3D4E5F6A7B8";
    sc.config.contacts = {"+593991111111"};
    sc.segments.push_back({0, {}});
    return sc;
}

}  // namespace

TEST_CASE("bundled scenarios parse and validate") {
    const std::vector<std::string> names = {"nominal-hour", "brady-episode", "tachy-episode",
                                            "config-session", "lossy-network"};
    for (const auto& name : names) {
        CAPTURE(name);
        const auto sc = load_scenario_file(scenario_dir() / (name + ".yaml"));
        CHECK(sc.name == name);
        CHECK(validate(sc).empty());
    }
    const auto nominal = load_scenario_file(scenario_dir() / "nominal-hour.yaml");
    CHECK(nominal.duration_ms == 3600000);
    CHECK(nominal.http_loss_prob == doctest::Approx(2.0 / 75.0).epsilon(1e-12));
}

TEST_CASE("validation rejects the documented failure modes") {
    auto sc = base_scenario();
    CHECK(validate(sc).empty());

    SUBCASE("segments must start at zero") {
        sc.segments[0].start_ms = 1000;
        CHECK(!validate(sc).empty());
    }
    SUBCASE("segment starts strictly increase") {
        sc.segments.push_back({0, {}});
        CHECK(!validate(sc).empty());
    }
    SUBCASE("events inside the run") {
        sc.button_presses.push_back(60000);
        CHECK(!validate(sc).empty());
    }
    SUBCASE("sender must be E.164") {
        sc.inbound_sms.push_back({1000, "12345", "CFG"});
        CHECK(!validate(sc).empty());
    }
    SUBCASE("sample rate floor") {
        sc.sample_hz = 10;
        CHECK(!validate(sc).empty());
    }
    SUBCASE("probabilities in range") {
        sc.http_loss_prob = 1.5;
        CHECK(!validate(sc).empty());
    }
    SUBCASE("profile ADC headroom") {
        sc.segments[0].profile.dc_ir = 65000;
        CHECK(!validate(sc).empty());
    }
    SUBCASE("band must be a GSM band") {
        sc.band_mhz = 2100;
        CHECK(!validate(sc).empty());
    }
    SUBCASE("running an invalid scenario throws") {
        sc.sample_hz = 10;
        CHECK_THROWS_AS(run_scenario(sc, std::nullopt), std::invalid_argument);
    }
}

TEST_CASE("waypoint track interpolates between fixes") {
    CHECK(!track_fix({}, 0).valid);

    const std::vector<Waypoint> still{{0, -2.0, -80.0}};
    CHECK(track_fix(still, 500000).lat == -2.0);
    CHECK(track_fix(still, 500000).valid);

    const std::vector<Waypoint> moving{{0, 0.0, 10.0}, {10000, 1.0, 20.0}};
    const auto mid = track_fix(moving, 5000);
    CHECK(mid.lat == doctest::Approx(0.5));
    CHECK(mid.lon == doctest::Approx(15.0));
    CHECK(track_fix(moving, -5).lat == 0.0);
    CHECK(track_fix(moving, 99999).lat == 1.0);
}

TEST_CASE("zero-duration scenario produces an empty report") {
    auto sc = base_scenario();
    sc.duration_ms = 0;
    sc.segments.clear();
    const auto rep = run_scenario(sc, std::nullopt);
    CHECK(rep.uploads_attempted == 0);
    CHECK(rep.uploads_received == 0);
    CHECK(!rep.success_ratio.has_value());
    CHECK(rep.alerts.empty());
    CHECK(rep.sms_sent == 0);
    CHECK(rep.bytes_sent == 0);
    CHECK(!rep.depleted_at_ms.has_value());
}

TEST_CASE("config session run accepts inside the window and ignores after") {
    const auto sc = load_scenario_file(scenario_dir() / "config-session.yaml");
    const auto dir = fresh_dir("config");
    const auto rep = run_scenario(sc, dir);

    // one ack only: the in-window command
    CHECK(rep.sms_sent == 1);
    const auto effects = read_jsonl(dir / "effects.jsonl");
    int config_changed = 0, ok_acks = 0, rejected_acks = 0;
    for (const auto& e : effects) {
        if (e.at("type") == "config_changed") ++config_changed;
        if (e.at("type") == "send_sms") {
            const auto body = e.at("body").get<std::string>();
            if (body == "OK CONTACT ADD") ++ok_acks;
            if (body.rfind("REJECTED", 0) == 0) ++rejected_acks;
        }
    }
    CHECK(config_changed == 1);
    CHECK(ok_acks == 1);
    CHECK(rejected_acks == 0);  // the late SMS is outside Configuring mode entirely
    fs::remove_all(dir);
}

TEST_CASE("battery depletion halts a run at capacity over draw") {
    auto sc = base_scenario();
    sc.name = "battery";
    sc.duration_ms = 10 * 3600 * 1000;
    sc.battery_capacity_mah = 1800;
    sc.battery_draw_ma = 200;
    const auto rep = run_scenario(sc, std::nullopt);
    REQUIRE(rep.depleted_at_ms.has_value());
    CHECK(*rep.depleted_at_ms == 9 * 3600 * 1000);
    // uploads stop at depletion: 9h/48s slots, first at 48s
    CHECK(rep.uploads_attempted == 9 * 3600 / 48);
    CHECK(rep.endurance_hours == Rational::of(9, 1));
}

TEST_CASE("cross-ledger consistency on a lossy run") {
    const auto sc = load_scenario_file(scenario_dir() / "lossy-network.yaml");
    const auto dir = fresh_dir("lossy");
    const auto rep = run_scenario(sc, dir);

    CHECK(rep.uploads_attempted == rep.uploads_received + rep.http_dropped);
    CHECK(rep.sms_sent == rep.sms_delivered + rep.sms_dropped);
    CHECK(rep.bytes_sent == rep.uploads_attempted * sc.per_upload_bytes);

    const auto effects = read_jsonl(dir / "effects.jsonl");
    int64_t sms_effects = 0, http_effects = 0;
    for (const auto& e : effects) {
        if (e.at("type") == "send_sms") ++sms_effects;
        if (e.at("type") == "http_update") ++http_effects;
    }
    CHECK(sms_effects == rep.sms_sent);
    CHECK(http_effects == rep.uploads_attempted);

    // stored entries match the feed artifact
    const auto feed = read_jsonl(dir / "feed.jsonl");
    CHECK(static_cast<int64_t>(feed.size()) == rep.uploads_received);
    fs::remove_all(dir);
}

TEST_CASE("report json round trips") {
    const auto sc = load_scenario_file(scenario_dir() / "brady-episode.yaml");
    const auto rep = run_scenario(sc, std::nullopt);
    const auto j = report_to_json(rep);
    const auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.scenario == rep.scenario);
    CHECK(back.uploads_attempted == rep.uploads_attempted);
    CHECK(back.uploads_received == rep.uploads_received);
    CHECK(back.success_ratio == rep.success_ratio);
    CHECK(back.alerts.size() == rep.alerts.size());
    CHECK(back.alerts[0].url == rep.alerts[0].url);
    CHECK(back.endurance_hours == rep.endurance_hours);
    CHECK(back.kb_per_hour == rep.kb_per_hour);
    CHECK(back.mb_per_day == rep.mb_per_day);
}

TEST_CASE("repeated runs write byte-identical artifacts") {
    const auto sc = load_scenario_file(scenario_dir() / "brady-episode.yaml");
    const auto d1 = fresh_dir("det1");
    const auto d2 = fresh_dir("det2");
    run_scenario(sc, d1);
    run_scenario(sc, d2);
    for (const auto* name :
         {"effects.jsonl", "transcript.txt", "feed.jsonl", "vitals.csv", "report.json"}) {
        CAPTURE(name);
        CHECK(slurp(d1 / name) == slurp(d2 / name));
        CHECK(!slurp(d1 / name).empty());
    }
    fs::remove_all(d1);
    fs::remove_all(d2);
}

TEST_CASE("comparison table flags deviations") {
    const auto sc = load_scenario_file(scenario_dir() / "nominal-hour.yaml");
    auto rep = run_scenario(sc, std::nullopt);
    auto rows = compare_to_reference(rep);
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CAPTURE(r.metric);
        CHECK(r.within);
    }

    // a lossless variant stores 75 and must be flagged on the received row
    auto lossless = sc;
    lossless.http_loss_prob = 0.0;
    rep = run_scenario(lossless, std::nullopt);
    rows = compare_to_reference(rep);
    bool flagged = false;
    for (const auto& r : rows)
        if (r.metric == "received_per_hour") flagged = !r.within;
    CHECK(flagged);

    const auto table = render_compare_table(rows);
    CHECK(table.find("FLAGGED") != std::string::npos);
    CHECK(table.find("uploads_per_hour") != std::string::npos);
}
