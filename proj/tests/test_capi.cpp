#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "heartsim/heartsim.h"

namespace {

namespace fs = std::filesystem;

const char* kInlineScenario = R"(
name: capi-smoke
seed: 7
duration_ms: 120000
config:
  own_number: "+593900000001"
  api_key: "A1B2C3D4E5F6A7B8"
  contacts: ["+593991111111"]
segments:
  - start_ms: 0
    target_bpm: 75
    spo2_ratio_r: 0.52
gnss:
  - t_ms: 0
    lat: -2.2269
    lon: -80.859
)";

fs::path fresh_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() /
                     ("heartsim-capi-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("version and status strings") {
    CHECK(std::strlen(hs_version()) > 0);
    CHECK(std::string(hs_status_name(HS_OK)) == "ok");
    CHECK(std::string(hs_status_name(HS_ERR_VALIDATION)) == "validation error");
}

TEST_CASE("scenario loading from file and error reporting") {
    const auto path = fs::path(SCENARIO_DIR) / "nominal-hour.yaml";
    hs_scenario* sc = nullptr;
    REQUIRE(hs_scenario_load_file(path.c_str(), &sc) == HS_OK);
    REQUIRE(sc != nullptr);
    CHECK(std::string(hs_scenario_name(sc)) == "nominal-hour");
    CHECK(hs_scenario_seed(sc) == 10);
    CHECK(hs_scenario_duration_ms(sc) == 3600000);
    hs_scenario_free(sc);

    sc = nullptr;
    CHECK(hs_scenario_load_file("/nonexistent/file.yaml", &sc) != HS_OK);
    CHECK(sc == nullptr);
    CHECK(std::strlen(hs_last_error()) > 0);

    CHECK(hs_scenario_load_file(nullptr, &sc) == HS_ERR_INVALID_ARG);
}

TEST_CASE("scenario strings are validated") {
    hs_scenario* sc = nullptr;
    CHECK(hs_scenario_load_string("segments: [1, 2", "x", &sc) == HS_ERR_PARSE);

    // parses but fails validation: bad api key
    const char* invalid = R"(
name: bad
seed: 1
duration_ms: 1000
config:
  own_number: "+593900000001"
  api_key: "short"
segments:
  - start_ms: 0
)";
    CHECK(hs_scenario_load_string(invalid, "bad", &sc) == HS_ERR_VALIDATION);
    CHECK(std::string(hs_last_error()).find("api_key") != std::string::npos);

    REQUIRE(hs_scenario_load_string(kInlineScenario, nullptr, &sc) == HS_OK);
    CHECK(std::string(hs_scenario_name(sc)) == "capi-smoke");
    hs_scenario_free(sc);
}

TEST_CASE("run, artifacts, reload and comparison") {
    hs_scenario* sc = nullptr;
    REQUIRE(hs_scenario_load_string(kInlineScenario, nullptr, &sc) == HS_OK);

    const auto dir = fresh_dir("run");
    hs_result* result = nullptr;
    REQUIRE(hs_run(sc, dir.c_str(), &result) == HS_OK);
    hs_scenario_free(sc);
    REQUIRE(result != nullptr);

    CHECK(hs_result_uploads_attempted(result) == 2);  // 120 s at the 48 s cadence
    CHECK(hs_result_uploads_received(result) == 2);
    double ratio = 0.0;
    REQUIRE(hs_result_success_ratio(result, &ratio) == 0);
    CHECK(ratio == 1.0);
    CHECK(hs_result_alert_count(result) == 0);
    CHECK(hs_result_sms_sent(result) == 0);
    CHECK(hs_result_endurance_hours(result) == 9.0);
    CHECK(hs_result_depleted_at_ms(result) == -1);
    CHECK(hs_result_kb_per_hour(result) > 0.0);
    CHECK(hs_result_mb_per_day(result) ==
          doctest::Approx(hs_result_kb_per_hour(result) * 24 / 1000).epsilon(1e-12));

    const auto report = nlohmann::json::parse(hs_result_report_json(result));
    CHECK(report.at("scenario") == "capi-smoke");
    CHECK(report.at("uploads_attempted") == 2);

    for (const auto* name :
         {"effects.jsonl", "transcript.txt", "feed.jsonl", "vitals.csv", "report.json"})
        CHECK(fs::exists(dir / name));

    // reload from disk sees the same numbers
    hs_result* loaded = nullptr;
    REQUIRE(hs_result_load(dir.c_str(), &loaded) == HS_OK);
    CHECK(hs_result_uploads_attempted(loaded) == hs_result_uploads_attempted(result));
    CHECK(hs_result_kb_per_hour(loaded) == hs_result_kb_per_hour(result));

    const auto rows = nlohmann::json::parse(hs_result_compare_json(loaded));
    CHECK(rows.size() == 5);
    CHECK(hs_result_compare_flags(loaded) > 0);  // a 2-minute run is not the reference hour
    CHECK(std::string(hs_result_compare_table(loaded)).find("metric") == 0);

    hs_result_free(loaded);
    hs_result_free(result);

    hs_result* missing = nullptr;
    CHECK(hs_result_load("/nonexistent", &missing) != HS_OK);
    fs::remove_all(dir);
}

TEST_CASE("series export through the C surface") {
    hs_scenario* sc = nullptr;
    REQUIRE(hs_scenario_load_string(kInlineScenario, nullptr, &sc) == HS_OK);
    const auto dir = fresh_dir("export");
    hs_result* result = nullptr;
    REQUIRE(hs_run(sc, dir.c_str(), &result) == HS_OK);
    hs_result_free(result);
    hs_scenario_free(sc);

    const auto csv = dir / "series.csv";
    REQUIRE(hs_export_series(dir.c_str(), "minutes", 1, csv.c_str()) == HS_OK);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "bucket_start_ms,avg_bpm,avg_spo2");
    int rows = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows >= 1);
    CHECK(rows <= 2);  // two minutes of data

    CHECK(hs_export_series(dir.c_str(), "fortnights", 1, csv.c_str()) == HS_ERR_INVALID_ARG);
    CHECK(hs_export_series("/nonexistent", "minutes", 1, csv.c_str()) == HS_ERR_IO);
    fs::remove_all(dir);
}

TEST_CASE("standalone telemetry service") {
    hs_server* server = nullptr;
    REQUIRE(hs_server_start("127.0.0.1", 0, "ABCD1234EFGH5678", &server) == HS_OK);
    const int port = hs_server_port(server);
    CHECK(port > 0);

    httplib::Client client("127.0.0.1", port);
    auto res = client.Get("/update?api_key=ABCD1234EFGH5678&field1=72&field2=98");
    REQUIRE(res);
    CHECK(res->body == "1");
    res = client.Get("/channels/1/feeds.json");
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body).at("feeds").size() == 1);

    hs_server_stop(server);
}
