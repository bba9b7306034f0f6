#include "heartsim/heartsim.h"

#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "core/report.hpp"
#include "core/scenario.hpp"
#include "core/simulation.hpp"
#include "core/telemetry.hpp"
#include "core/telemetry_http.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

}  // namespace

struct hs_scenario {
    heartsim::sim::Scenario scenario;
};

struct hs_result {
    heartsim::sim::RunReport report;
    std::string report_json;    // cached render
    std::string compare_json;
    std::string compare_table;
};

struct hs_server {
    heartsim::telemetry::Store store;
    std::unique_ptr<heartsim::telemetry::HttpServer> http;
};

extern "C" {

const char* hs_version(void) { return "1.0.0"; }

const char* hs_status_name(hs_status status) {
    switch (status) {
        case HS_OK: return "ok";
        case HS_ERR_INVALID_ARG: return "invalid argument";
        case HS_ERR_PARSE: return "parse error";
        case HS_ERR_VALIDATION: return "validation error";
        case HS_ERR_IO: return "io error";
        case HS_ERR_RUNTIME: return "runtime error";
    }
    return "unknown";
}

const char* hs_last_error(void) { return g_last_error.c_str(); }

/* --- scenarios --------------------------------------------------------- */

hs_status hs_scenario_load_file(const char* path, hs_scenario** out) {
    if (path == nullptr || out == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        auto sc = heartsim::sim::load_scenario_file(path);
        if (const auto errors = heartsim::sim::validate(sc); !errors.empty()) {
            std::string msg;
            for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
            set_error(msg);
            return HS_ERR_VALIDATION;
        }
        *out = new hs_scenario{std::move(sc)};
        return HS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_PARSE;
    }
}

hs_status hs_scenario_load_string(const char* yaml_text, const char* name, hs_scenario** out) {
    if (yaml_text == nullptr || out == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        auto sc = heartsim::sim::load_scenario_string(yaml_text,
                                                      name != nullptr ? name : "inline");
        if (const auto errors = heartsim::sim::validate(sc); !errors.empty()) {
            std::string msg;
            for (const auto& e : errors) msg += (msg.empty() ? "" : "; ") + e;
            set_error(msg);
            return HS_ERR_VALIDATION;
        }
        *out = new hs_scenario{std::move(sc)};
        return HS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_PARSE;
    }
}

void hs_scenario_free(hs_scenario* scenario) { delete scenario; }

const char* hs_scenario_name(const hs_scenario* scenario) {
    return scenario != nullptr ? scenario->scenario.name.c_str() : "";
}

uint64_t hs_scenario_seed(const hs_scenario* scenario) {
    return scenario != nullptr ? scenario->scenario.seed : 0;
}

int64_t hs_scenario_duration_ms(const hs_scenario* scenario) {
    return scenario != nullptr ? scenario->scenario.duration_ms : 0;
}

/* --- runs --------------------------------------------------------------- */

hs_status hs_run(const hs_scenario* scenario, const char* out_dir, hs_result** out) {
    if (scenario == nullptr || out == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        std::optional<std::filesystem::path> dir;
        if (out_dir != nullptr) dir = std::filesystem::path(out_dir);
        auto report = heartsim::sim::run_scenario(scenario->scenario, dir);
        *out = new hs_result{std::move(report), {}, {}, {}};
        return HS_OK;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return HS_ERR_VALIDATION;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_RUNTIME;
    }
}

hs_status hs_result_load(const char* run_dir, hs_result** out) {
    if (run_dir == nullptr || out == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        const auto path = std::filesystem::path(run_dir) / "report.json";
        std::ifstream in(path);
        if (!in) {
            set_error("cannot open " + path.string());
            return HS_ERR_IO;
        }
        const auto j = nlohmann::json::parse(in);
        *out = new hs_result{heartsim::sim::report_from_json(j), {}, {}, {}};
        return HS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_PARSE;
    }
}

void hs_result_free(hs_result* result) { delete result; }

int64_t hs_result_uploads_attempted(const hs_result* r) {
    return r != nullptr ? r->report.uploads_attempted : 0;
}

int64_t hs_result_uploads_received(const hs_result* r) {
    return r != nullptr ? r->report.uploads_received : 0;
}

int hs_result_success_ratio(const hs_result* r, double* out_ratio) {
    if (r == nullptr || !r->report.success_ratio) return 1;
    if (out_ratio != nullptr) *out_ratio = r->report.success_ratio->value();
    return 0;
}

int64_t hs_result_alert_count(const hs_result* r) {
    return r != nullptr ? static_cast<int64_t>(r->report.alerts.size()) : 0;
}

int64_t hs_result_sms_sent(const hs_result* r) {
    return r != nullptr ? r->report.sms_sent : 0;
}

double hs_result_endurance_hours(const hs_result* r) {
    return r != nullptr ? r->report.endurance_hours.value() : 0.0;
}

double hs_result_kb_per_hour(const hs_result* r) {
    return r != nullptr ? r->report.kb_per_hour : 0.0;
}

double hs_result_mb_per_day(const hs_result* r) {
    return r != nullptr ? r->report.mb_per_day : 0.0;
}

int64_t hs_result_depleted_at_ms(const hs_result* r) {
    if (r == nullptr || !r->report.depleted_at_ms) return -1;
    return *r->report.depleted_at_ms;
}

const char* hs_result_report_json(hs_result* r) {
    if (r == nullptr) return "";
    if (r->report_json.empty())
        r->report_json = heartsim::sim::report_to_json(r->report).dump(2);
    return r->report_json.c_str();
}

const char* hs_result_compare_json(hs_result* r) {
    if (r == nullptr) return "";
    if (r->compare_json.empty())
        r->compare_json =
            heartsim::sim::compare_to_json(heartsim::sim::compare_to_reference(r->report))
                .dump(2);
    return r->compare_json.c_str();
}

const char* hs_result_compare_table(hs_result* r) {
    if (r == nullptr) return "";
    if (r->compare_table.empty())
        r->compare_table = heartsim::sim::render_compare_table(
            heartsim::sim::compare_to_reference(r->report));
    return r->compare_table.c_str();
}

int hs_result_compare_flags(const hs_result* r) {
    if (r == nullptr) return 0;
    int flags = 0;
    for (const auto& row : heartsim::sim::compare_to_reference(r->report))
        if (!row.within) ++flags;
    return flags;
}

/* --- exports ------------------------------------------------------------ */

hs_status hs_export_series(const char* run_dir, const char* bucket, int bucket_n,
                           const char* out_csv_path) {
    if (run_dir == nullptr || bucket == nullptr || out_csv_path == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    try {
        const auto unit = heartsim::telemetry::bucket_unit_from(bucket);
        if (!unit || bucket_n <= 0) {
            set_error("bucket must be minutes/hours/days with a positive count");
            return HS_ERR_INVALID_ARG;
        }

        const auto feed_path = std::filesystem::path(run_dir) / "feed.jsonl";
        std::ifstream in(feed_path);
        if (!in) {
            set_error("cannot open " + feed_path.string());
            return HS_ERR_IO;
        }
        heartsim::telemetry::Store store;
        const int64_t id = store.create_channel("", {"bpm", "SpO2"});
        store.load_snapshot(in, id);

        heartsim::telemetry::AggregateQuery q;
        q.unit = *unit;
        q.count = bucket_n;
        q.stat = heartsim::telemetry::Statistic::Average;
        const auto ch = store.channel(id);
        const auto [from, to] = heartsim::telemetry::aligned_cover(*ch, q.span_ms());
        q.from_ms = from;
        q.to_ms = to;

        q.field = 1;
        const auto bpm = store.aggregate(id, q);
        q.field = 2;
        const auto spo2 = store.aggregate(id, q);

        std::ofstream out(out_csv_path, std::ios::binary);
        if (!out) {
            set_error(std::string("cannot write ") + out_csv_path);
            return HS_ERR_IO;
        }
        out << "bucket_start_ms,avg_bpm,avg_spo2\n";
        // both series come from the same entries, so buckets line up
        size_t si = 0;
        for (const auto& b : *bpm) {
            out << b.start_ms << ',' << b.value << ',';
            if (si < spo2->size() && (*spo2)[si].start_ms == b.start_ms)
                out << (*spo2)[si++].value;
            out << '\n';
        }
        return HS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_RUNTIME;
    }
}

/* --- standalone service -------------------------------------------------- */

hs_status hs_server_start(const char* host, int port, const char* api_key, hs_server** out) {
    if (out == nullptr || api_key == nullptr) {
        set_error("null argument");
        return HS_ERR_INVALID_ARG;
    }
    *out = nullptr;
    try {
        auto server = std::make_unique<hs_server>();
        server->store.create_channel(api_key, {"bpm", "SpO2"});
        server->http = std::make_unique<heartsim::telemetry::HttpServer>(server->store);
        if (!server->http->start(host != nullptr ? host : "127.0.0.1", port)) {
            set_error("cannot bind port");
            return HS_ERR_IO;
        }
        *out = server.release();
        return HS_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return HS_ERR_RUNTIME;
    }
}

int hs_server_port(const hs_server* server) {
    return server != nullptr && server->http ? server->http->port() : -1;
}

void hs_server_stop(hs_server* server) {
    if (server == nullptr) return;
    if (server->http) server->http->stop();
    delete server;
}

}  // extern "C"
