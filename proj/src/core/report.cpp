#include "core/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace heartsim::sim {

namespace {

nlohmann::ordered_json alert_to_json(const device::AlertEvent& a) {
    nlohmann::ordered_json j;
    j["t_ms"] = a.t_ms;
    j["kind"] = device::to_string(a.kind);
    j["bpm"] = a.bpm;
    j["spo2_pct"] = a.spo2_pct;
    j["fix_valid"] = a.fix.valid;
    if (a.fix.valid) {
        j["lat"] = a.fix.lat;
        j["lon"] = a.fix.lon;
        j["url"] = a.url;
    }
    return j;
}

device::AlertEvent alert_from_json(const nlohmann::json& j) {
    device::AlertEvent a;
    a.t_ms = j.at("t_ms").get<int64_t>();
    a.kind = j.at("kind").get<std::string>() == "Bradycardia" ? device::AlertKind::Bradycardia
                                                              : device::AlertKind::Tachycardia;
    a.bpm = j.at("bpm").get<int>();
    a.spo2_pct = j.at("spo2_pct").get<int>();
    a.fix.valid = j.at("fix_valid").get<bool>();
    if (a.fix.valid) {
        a.fix.lat = j.at("lat").get<double>();
        a.fix.lon = j.at("lon").get<double>();
        a.url = j.at("url").get<std::string>();
    }
    return a;
}

}  // namespace

nlohmann::ordered_json report_to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["duration_ms"] = r.duration_ms;
    j["uploads_attempted"] = r.uploads_attempted;
    j["uploads_received"] = r.uploads_received;
    if (r.success_ratio) {
        j["success_ratio"] = r.success_ratio->value();
        j["success_ratio_exact"] = r.success_ratio->str();
    } else {
        j["success_ratio"] = nullptr;
        j["success_ratio_exact"] = "undefined";
    }
    j["alerts"] = nlohmann::ordered_json::array();
    for (const auto& a : r.alerts) j["alerts"].push_back(alert_to_json(a));
    j["sms_sent"] = r.sms_sent;
    j["sms_delivered"] = r.sms_delivered;
    j["sms_dropped"] = r.sms_dropped;
    j["http_dropped"] = r.http_dropped;
    // the flat accounting object emitted by the power ledger
    j["power"] = {{"endurance_hours", r.endurance_hours.value()},
                  {"kb_per_hour", r.kb_per_hour},
                  {"mb_per_day", r.mb_per_day},
                  {"attempts", r.uploads_attempted},
                  {"delivered", r.uploads_received}};
    j["endurance_hours_exact"] = r.endurance_hours.str();
    if (r.depleted_at_ms)
        j["depleted_at_ms"] = *r.depleted_at_ms;
    else
        j["depleted_at_ms"] = nullptr;
    j["bytes_sent"] = r.bytes_sent;
    return j;
}

RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.seed = j.at("seed").get<uint64_t>();
    r.duration_ms = j.at("duration_ms").get<int64_t>();
    r.uploads_attempted = j.at("uploads_attempted").get<int64_t>();
    r.uploads_received = j.at("uploads_received").get<int64_t>();
    const std::string ratio = j.at("success_ratio_exact").get<std::string>();
    if (ratio != "undefined") {
        const size_t slash = ratio.find('/');
        r.success_ratio = Rational::of(std::stoll(ratio.substr(0, slash)),
                                       std::stoll(ratio.substr(slash + 1)));
    }
    for (const auto& a : j.at("alerts")) r.alerts.push_back(alert_from_json(a));
    r.sms_sent = j.at("sms_sent").get<int64_t>();
    r.sms_delivered = j.at("sms_delivered").get<int64_t>();
    r.sms_dropped = j.at("sms_dropped").get<int64_t>();
    r.http_dropped = j.at("http_dropped").get<int64_t>();
    const std::string endurance = j.at("endurance_hours_exact").get<std::string>();
    const size_t slash = endurance.find('/');
    r.endurance_hours = Rational::of(std::stoll(endurance.substr(0, slash)),
                                     std::stoll(endurance.substr(slash + 1)));
    if (!j.at("depleted_at_ms").is_null())
        r.depleted_at_ms = j.at("depleted_at_ms").get<int64_t>();
    r.bytes_sent = j.at("bytes_sent").get<int64_t>();
    r.kb_per_hour = j.at("power").at("kb_per_hour").get<double>();
    r.mb_per_day = j.at("power").at("mb_per_day").get<double>();
    return r;
}

std::vector<CompareRow> compare_to_reference(const RunReport& report) {
    const double hours = static_cast<double>(report.duration_ms) / 3600000.0;
    const auto per_hour = [&](double count) { return hours > 0.0 ? count / hours : 0.0; };

    const auto row = [](std::string metric, double ref, double run, double tol) {
        CompareRow r;
        r.metric = std::move(metric);
        r.reference = ref;
        r.run = run;
        r.rel_delta = ref != 0.0 ? (run - ref) / ref : run;
        r.within = std::abs(r.rel_delta) <= tol;
        return r;
    };

    std::vector<CompareRow> rows;
    rows.push_back(row("endurance_hours", kRefEnduranceHours, report.endurance_hours.value(),
                       kExactTolerance));
    rows.push_back(row("uploads_per_hour", kRefUploadsPerHour,
                       per_hour(static_cast<double>(report.uploads_attempted)),
                       kExactTolerance));
    rows.push_back(row("received_per_hour", kRefReceivedPerHour,
                       per_hour(static_cast<double>(report.uploads_received)),
                       kExactTolerance));
    rows.push_back(row("kb_per_hour", kRefKbPerHour, report.kb_per_hour, kVolumeTolerance));
    rows.push_back(row("mb_per_day", kRefMbPerDay, report.mb_per_day, kVolumeTolerance));
    return rows;
}

nlohmann::ordered_json compare_to_json(const std::vector<CompareRow>& rows) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        j.push_back({{"metric", r.metric},
                     {"reference", r.reference},
                     {"run", r.run},
                     {"rel_delta", r.rel_delta},
                     {"within_tolerance", r.within}});
    return j;
}

std::string render_compare_table(const std::vector<CompareRow>& rows) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-18s %12s %12s %10s  %s\n", "metric", "reference", "run",
                  "delta", "status");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-18s %12.4f %12.4f %9.2f%%  %s\n", r.metric.c_str(),
                      r.reference, r.run, r.rel_delta * 100.0, r.within ? "ok" : "FLAGGED");
        out << buf;
    }
    return out.str();
}

}  // namespace heartsim::sim
