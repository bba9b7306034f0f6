#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/device.hpp"
#include "core/rational.hpp"

namespace heartsim::sim {

// Published reference figures the comparison table is measured against.
constexpr double kRefEnduranceHours = 9.0;
constexpr double kRefUploadsPerHour = 75.0;
constexpr double kRefReceivedPerHour = 73.0;
constexpr double kRefKbPerHour = 123.70;
constexpr double kRefMbPerDay = 2.9688;

// Exact-match rows tolerate only floating noise; the volume rows carry a
// 0.5% relative band.
constexpr double kExactTolerance = 1e-9;
constexpr double kVolumeTolerance = 0.005;

struct RunReport {
    std::string scenario;
    uint64_t seed = 0;
    int64_t duration_ms = 0;

    int64_t uploads_attempted = 0;
    int64_t uploads_received = 0;
    std::optional<Rational> success_ratio;  // nullopt: undefined (0 attempts)

    std::vector<device::AlertEvent> alerts;
    int64_t sms_sent = 0;
    int64_t sms_delivered = 0;
    int64_t sms_dropped = 0;
    int64_t http_dropped = 0;

    Rational endurance_hours{9, 1};
    std::optional<int64_t> depleted_at_ms;

    int64_t bytes_sent = 0;
    double kb_per_hour = 0.0;
    double mb_per_day = 0.0;
};

nlohmann::ordered_json report_to_json(const RunReport& report);
RunReport report_from_json(const nlohmann::json& j);  // throws on malformed input

struct CompareRow {
    std::string metric;
    double reference = 0.0;
    double run = 0.0;
    double rel_delta = 0.0;  // (run - reference) / reference
    bool within = false;
};

// Five rows: endurance hours, uploads/hour, received/hour, KB/hour, MB/day.
// Count rows are normalized per hour of simulated time.
std::vector<CompareRow> compare_to_reference(const RunReport& report);

nlohmann::ordered_json compare_to_json(const std::vector<CompareRow>& rows);
std::string render_compare_table(const std::vector<CompareRow>& rows);

}  // namespace heartsim::sim
