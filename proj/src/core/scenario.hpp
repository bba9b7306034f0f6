#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core/device.hpp"
#include "core/types.hpp"
#include "core/vitals.hpp"

namespace heartsim::sim {

struct Segment {
    int64_t start_ms = 0;
    vitals::VitalsProfile profile;
};

struct InboundSms {
    int64_t t_ms = 0;
    std::string from;
    std::string body;
};

struct Waypoint {
    int64_t t_ms = 0;
    double lat = 0.0;
    double lon = 0.0;
};

// One self-contained run description. Everything that can vary between runs
// lives here; the engine itself has no knobs.
struct Scenario {
    std::string name;
    uint64_t seed = 1;
    int64_t duration_ms = 0;
    int sample_hz = 100;
    int64_t tick_ms = 100;

    device::DeviceConfig config;
    std::vector<Segment> segments;           // ordered, covering [0, duration)
    std::vector<int64_t> button_presses;
    std::vector<InboundSms> inbound_sms;
    std::vector<Waypoint> gnss;              // empty: no fix ever
    double sms_loss_prob = 0.0;
    double http_loss_prob = 0.0;
    int band_mhz = 900;

    int battery_capacity_mah = 1800;
    int battery_draw_ma = 200;
    int64_t per_upload_bytes = 1649;
};

// Throws std::runtime_error with a line-oriented message on YAML errors.
Scenario load_scenario_file(const std::filesystem::path& path);
Scenario load_scenario_string(const std::string& yaml, const std::string& name);

// Empty when the scenario is runnable.
std::vector<std::string> validate(const Scenario& sc);

// Piecewise-linear interpolation over the waypoints; invalid before any
// waypoint exists (empty list).
GeoFix track_fix(const std::vector<Waypoint>& track, int64_t t_ms);

}  // namespace heartsim::sim
