#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rational.hpp"

namespace heartsim::power {

// Aggregate draw with everything on: sensor, display, radio. No
// per-component breakdown is modeled.
constexpr int kDefaultCapacityMah = 1800;
constexpr int kDefaultDrawMa = 200;

// Radio bytes per upload attempt, calibrated once from the measured hourly
// volume divided by the hourly attempt count (123700 B / 75).
constexpr int64_t kPerUploadBytes = 1649;

// Charge is tracked in integer mA*ms so that splitting an interval into
// parts yields the identical consumed total, in any order.
struct BatteryState {
    int capacity_mah = kDefaultCapacityMah;
    int draw_ma = kDefaultDrawMa;
    int64_t consumed_ma_ms = 0;
    double voltage_min = 3.7;  // informational
    double voltage_max = 4.2;

    int64_t capacity_ma_ms() const { return static_cast<int64_t>(capacity_mah) * 3600000; }
    double consumed_mah() const { return static_cast<double>(consumed_ma_ms) / 3600000.0; }
    bool depleted() const { return consumed_ma_ms >= capacity_ma_ms(); }
};

// capacity/draw as an exact ratio. Throws std::invalid_argument when
// draw_ma <= 0 or capacity_mah < 0.
Rational endurance_hours(int64_t capacity_mah, int64_t draw_ma);

// Advances consumption by dt_ms; returns true on the call that reaches
// depletion. Consumption saturates at capacity.
bool drain(BatteryState& state, int64_t dt_ms);

struct DataEvent {
    int64_t t_ms = 0;
    int64_t bytes = 0;
    std::string kind;
};

struct DataLedger {
    int64_t per_upload_bytes = kPerUploadBytes;
    int64_t bytes_sent = 0;
    std::vector<DataEvent> events;
};

// Every attempt is charged, delivered or lost: the radio spends the bytes
// either way. `delivered` only tags the event kind.
void record_upload(DataLedger& ledger, int64_t t_ms, bool delivered);

// Decimal units throughout: 1 KB = 1000 B, 1 MB = 1000 KB. mb_per_day is
// computed as kb_per_hour*24/1000 so the identity holds exactly.
struct Projection {
    double kb_per_hour = 0.0;
    double mb_per_day = 0.0;
};

// Linear extrapolation of the observed bytes over window_ms. Throws
// std::invalid_argument when window_ms <= 0.
Projection projection_report(const DataLedger& ledger, int64_t window_ms);

}  // namespace heartsim::power
