#include "core/power.hpp"

#include <stdexcept>

namespace heartsim::power {

Rational endurance_hours(int64_t capacity_mah, int64_t draw_ma) {
    if (draw_ma <= 0) throw std::invalid_argument("endurance_hours: draw_ma must be positive");
    if (capacity_mah < 0) throw std::invalid_argument("endurance_hours: negative capacity");
    return Rational::of(capacity_mah, draw_ma);
}

bool drain(BatteryState& state, int64_t dt_ms) {
    if (dt_ms < 0) throw std::invalid_argument("drain: negative dt_ms");
    if (state.depleted()) return false;
    state.consumed_ma_ms += static_cast<int64_t>(state.draw_ma) * dt_ms;
    if (state.consumed_ma_ms >= state.capacity_ma_ms()) {
        state.consumed_ma_ms = state.capacity_ma_ms();
        return true;
    }
    return false;
}

void record_upload(DataLedger& ledger, int64_t t_ms, bool delivered) {
    ledger.bytes_sent += ledger.per_upload_bytes;
    ledger.events.push_back(
        {t_ms, ledger.per_upload_bytes, delivered ? "upload" : "upload_lost"});
}

Projection projection_report(const DataLedger& ledger, int64_t window_ms) {
    if (window_ms <= 0) throw std::invalid_argument("projection_report: window_ms must be positive");
    Projection p;
    p.kb_per_hour = static_cast<double>(ledger.bytes_sent) / 1000.0 *
                    (3600000.0 / static_cast<double>(window_ms));
    p.mb_per_day = p.kb_per_hour * 24.0 / 1000.0;
    return p;
}

}  // namespace heartsim::power
