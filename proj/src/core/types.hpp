#pragma once

#include <cstdint>
#include <string>

namespace heartsim {

// Text message as carried by the virtual GSM network. Bodies are capped at
// 160 characters at the submission boundary and never contain the 0x1A
// payload terminator.
struct SmsMessage {
    std::string from;  // E.164
    std::string to;    // E.164
    std::string body;
    int64_t t_ms = 0;
};

// GNSS position sample. When valid is false the coordinates must not be
// used anywhere (URLs, alert bodies).
struct GeoFix {
    double lat = 0.0;
    double lon = 0.0;
    bool valid = false;
    int64_t t_ms = 0;
};

}  // namespace heartsim
