#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "core/types.hpp"
#include "core/vitals.hpp"

namespace heartsim::device {

// ---------------------------------------------------------------------------
// Classification

struct BpmRange {
    int low = 60;
    int high = 100;

    friend bool operator==(const BpmRange&, const BpmRange&) = default;
};

enum class BpmClass { Normal, Bradycardia, Tachycardia };
enum class AlertKind { Bradycardia, Tachycardia };

const char* to_string(BpmClass c);
const char* to_string(AlertKind k);

// Boundaries are inclusive: 60 and 100 classify Normal.
BpmClass classify_bpm(int bpm, const BpmRange& range);

// ---------------------------------------------------------------------------
// Configuration

constexpr size_t kMaxContacts = 3;
constexpr int kDefaultUploadIntervalS = 48;
constexpr int kDefaultConfigWindowS = 80;

struct DeviceConfig {
    std::string own_number;
    std::vector<std::string> contacts;  // E.164, at most kMaxContacts
    std::string api_key;                // 16 alphanumeric characters
    BpmRange nominal_bpm;
    int upload_interval_s = kDefaultUploadIntervalS;
    int config_window_s = kDefaultConfigWindowS;

    friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

bool is_e164(const std::string& s);    // leading '+', 8-15 digits
bool is_api_key(const std::string& s);
std::vector<std::string> validate_config(const DeviceConfig& cfg);

// ---------------------------------------------------------------------------
// Effects

struct AlertEvent {
    int64_t t_ms = 0;
    AlertKind kind = AlertKind::Bradycardia;
    int bpm = 0;
    int spo2_pct = 0;
    GeoFix fix;
    std::string url;  // empty when fix is invalid
};

struct DisplayEvent {
    int64_t t_ms = 0;
    std::string body;
};

struct SendSms {
    int64_t t_ms = 0;
    std::string to;
    std::string body;
};

struct HttpUpdate {
    int64_t t_ms = 0;
    std::string url;  // path + query
    std::map<std::string, std::string> params;
};

struct ConfigChanged {
    int64_t t_ms = 0;
    std::string body;  // the accepted command
};

struct AlertRaised {
    AlertEvent event;
};

using Effect = std::variant<DisplayEvent, SendSms, HttpUpdate, ConfigChanged, AlertRaised>;

// ---------------------------------------------------------------------------
// Pure builders

// `https://maps.google.com/?q=<lat>,<lon>` with fixed 6-decimal coordinates.
std::string format_maps_url(const GeoFix& fix);

// `ALERT <kind>: BPM=<n> SpO2=<n>% Location: <url|unavailable>`; always
// fits a single 160-character SMS.
std::string build_alert_sms(const vitals::VitalsReading& reading, const GeoFix& fix,
                            AlertKind kind);

HttpUpdate build_update_request(const vitals::VitalsReading& reading,
                                const std::string& api_key, int64_t t_ms);

// ---------------------------------------------------------------------------
// State machine

enum class Mode { Monitoring, Configuring };

struct DeviceState {
    Mode mode = Mode::Monitoring;
    int64_t config_entered_ms = 0;  // meaningful only in Configuring
    int64_t last_upload_ms = 0;
    std::optional<vitals::VitalsReading> last_reading;  // last Good reading
    std::optional<AlertKind> latched;                   // armed when empty
};

// One alert per excursion: latches on fire, re-arms on a Normal reading,
// re-fires when the abnormal kind changes without recovery in between.
std::optional<AlertKind> alert_decision(DeviceState& state, int bpm, const BpmRange& range);

// Applies a `CFG ...` command. Accepted only while Configuring and within
// config_window_s of entering; otherwise the config is unchanged and the
// ack explains why. Grammar:
//   CFG CONTACT ADD <e164> | CFG CONTACT DEL <e164> | CFG APIKEY <key>
std::pair<DeviceConfig, std::string> handle_config_sms(const SmsMessage& msg,
                                                       const DeviceState& state,
                                                       int64_t now_ms,
                                                       const DeviceConfig& cfg);

struct TickInputs {
    std::vector<vitals::PpgSample> samples;
    int button_presses = 0;
    std::vector<SmsMessage> inbound_sms;
    std::optional<GeoFix> fix;
};

struct DeviceParams {
    int64_t reading_period_ms = 1000;
    int64_t window_ms = 10000;       // trailing analysis window
    int64_t min_history_ms = 5000;   // no readings until this much signal
    vitals::BeatDetectorParams detector;
};

class Device {
  public:
    explicit Device(DeviceConfig cfg, DeviceParams params = {});

    // The only mutator; call with non-decreasing now_ms.
    std::vector<Effect> tick(int64_t now_ms, const TickInputs& inputs);

    const DeviceConfig& config() const { return config_; }
    const DeviceState& state() const { return state_; }

    // Readings produced since the last call (newest last).
    std::vector<vitals::VitalsReading> take_readings();
    // Ignored-input diagnostics since the last call.
    std::vector<std::string> take_diagnostics();

  private:
    std::optional<vitals::VitalsReading> make_reading(int64_t now_ms);
    void trim_history(int64_t now_ms);

    DeviceConfig config_;
    DeviceParams params_;
    DeviceState state_;
    GeoFix last_fix_;
    std::vector<vitals::PpgSample> history_;
    std::vector<vitals::VitalsReading> new_readings_;
    std::vector<std::string> diagnostics_;
    int64_t last_reading_tick_ms_ = -1;
};

}  // namespace heartsim::device
