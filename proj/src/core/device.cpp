#include "core/device.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace heartsim::device {

const char* to_string(BpmClass c) {
    switch (c) {
        case BpmClass::Normal: return "Normal";
        case BpmClass::Bradycardia: return "Bradycardia";
        case BpmClass::Tachycardia: return "Tachycardia";
    }
    return "?";
}

const char* to_string(AlertKind k) {
    return k == AlertKind::Bradycardia ? "Bradycardia" : "Tachycardia";
}

BpmClass classify_bpm(int bpm, const BpmRange& range) {
    if (bpm < range.low) return BpmClass::Bradycardia;
    if (bpm > range.high) return BpmClass::Tachycardia;
    return BpmClass::Normal;
}

// ---------------------------------------------------------------------------
// Config validation

bool is_e164(const std::string& s) {
    if (s.size() < 9 || s.size() > 16) return false;  // '+' plus 8-15 digits
    if (s[0] != '+') return false;
    return std::all_of(s.begin() + 1, s.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

bool is_api_key(const std::string& s) {
    if (s.size() != 16) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isalnum(c) != 0; });
}

std::vector<std::string> validate_config(const DeviceConfig& cfg) {
    std::vector<std::string> errors;
    if (!is_e164(cfg.own_number)) errors.push_back("own_number is not E.164: " + cfg.own_number);
    if (!is_api_key(cfg.api_key)) errors.push_back("api_key must be 16 alphanumeric characters");
    if (cfg.contacts.size() > kMaxContacts) errors.push_back("more than 3 contacts");
    for (size_t i = 0; i < cfg.contacts.size(); ++i) {
        if (!is_e164(cfg.contacts[i]))
            errors.push_back("contact is not E.164: " + cfg.contacts[i]);
        for (size_t j = i + 1; j < cfg.contacts.size(); ++j)
            if (cfg.contacts[i] == cfg.contacts[j])
                errors.push_back("duplicate contact: " + cfg.contacts[i]);
    }
    if (cfg.nominal_bpm.low >= cfg.nominal_bpm.high)
        errors.push_back("nominal_bpm low must be below high");
    if (cfg.upload_interval_s <= 0) errors.push_back("upload_interval_s must be positive");
    if (cfg.config_window_s <= 0) errors.push_back("config_window_s must be positive");
    return errors;
}

// ---------------------------------------------------------------------------
// Builders

std::string format_maps_url(const GeoFix& fix) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "https://maps.google.com/?q=%.6f,%.6f", fix.lat, fix.lon);
    return buf;
}

std::string build_alert_sms(const vitals::VitalsReading& reading, const GeoFix& fix,
                            AlertKind kind) {
    std::string body = "ALERT ";
    body += to_string(kind);
    body += ": BPM=" + std::to_string(reading.bpm);
    body += " SpO2=" + std::to_string(reading.spo2_pct) + "%";
    body += " Location: ";
    body += fix.valid ? format_maps_url(fix) : "unavailable";
    return body;
}

HttpUpdate build_update_request(const vitals::VitalsReading& reading,
                                const std::string& api_key, int64_t t_ms) {
    HttpUpdate u;
    u.t_ms = t_ms;
    u.params = {{"api_key", api_key},
                {"field1", std::to_string(reading.bpm)},
                {"field2", std::to_string(reading.spo2_pct)}};
    u.url = "/update?api_key=" + api_key + "&field1=" + std::to_string(reading.bpm) +
            "&field2=" + std::to_string(reading.spo2_pct);
    return u;
}

// ---------------------------------------------------------------------------
// Alert latch

std::optional<AlertKind> alert_decision(DeviceState& state, int bpm, const BpmRange& range) {
    switch (classify_bpm(bpm, range)) {
        case BpmClass::Normal:
            state.latched.reset();
            return std::nullopt;
        case BpmClass::Bradycardia:
            if (state.latched == AlertKind::Bradycardia) return std::nullopt;
            state.latched = AlertKind::Bradycardia;
            return AlertKind::Bradycardia;
        case BpmClass::Tachycardia:
            if (state.latched == AlertKind::Tachycardia) return std::nullopt;
            state.latched = AlertKind::Tachycardia;
            return AlertKind::Tachycardia;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration SMS

namespace {

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> words;
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

}  // namespace

std::pair<DeviceConfig, std::string> handle_config_sms(const SmsMessage& msg,
                                                       const DeviceState& state,
                                                       int64_t now_ms,
                                                       const DeviceConfig& cfg) {
    const int64_t window_ms = static_cast<int64_t>(cfg.config_window_s) * 1000;
    if (state.mode != Mode::Configuring || now_ms - state.config_entered_ms > window_ms)
        return {cfg, "REJECTED: config window closed"};

    const auto words = split_words(msg.body);
    if (words.size() < 2 || words[0] != "CFG") return {cfg, "ERR: bad command"};

    DeviceConfig next = cfg;
    if (words[1] == "CONTACT" && words.size() == 4 && words[2] == "ADD") {
        if (!is_e164(words[3])) return {cfg, "ERR: bad command"};
        if (std::find(next.contacts.begin(), next.contacts.end(), words[3]) !=
            next.contacts.end())
            return {cfg, "ERR: bad command"};  // duplicates rejected
        if (next.contacts.size() >= kMaxContacts) return {cfg, "ERR: contact list full"};
        next.contacts.push_back(words[3]);
        return {next, "OK CONTACT ADD"};
    }
    if (words[1] == "CONTACT" && words.size() == 4 && words[2] == "DEL") {
        const auto it = std::find(next.contacts.begin(), next.contacts.end(), words[3]);
        if (it == next.contacts.end()) return {cfg, "ERR: bad command"};
        next.contacts.erase(it);
        return {next, "OK CONTACT DEL"};
    }
    if (words[1] == "APIKEY" && words.size() == 3) {
        if (!is_api_key(words[2])) return {cfg, "ERR: bad command"};
        next.api_key = words[2];
        return {next, "OK APIKEY"};
    }
    return {cfg, "ERR: bad command"};
}

// ---------------------------------------------------------------------------
// Device

Device::Device(DeviceConfig cfg, DeviceParams params)
    : config_(std::move(cfg)), params_(params) {}

std::vector<vitals::VitalsReading> Device::take_readings() {
    return std::exchange(new_readings_, {});
}

std::vector<std::string> Device::take_diagnostics() {
    return std::exchange(diagnostics_, {});
}

void Device::trim_history(int64_t now_ms) {
    const int64_t cutoff = now_ms - params_.window_ms;
    auto it = history_.begin();
    while (it != history_.end() && it->t_ms <= cutoff) ++it;
    history_.erase(history_.begin(), it);
}

std::optional<vitals::VitalsReading> Device::make_reading(int64_t now_ms) {
    if (history_.empty()) return std::nullopt;
    if (history_.back().t_ms - history_.front().t_ms < params_.min_history_ms)
        return std::nullopt;

    vitals::VitalsReading reading;
    reading.t_ms = now_ms;

    const auto beats = vitals::detect_beats(history_, params_.detector);
    if (beats.size() < 2) {
        reading.quality = vitals::Quality::NoContact;
        return reading;
    }
    const auto spo2 = vitals::compute_spo2(history_, params_.window_ms);
    if (!spo2) {
        reading.quality = vitals::Quality::NoContact;
        return reading;
    }
    const auto bpm = vitals::compute_bpm(beats, params_.window_ms);
    if (!bpm) {
        reading.quality = vitals::Quality::Unstable;
        return reading;
    }
    // Good promises bpm in [20,250] and spo2 in [70,100]
    if (*bpm < 20 || *bpm > 250 || *spo2 < 70) {
        reading.quality = vitals::Quality::Unstable;
        return reading;
    }
    reading.bpm = *bpm;
    reading.spo2_pct = *spo2;
    reading.quality = vitals::Quality::Good;
    return reading;
}

std::vector<Effect> Device::tick(int64_t now_ms, const TickInputs& inputs) {
    std::vector<Effect> effects;

    if (inputs.fix) last_fix_ = *inputs.fix;

    // Config window expiry is processed first: an SMS arriving after the
    // window has lapsed is already back in Monitoring mode.
    const int64_t window_ms = static_cast<int64_t>(config_.config_window_s) * 1000;
    if (state_.mode == Mode::Configuring && now_ms - state_.config_entered_ms > window_ms) {
        state_.mode = Mode::Monitoring;
        effects.push_back(DisplayEvent{now_ms, "CONFIG CLOSED"});
    }

    for (int i = 0; i < inputs.button_presses; ++i) {
        state_.mode = Mode::Configuring;
        state_.config_entered_ms = now_ms;
        std::string line = "CONFIG MODE " + std::to_string(config_.config_window_s) + "s";
        if (state_.last_reading)
            line += " BPM=" + std::to_string(state_.last_reading->bpm) +
                    " SpO2=" + std::to_string(state_.last_reading->spo2_pct) + "%";
        else
            line += " BPM=-- SpO2=--";
        effects.push_back(DisplayEvent{now_ms, line});
    }

    for (const auto& msg : inputs.inbound_sms) {
        if (state_.mode != Mode::Configuring) {
            diagnostics_.push_back("sms ignored outside config mode from " + msg.from);
            continue;
        }
        auto [next, ack] = handle_config_sms(msg, state_, now_ms, config_);
        if (!(next == config_)) {
            config_ = next;
            effects.push_back(ConfigChanged{now_ms, msg.body});
        }
        effects.push_back(SendSms{now_ms, msg.from, ack});
    }

    history_.insert(history_.end(), inputs.samples.begin(), inputs.samples.end());
    trim_history(now_ms);

    if (last_reading_tick_ms_ < 0 ||
        now_ms - last_reading_tick_ms_ >= params_.reading_period_ms) {
        if (const auto reading = make_reading(now_ms)) {
            last_reading_tick_ms_ = now_ms;
            new_readings_.push_back(*reading);
            if (reading->quality == vitals::Quality::Good) {
                state_.last_reading = *reading;
                if (const auto kind =
                        alert_decision(state_, reading->bpm, config_.nominal_bpm)) {
                    AlertEvent ev;
                    ev.t_ms = now_ms;
                    ev.kind = *kind;
                    ev.bpm = reading->bpm;
                    ev.spo2_pct = reading->spo2_pct;
                    ev.fix = last_fix_;
                    ev.url = last_fix_.valid ? format_maps_url(last_fix_) : "";
                    effects.push_back(AlertRaised{ev});
                    const std::string body = build_alert_sms(*reading, last_fix_, *kind);
                    for (const auto& contact : config_.contacts)
                        effects.push_back(SendSms{now_ms, contact, body});
                }
            }
        }
    }

    if (state_.last_reading &&
        now_ms - state_.last_upload_ms >=
            static_cast<int64_t>(config_.upload_interval_s) * 1000) {
        effects.push_back(build_update_request(*state_.last_reading, config_.api_key, now_ms));
        state_.last_upload_ms = now_ms;
    }

    return effects;
}

}  // namespace heartsim::device
