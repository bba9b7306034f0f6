#include "core/scenario.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <yaml-cpp/yaml.h>

namespace heartsim::sim {

namespace {

// Loss probabilities accept either a scalar or an exact "num/den" fraction.
double parse_prob(const YAML::Node& node) {
    if (!node) return 0.0;
    const std::string s = node.as<std::string>();
    const size_t slash = s.find('/');
    if (slash != std::string::npos) {
        const double num = std::stod(s.substr(0, slash));
        const double den = std::stod(s.substr(slash + 1));
        if (den == 0.0) throw std::runtime_error("scenario: zero denominator in probability");
        return num / den;
    }
    return node.as<double>();
}

vitals::VitalsProfile parse_profile(const YAML::Node& node) {
    vitals::VitalsProfile p;
    if (node["target_bpm"]) p.target_bpm = node["target_bpm"].as<double>();
    if (node["spo2_ratio_r"]) p.spo2_ratio_r = node["spo2_ratio_r"].as<double>();
    if (node["dc_red"]) p.dc_red = node["dc_red"].as<int>();
    if (node["dc_ir"]) p.dc_ir = node["dc_ir"].as<int>();
    if (node["ac_amplitude"]) p.ac_amplitude = node["ac_amplitude"].as<int>();
    if (node["noise_amplitude"]) p.noise_amplitude = node["noise_amplitude"].as<int>();
    if (node["contact"]) p.contact = node["contact"].as<bool>();
    return p;
}

Scenario parse_scenario(const YAML::Node& root, const std::string& name) {
    Scenario sc;
    sc.name = root["name"] ? root["name"].as<std::string>() : name;
    if (root["seed"]) sc.seed = root["seed"].as<uint64_t>();
    if (root["duration_ms"]) sc.duration_ms = root["duration_ms"].as<int64_t>();
    if (root["sample_hz"]) sc.sample_hz = root["sample_hz"].as<int>();
    if (root["tick_ms"]) sc.tick_ms = root["tick_ms"].as<int64_t>();

    if (const auto cfg = root["config"]) {
        if (cfg["own_number"]) sc.config.own_number = cfg["own_number"].as<std::string>();
        if (cfg["api_key"]) sc.config.api_key = cfg["api_key"].as<std::string>();
        if (cfg["contacts"])
            for (const auto& c : cfg["contacts"])
                sc.config.contacts.push_back(c.as<std::string>());
        if (cfg["nominal_bpm"]) {
            if (!cfg["nominal_bpm"].IsSequence() || cfg["nominal_bpm"].size() != 2)
                throw std::runtime_error("scenario: nominal_bpm must be [low, high]");
            sc.config.nominal_bpm.low = cfg["nominal_bpm"][0].as<int>();
            sc.config.nominal_bpm.high = cfg["nominal_bpm"][1].as<int>();
        }
        if (cfg["upload_interval_s"])
            sc.config.upload_interval_s = cfg["upload_interval_s"].as<int>();
        if (cfg["config_window_s"])
            sc.config.config_window_s = cfg["config_window_s"].as<int>();
    }

    if (const auto segs = root["segments"])
        for (const auto& s : segs) {
            Segment seg;
            seg.start_ms = s["start_ms"] ? s["start_ms"].as<int64_t>() : 0;
            seg.profile = parse_profile(s);
            sc.segments.push_back(seg);
        }

    if (const auto presses = root["button_presses"])
        for (const auto& t : presses) sc.button_presses.push_back(t.as<int64_t>());

    if (const auto sms = root["inbound_sms"])
        for (const auto& m : sms)
            sc.inbound_sms.push_back({m["t_ms"].as<int64_t>(), m["from"].as<std::string>(),
                                      m["body"].as<std::string>()});

    if (const auto gnss = root["gnss"])
        for (const auto& w : gnss)
            sc.gnss.push_back({w["t_ms"] ? w["t_ms"].as<int64_t>() : 0,
                               w["lat"].as<double>(), w["lon"].as<double>()});

    if (const auto net = root["network"]) {
        sc.sms_loss_prob = parse_prob(net["sms_loss_prob"]);
        sc.http_loss_prob = parse_prob(net["http_loss_prob"]);
        if (net["band_mhz"]) sc.band_mhz = net["band_mhz"].as<int>();
    }

    if (const auto bat = root["battery"]) {
        if (bat["capacity_mah"]) sc.battery_capacity_mah = bat["capacity_mah"].as<int>();
        if (bat["draw_ma"]) sc.battery_draw_ma = bat["draw_ma"].as<int>();
    }
    if (const auto data = root["data"])
        if (data["per_upload_bytes"])
            sc.per_upload_bytes = data["per_upload_bytes"].as<int64_t>();

    return sc;
}

}  // namespace

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario_string(buf.str(), path.stem().string());
}

Scenario load_scenario_string(const std::string& yaml, const std::string& name) {
    try {
        return parse_scenario(YAML::Load(yaml), name);
    } catch (const YAML::Exception& e) {
        throw std::runtime_error("scenario: " + std::string(e.what()));
    }
}

std::vector<std::string> validate(const Scenario& sc) {
    std::vector<std::string> errors;

    if (sc.duration_ms < 0) errors.push_back("duration_ms must be non-negative");
    if (sc.sample_hz < 25) errors.push_back("sample_hz must be >= 25");
    if (sc.tick_ms <= 0) errors.push_back("tick_ms must be positive");
    if (sc.seed == 0) errors.push_back("seed must be nonzero");

    for (const auto& e : device::validate_config(sc.config)) errors.push_back(e);

    if (sc.duration_ms > 0) {
        if (sc.segments.empty()) {
            errors.push_back("segments must cover [0, duration)");
        } else {
            if (sc.segments.front().start_ms != 0)
                errors.push_back("first segment must start at 0");
            for (size_t i = 1; i < sc.segments.size(); ++i)
                if (sc.segments[i].start_ms <= sc.segments[i - 1].start_ms)
                    errors.push_back("segment starts must be strictly increasing");
            const int64_t sample_period = 1000 / sc.sample_hz;
            for (const auto& seg : sc.segments) {
                if (seg.start_ms >= sc.duration_ms)
                    errors.push_back("segment starts beyond duration");
                if (sample_period > 0 && seg.start_ms % sample_period != 0)
                    errors.push_back("segment start must align to the sample period");
                if (auto err = vitals::validate_profile(seg.profile))
                    errors.push_back("segment profile: " + *err);
                // the full profile invariant: headroom for pulse + noise
                const auto& p = seg.profile;
                const double ac_red = p.spo2_ratio_r * p.ac_amplitude *
                                      (static_cast<double>(p.dc_red) / p.dc_ir);
                if (p.dc_ir + p.ac_amplitude + p.noise_amplitude > vitals::kAdcMax ||
                    p.dc_red + ac_red + p.noise_amplitude > vitals::kAdcMax ||
                    p.dc_ir - p.noise_amplitude < 0 || p.dc_red - p.noise_amplitude < 0)
                    errors.push_back("segment profile exceeds the 16-bit ADC range");
            }
        }
    }

    for (const int64_t t : sc.button_presses)
        if (t < 0 || t >= std::max<int64_t>(sc.duration_ms, 1))
            errors.push_back("button press outside [0, duration)");
    for (const auto& m : sc.inbound_sms) {
        if (m.t_ms < 0 || m.t_ms >= std::max<int64_t>(sc.duration_ms, 1))
            errors.push_back("inbound sms outside [0, duration)");
        if (!device::is_e164(m.from)) errors.push_back("inbound sms sender is not E.164");
        if (m.body.size() > 160) errors.push_back("inbound sms body above 160 characters");
    }
    for (size_t i = 1; i < sc.gnss.size(); ++i)
        if (sc.gnss[i].t_ms <= sc.gnss[i - 1].t_ms)
            errors.push_back("gnss waypoints must be strictly increasing in time");
    for (const auto& w : sc.gnss)
        if (w.lat < -90.0 || w.lat > 90.0 || w.lon < -180.0 || w.lon > 180.0)
            errors.push_back("gnss waypoint out of range");

    if (sc.sms_loss_prob < 0.0 || sc.sms_loss_prob > 1.0)
        errors.push_back("sms_loss_prob must be in [0, 1]");
    if (sc.http_loss_prob < 0.0 || sc.http_loss_prob > 1.0)
        errors.push_back("http_loss_prob must be in [0, 1]");
    if (sc.band_mhz != 850 && sc.band_mhz != 900 && sc.band_mhz != 1800 && sc.band_mhz != 1900)
        errors.push_back("band_mhz must be one of 850, 900, 1800, 1900");

    if (sc.battery_capacity_mah <= 0) errors.push_back("battery capacity must be positive");
    if (sc.battery_draw_ma <= 0) errors.push_back("battery draw must be positive");
    if (sc.per_upload_bytes <= 0) errors.push_back("per_upload_bytes must be positive");

    return errors;
}

GeoFix track_fix(const std::vector<Waypoint>& track, int64_t t_ms) {
    if (track.empty()) return GeoFix{0.0, 0.0, false, t_ms};
    if (t_ms <= track.front().t_ms)
        return GeoFix{track.front().lat, track.front().lon, true, t_ms};
    if (t_ms >= track.back().t_ms)
        return GeoFix{track.back().lat, track.back().lon, true, t_ms};
    for (size_t i = 1; i < track.size(); ++i) {
        if (t_ms > track[i].t_ms) continue;
        const auto& a = track[i - 1];
        const auto& b = track[i];
        const double f = static_cast<double>(t_ms - a.t_ms) /
                         static_cast<double>(b.t_ms - a.t_ms);
        return GeoFix{a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon), true, t_ms};
    }
    return GeoFix{track.back().lat, track.back().lon, true, t_ms};
}

}  // namespace heartsim::sim
