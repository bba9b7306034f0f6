#include "core/simulation.hpp"

#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "core/modem.hpp"
#include "core/power.hpp"
#include "core/telemetry.hpp"

namespace heartsim::sim {

namespace {

// Issues AT exchanges for the device and keeps the serial transcript.
class ModemDriver {
  public:
    ModemDriver(modem::ModemSession& session, std::ostream* transcript)
        : session_(session), transcript_(transcript) {}

    std::vector<std::string> issue(const std::string& line, int64_t now_ms) {
        log_tx(line);
        const auto resp = session_.feed(line + "\r", now_ms);
        for (const auto& l : resp) log_rx(l);
        return resp;
    }

    void log_rx(const std::string& line) {
        if (transcript_) *transcript_ << "<< " << line << "\r\n";
    }

    void init(int64_t now_ms) {
        issue("AT", now_ms);
        issue("AT+CMGF=1", now_ms);
        issue("AT+CREG?", now_ms);
        issue("AT+CGNSPWR=1", now_ms);
        issue("AT+SAPBR=3,1,\"CONTYPE\",\"GPRS\"", now_ms);
        issue("AT+SAPBR=3,1,\"APN\",\"internet\"", now_ms);
        issue("AT+SAPBR=1,1", now_ms);
    }

    GeoFix query_gnss(int64_t now_ms) {
        const auto resp = issue("AT+CGNSINF", now_ms);
        GeoFix fix;
        fix.t_ms = now_ms;
        for (const auto& line : resp) {
            if (line.rfind("+CGNSINF: ", 0) != 0) continue;
            // +CGNSINF: <run>,<fixstatus>,<utc>,<lat>,<lon>
            std::istringstream in(line.substr(10));
            std::string field;
            std::vector<std::string> fields;
            while (std::getline(in, field, ',')) fields.push_back(field);
            if (fields.size() != 5) continue;
            fix.valid = fields[1] == "1";
            fix.lat = std::stod(fields[3]);
            fix.lon = std::stod(fields[4]);
        }
        return fix;
    }

    // Full CMGS exchange; returns true when the network delivered.
    bool send_sms(const std::string& to, const std::string& body, int64_t now_ms) {
        issue("AT+CMGS=\"" + to + "\"", now_ms);
        log_tx(body + "\x1a");
        const auto resp = session_.feed(body + "\x1a", now_ms);
        bool delivered = false;
        for (const auto& l : resp) {
            log_rx(l);
            if (l.rfind("+CMGS:", 0) == 0) delivered = true;
        }
        return delivered;
    }

    // INIT/PARA/ACTION/READ/TERM cycle; returns the +HTTPACTION status.
    int http_update(const std::string& path_and_query, int64_t now_ms) {
        issue("AT+HTTPINIT", now_ms);
        issue("AT+HTTPPARA=\"CID\",1", now_ms);
        issue("AT+HTTPPARA=\"URL\",\"http://" + std::string(kTelemetryHost) +
                  path_and_query + "\"",
              now_ms);
        int status = 0;
        for (const auto& l : issue("AT+HTTPACTION=0", now_ms)) {
            if (l.rfind("+HTTPACTION: ", 0) != 0) continue;
            std::istringstream in(l.substr(13));
            std::string method, code;
            std::getline(in, method, ',');
            std::getline(in, code, ',');
            status = std::stoi(code);
        }
        if (status == 200) issue("AT+HTTPREAD", now_ms);
        issue("AT+HTTPTERM", now_ms);
        return status;
    }

    static constexpr const char* kTelemetryHost = "telemetry.local";

  private:
    void log_tx(const std::string& line) {
        if (transcript_) *transcript_ << ">> " << line << "\r\n";
    }

    modem::ModemSession& session_;
    std::ostream* transcript_;
};

nlohmann::ordered_json effect_json(const device::Effect& effect) {
    using namespace device;
    nlohmann::ordered_json j;
    if (const auto* e = std::get_if<DisplayEvent>(&effect)) {
        j["t_ms"] = e->t_ms;
        j["type"] = "display";
        j["body"] = e->body;
    } else if (const auto* e = std::get_if<SendSms>(&effect)) {
        j["t_ms"] = e->t_ms;
        j["type"] = "send_sms";
        j["to"] = e->to;
        j["body"] = e->body;
    } else if (const auto* e = std::get_if<HttpUpdate>(&effect)) {
        j["t_ms"] = e->t_ms;
        j["type"] = "http_update";
        j["url"] = e->url;
        j["params"] = e->params;
    } else if (const auto* e = std::get_if<ConfigChanged>(&effect)) {
        j["t_ms"] = e->t_ms;
        j["type"] = "config_changed";
        j["body"] = e->body;
    } else if (const auto* e = std::get_if<AlertRaised>(&effect)) {
        j["t_ms"] = e->event.t_ms;
        j["type"] = "alert";
        nlohmann::ordered_json p;
        p["kind"] = to_string(e->event.kind);
        p["bpm"] = e->event.bpm;
        p["spo2_pct"] = e->event.spo2_pct;
        p["fix_valid"] = e->event.fix.valid;
        if (e->event.fix.valid) {
            p["lat"] = e->event.fix.lat;
            p["lon"] = e->event.fix.lon;
            p["url"] = e->event.url;
        }
        j["params"] = p;
    }
    return j;
}

}  // namespace

RunReport run_scenario(const Scenario& sc,
                       const std::optional<std::filesystem::path>& out_dir) {
    if (const auto errors = validate(sc); !errors.empty()) {
        std::string msg = "scenario validation failed:";
        for (const auto& e : errors) msg += "\n  - " + e;
        throw std::invalid_argument(msg);
    }

    std::ofstream effects_out, transcript_out, vitals_out;
    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        effects_out.open(*out_dir / "effects.jsonl", std::ios::binary);
        transcript_out.open(*out_dir / "transcript.txt", std::ios::binary);
        vitals_out.open(*out_dir / "vitals.csv", std::ios::binary);
        if (!effects_out || !transcript_out || !vitals_out)
            throw std::runtime_error("run: cannot write artifacts under " + out_dir->string());
        vitals_out << "t_ms,bpm,spo2\n";
    }

    // --- component wiring ----------------------------------------------
    telemetry::Store store;
    const int64_t channel_id = store.create_channel(sc.config.api_key, {"bpm", "SpO2"});

    modem::VirtualNetwork net(sc.seed, sc.sms_loss_prob, sc.http_loss_prob);
    net.band_mhz = sc.band_mhz;
    net.set_gnss_track([&sc](int64_t t) { return track_fix(sc.gnss, t); });

    modem::ModemSession session(net, sc.config.own_number);
    int64_t now = 0;
    session.set_http_backend([&store, &now](const std::string& path) -> modem::HttpResponse {
        const size_t q = path.find('?');
        const std::string route = path.substr(0, q == std::string::npos ? path.size() : q);
        if (route != "/update") return {404, "not found"};
        const auto params =
            telemetry::parse_query(q == std::string::npos ? "" : path.substr(q + 1));
        return {200, std::to_string(store.handle_update(params, now))};
    });

    device::Device dev(sc.config);
    power::BatteryState battery;
    battery.capacity_mah = sc.battery_capacity_mah;
    battery.draw_ma = sc.battery_draw_ma;
    power::DataLedger data;
    data.per_upload_bytes = sc.per_upload_bytes;
    vitals::SampleFifo fifo(16);

    ModemDriver driver(session, out_dir ? &transcript_out : nullptr);
    driver.init(0);

    RunReport report;
    report.scenario = sc.name;
    report.seed = sc.seed;
    report.duration_ms = sc.duration_ms;
    report.endurance_hours = power::endurance_hours(sc.battery_capacity_mah, sc.battery_draw_ma);

    const auto log_effect = [&](const nlohmann::ordered_json& j) {
        if (out_dir) effects_out << j.dump() << '\n';
    };

    // --- sample source ---------------------------------------------------
    const int64_t total_samples = sc.duration_ms * sc.sample_hz / 1000;
    int64_t emitted_samples = 0;
    size_t seg_idx = 0;
    std::unique_ptr<vitals::PpgSynthesizer> synth;
    const auto segment_end = [&](size_t i) {
        return i + 1 < sc.segments.size() ? sc.segments[i + 1].start_ms : sc.duration_ms;
    };
    const auto open_segment = [&](size_t i) {
        synth = std::make_unique<vitals::PpgSynthesizer>(
            sc.segments[i].profile, sc.sample_hz,
            derive_seed(sc.seed, "segment-" + std::to_string(i)), sc.segments[i].start_ms);
    };
    if (!sc.segments.empty()) open_segment(0);

    GeoFix last_fix;
    size_t btn_idx = 0, sms_idx = 0;
    int64_t uploads_attempted = 0;

    // --- main loop --------------------------------------------------------
    for (now = 0; now <= sc.duration_ms; now += sc.tick_ms) {
        while (synth && emitted_samples < total_samples && synth->next_t_ms() <= now) {
            if (synth->next_t_ms() >= segment_end(seg_idx)) {
                ++seg_idx;
                open_segment(seg_idx);
                continue;
            }
            fifo.push(synth->next());
            ++emitted_samples;
        }

        device::TickInputs inputs;
        inputs.samples = fifo.drain();

        if (now % 1000 == 0) {
            last_fix = driver.query_gnss(now);
            inputs.fix = last_fix;
        }

        while (btn_idx < sc.button_presses.size() && sc.button_presses[btn_idx] <= now) {
            ++inputs.button_presses;
            ++btn_idx;
        }

        while (sms_idx < sc.inbound_sms.size() && sc.inbound_sms[sms_idx].t_ms <= now) {
            const auto& m = sc.inbound_sms[sms_idx];
            ++sms_idx;
            const SmsMessage msg{m.from, sc.config.own_number, m.body, now};
            for (const auto& line : session.deliver_inbound(msg)) {
                driver.log_rx(line);
                // +CMTI: "SM",<index>
                const size_t comma = line.rfind(',');
                const size_t index = std::stoul(line.substr(comma + 1));
                if (const auto rr = session.read_message(index); rr.msg)
                    inputs.inbound_sms.push_back(*rr.msg);
            }
        }

        const auto effects = dev.tick(now, inputs);

        for (const auto& reading : dev.take_readings())
            if (reading.quality == vitals::Quality::Good && out_dir)
                vitals_out << reading.t_ms << ',' << reading.bpm << ',' << reading.spo2_pct
                           << '\n';

        for (const auto& effect : effects) {
            log_effect(effect_json(effect));
            if (const auto* sms = std::get_if<device::SendSms>(&effect)) {
                ++report.sms_sent;
                driver.send_sms(sms->to, sms->body, now);
            } else if (const auto* upd = std::get_if<device::HttpUpdate>(&effect)) {
                ++uploads_attempted;
                const int status = driver.http_update(upd->url, now);
                power::record_upload(data, now, status == 200);
            } else if (const auto* alert = std::get_if<device::AlertRaised>(&effect)) {
                report.alerts.push_back(alert->event);
            }
        }

        if (now > 0 && power::drain(battery, sc.tick_ms)) {
            report.depleted_at_ms = now;
            nlohmann::ordered_json j;
            j["t_ms"] = now;
            j["type"] = "battery_depleted";
            log_effect(j);
            break;  // the device halts at depletion
        }
    }

    // --- accounting -------------------------------------------------------
    const auto delivery =
        store.delivery_report(channel_id, 0, sc.duration_ms, uploads_attempted);
    report.uploads_attempted = uploads_attempted;
    report.uploads_received = delivery.received;
    report.success_ratio = delivery.ratio;
    report.sms_delivered = net.sms().delivered;
    report.sms_dropped = net.sms().dropped;
    report.http_dropped = net.http().dropped;
    report.bytes_sent = data.bytes_sent;

    const int64_t elapsed = report.depleted_at_ms.value_or(sc.duration_ms);
    if (elapsed > 0) {
        const auto projection = power::projection_report(data, elapsed);
        report.kb_per_hour = projection.kb_per_hour;
        report.mb_per_day = projection.mb_per_day;
    }

    if (out_dir) {
        std::ofstream feed_out(*out_dir / "feed.jsonl", std::ios::binary);
        store.write_snapshot(feed_out, channel_id);
        std::ofstream report_out(*out_dir / "report.json", std::ios::binary);
        report_out << report_to_json(report).dump(2) << '\n';
    }

    return report;
}

}  // namespace heartsim::sim
