#include "core/modem.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace heartsim::modem {

const char* verb_name(Verb v) {
    switch (v) {
        case Verb::At: return "";
        case Verb::Cmgf: return "CMGF";
        case Verb::Cmgs: return "CMGS";
        case Verb::CregQuery: return "CREG?";
        case Verb::Cgnspwr: return "CGNSPWR";
        case Verb::Cgnsinf: return "CGNSINF";
        case Verb::Sapbr: return "SAPBR";
        case Verb::HttpInit: return "HTTPINIT";
        case Verb::HttpPara: return "HTTPPARA";
        case Verb::HttpAction: return "HTTPACTION";
        case Verb::HttpRead: return "HTTPREAD";
        case Verb::HttpTerm: return "HTTPTERM";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parser

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return out;
}

// name (already uppercased) -> verb; bare_ok / takes_args describe the form
struct VerbSpec {
    const char* name;
    Verb verb;
    bool bare;       // legal with no '=' part
    bool takes_args; // legal with an '=' part
};

constexpr VerbSpec kVerbs[] = {
    {"CMGF", Verb::Cmgf, false, true},
    {"CMGS", Verb::Cmgs, false, true},
    {"CGNSPWR", Verb::Cgnspwr, false, true},
    {"CGNSINF", Verb::Cgnsinf, true, false},
    {"SAPBR", Verb::Sapbr, false, true},
    {"HTTPINIT", Verb::HttpInit, true, false},
    {"HTTPPARA", Verb::HttpPara, false, true},
    {"HTTPACTION", Verb::HttpAction, false, true},
    {"HTTPREAD", Verb::HttpRead, true, false},
    {"HTTPTERM", Verb::HttpTerm, true, false},
};

// Comma-separated bare integers and quoted strings.
bool parse_args(std::string_view s, std::vector<AtArg>& out) {
    size_t pos = 0;
    while (true) {
        if (pos >= s.size()) return false;  // dangling comma or empty args
        if (s[pos] == '"') {
            const size_t close = s.find('"', pos + 1);
            if (close == std::string_view::npos) return false;
            out.emplace_back(std::string(s.substr(pos + 1, close - pos - 1)));
            pos = close + 1;
        } else {
            size_t end = pos;
            if (end < s.size() && (s[end] == '-' || s[end] == '+')) ++end;
            const size_t digits_begin = end;
            while (end < s.size() && std::isdigit((unsigned char)s[end])) ++end;
            if (end == digits_begin || end - digits_begin > 18) return false;
            out.emplace_back(
                static_cast<int64_t>(std::stoll(std::string(s.substr(pos, end - pos)))));
            pos = end;
        }
        if (pos == s.size()) return true;
        if (s[pos] != ',') return false;
        ++pos;
    }
}

}  // namespace

ParseResult parse_at_line(std::string_view line) {
    const auto fail = [&] { return ParseFailure{std::string(line)}; };

    // tolerate stray CR/LF from already-framed input
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
        line.remove_suffix(1);

    const std::string text = upper(line);
    if (text.size() < 2 || text.compare(0, 2, "AT") != 0) return fail();
    if (text.size() == 2) return AtCommand{Verb::At, {}};
    if (text[2] != '+') return fail();

    const std::string rest = text.substr(3);
    if (rest == "CREG?") return AtCommand{Verb::CregQuery, {}};

    std::string name = rest;
    bool has_args = false;
    if (const size_t eq = rest.find('='); eq != std::string::npos) {
        name = rest.substr(0, eq);
        has_args = true;
    }

    for (const auto& spec : kVerbs) {
        if (name != spec.name) continue;
        if (has_args && !spec.takes_args) return fail();
        if (!has_args && !spec.bare) return fail();
        AtCommand cmd{spec.verb, {}};
        if (has_args) {
            // arguments keep their original (unuppercased) spelling
            if (!parse_args(line.substr(3 + name.size() + 1), cmd.args)) return fail();
        }
        return cmd;
    }
    return fail();
}

std::string format_at(const AtCommand& cmd) {
    if (cmd.verb == Verb::At) return "AT";
    std::string out = "AT+";
    out += verb_name(cmd.verb);
    if (!cmd.args.empty()) {
        out += '=';
        for (size_t i = 0; i < cmd.args.size(); ++i) {
            if (i > 0) out += ',';
            if (std::holds_alternative<int64_t>(cmd.args[i]))
                out += std::to_string(std::get<int64_t>(cmd.args[i]));
            else
                out += '"' + std::get<std::string>(cmd.args[i]) + '"';
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// VirtualNetwork

VirtualNetwork::VirtualNetwork(uint64_t seed, double sms_loss_prob, double http_loss_prob)
    : sms_rng_(make_rng(seed, "net-sms")),
      http_rng_(make_rng(seed, "net-http")),
      sms_loss_prob_(sms_loss_prob),
      http_loss_prob_(http_loss_prob) {}

bool VirtualNetwork::roll_sms_delivery() {
    ++sms_.submitted;
    return !(sms_loss_prob_ > 0.0 && roll(sms_rng_, sms_loss_prob_));
}

bool VirtualNetwork::roll_http_delivery() {
    ++http_.submitted;
    return !(http_loss_prob_ > 0.0 && roll(http_rng_, http_loss_prob_));
}

void VirtualNetwork::deliver_sms(const SmsMessage& msg) {
    ++sms_.delivered;
    inboxes_[msg.to].push_back(msg);
}

void VirtualNetwork::drop_sms(const SmsMessage& msg) {
    ++sms_.dropped;
    dropped_.push_back({msg.t_ms, "sms", msg.from + " -> " + msg.to + ": " + msg.body});
}

void VirtualNetwork::note_http_delivered() { ++http_.delivered; }

void VirtualNetwork::note_http_dropped(int64_t t_ms, const std::string& detail) {
    ++http_.dropped;
    dropped_.push_back({t_ms, "http", detail});
}

const std::vector<SmsMessage>& VirtualNetwork::inbox(const std::string& number) const {
    static const std::vector<SmsMessage> kEmpty;
    const auto it = inboxes_.find(number);
    return it == inboxes_.end() ? kEmpty : it->second;
}

void VirtualNetwork::set_gnss_track(std::function<GeoFix(int64_t)> track) {
    gnss_track_ = std::move(track);
}

GeoFix VirtualNetwork::fix_at(int64_t t_ms) const {
    if (!gnss_track_) return GeoFix{0.0, 0.0, false, t_ms};
    return gnss_track_(t_ms);
}

// ---------------------------------------------------------------------------
// ModemSession

ModemSession::ModemSession(VirtualNetwork& network, std::string sim_number)
    : network_(network), sim_number_(std::move(sim_number)) {}

void ModemSession::set_http_backend(HttpBackend backend) { backend_ = std::move(backend); }

std::string ModemSession::strip_url(const std::string& url) {
    const size_t scheme = url.find("://");
    if (scheme == std::string::npos) return url;
    const size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return "/";
    return url.substr(path);
}

std::vector<std::string> ModemSession::feed(std::string_view bytes, int64_t now_ms) {
    std::vector<std::string> lines;
    for (const char c : bytes) {
        if (state_.pending_sms_to) {
            if (c == '\x1a' || c == '\x1b') {
                std::string body = std::move(prompt_buffer_);
                prompt_buffer_.clear();
                auto resp = submit_sms_body(body, c, now_ms);
                lines.insert(lines.end(), resp.begin(), resp.end());
            } else if (prompt_buffer_.size() + prompt_overflow_ >= kMaxSmsBytes + 1) {
                ++prompt_overflow_;  // keep counting, stop storing
            } else {
                prompt_buffer_.push_back(c);
            }
            continue;
        }
        if (c == '\r') {
            std::string line = std::move(rx_buffer_);
            rx_buffer_.clear();
            if (line.empty()) continue;  // bare CR between commands
            auto resp = execute_line(line, now_ms);
            lines.insert(lines.end(), resp.begin(), resp.end());
        } else if (c == '\n') {
            // LF is framing noise in command mode
        } else if (rx_buffer_.size() < kMaxLineBytes) {
            rx_buffer_.push_back(c);
        }
        // bytes beyond kMaxLineBytes are discarded until the next CR
    }
    return lines;
}

std::vector<std::string> ModemSession::execute_line(std::string_view line, int64_t now_ms) {
    const auto parsed = parse_at_line(line);
    if (std::holds_alternative<ParseFailure>(parsed)) {
        diagnostics_.push_back("parse failure: " + std::get<ParseFailure>(parsed).line);
        return {"ERROR"};
    }
    return execute(std::get<AtCommand>(parsed), now_ms);
}

namespace {

std::optional<int64_t> int_arg(const AtCommand& cmd, size_t i) {
    if (i >= cmd.args.size()) return std::nullopt;
    if (!std::holds_alternative<int64_t>(cmd.args[i])) return std::nullopt;
    return std::get<int64_t>(cmd.args[i]);
}

std::optional<std::string> str_arg(const AtCommand& cmd, size_t i) {
    if (i >= cmd.args.size()) return std::nullopt;
    if (!std::holds_alternative<std::string>(cmd.args[i])) return std::nullopt;
    return std::get<std::string>(cmd.args[i]);
}

std::string format_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::vector<std::string> ModemSession::execute(const AtCommand& cmd, int64_t now_ms) {
    switch (cmd.verb) {
        case Verb::At:
            return {"OK"};

        case Verb::Cmgf: {
            const auto mode = int_arg(cmd, 0);
            if (cmd.args.size() != 1 || !mode || (*mode != 0 && *mode != 1)) return {"ERROR"};
            state_.text_mode = (*mode == 1);
            return {"OK"};
        }

        case Verb::CregQuery:
            return {std::string("+CREG: 0,") + (state_.registered ? "1" : "2"), "OK"};

        case Verb::Cgnspwr: {
            const auto on = int_arg(cmd, 0);
            if (cmd.args.size() != 1 || !on || (*on != 0 && *on != 1)) return {"ERROR"};
            state_.gnss_on = (*on == 1);
            return {"OK"};
        }

        case Verb::Cgnsinf: {
            const GeoFix fix = state_.gnss_on ? network_.fix_at(now_ms) : GeoFix{};
            const bool have_fix = state_.gnss_on && fix.valid;
            // 5 fields: <run>,<fixstatus>,<utc>,<lat>,<lon>
            std::string info = "+CGNSINF: ";
            info += state_.gnss_on ? "1" : "0";
            info += have_fix ? ",1" : ",0";
            info += "," + std::to_string(now_ms);
            info += "," + format_coord(have_fix ? fix.lat : 0.0);
            info += "," + format_coord(have_fix ? fix.lon : 0.0);
            return {info, "OK"};
        }

        case Verb::Cmgs: {
            const auto to = str_arg(cmd, 0);
            if (cmd.args.size() != 1 || !to) return {"ERROR"};
            if (!state_.text_mode || !state_.registered) return {"ERROR"};
            state_.pending_sms_to = *to;
            prompt_buffer_.clear();
            prompt_overflow_ = 0;
            return {"> "};
        }

        case Verb::Sapbr: {
            const auto op = int_arg(cmd, 0);
            const auto cid = int_arg(cmd, 1);
            if (!op || !cid || *cid != 1) return {"ERROR"};
            switch (*op) {
                case 3: {  // parameter set: SAPBR=3,1,"TAG","VALUE"
                    if (cmd.args.size() != 4 || !str_arg(cmd, 2) || !str_arg(cmd, 3))
                        return {"ERROR"};
                    return {"OK"};
                }
                case 1:  // open bearer
                    if (cmd.args.size() != 2 || state_.bearer_open) return {"ERROR"};
                    state_.bearer_open = true;
                    return {"OK"};
                case 0:  // close bearer
                    if (cmd.args.size() != 2 || !state_.bearer_open) return {"ERROR"};
                    state_.bearer_open = false;
                    return {"OK"};
                case 2:  // query
                    if (cmd.args.size() != 2) return {"ERROR"};
                    return {std::string("+SAPBR: 1,") + (state_.bearer_open ? "1" : "3") +
                                ",\"" + (state_.bearer_open ? "10.140.0.1" : "0.0.0.0") + "\"",
                            "OK"};
                default: return {"ERROR"};
            }
        }

        case Verb::HttpInit:
            if (state_.http != HttpState::Idle) return {"ERROR"};
            state_.http = HttpState::Initialized;
            return {"OK"};

        case Verb::HttpPara: {
            if (state_.http == HttpState::Idle) return {"ERROR"};
            const auto tag = str_arg(cmd, 0);
            const auto value = str_arg(cmd, 1);
            if (cmd.args.size() != 2 || !tag || !value) return {"ERROR"};
            const std::string utag = upper(*tag);
            if (utag == "URL") {
                state_.http_url = *value;
                state_.http = HttpState::ParamsSet;
                return {"OK"};
            }
            if (utag == "CID") return {"OK"};
            return {"ERROR"};
        }

        case Verb::HttpAction: {
            const auto method = int_arg(cmd, 0);
            if (cmd.args.size() != 1 || !method || (*method != 0 && *method != 1))
                return {"ERROR"};
            if (state_.http != HttpState::ParamsSet) return {"ERROR"};
            if (!state_.bearer_open) return {"ERROR"};
            const HttpResponse resp = http_bridge(strip_url(state_.http_url), now_ms);
            if (resp.status != 0)
                last_http_body_ = resp.body;
            else
                last_http_body_.reset();
            return {"OK", "+HTTPACTION: " + std::to_string(*method) + "," +
                              std::to_string(resp.status) + "," +
                              std::to_string(resp.body.size())};
        }

        case Verb::HttpRead:
            if (!last_http_body_) return {"ERROR"};
            return {"+HTTPREAD: " + std::to_string(last_http_body_->size()), *last_http_body_,
                    "OK"};

        case Verb::HttpTerm:
            if (state_.http == HttpState::Idle) return {"ERROR"};
            state_.http = HttpState::Idle;
            state_.http_url.clear();
            last_http_body_.reset();
            return {"OK"};
    }
    return {"ERROR"};
}

std::vector<std::string> ModemSession::submit_sms_body(std::string_view body, char terminator,
                                                       int64_t now_ms) {
    if (!state_.pending_sms_to) return {"ERROR"};
    const std::string to = *state_.pending_sms_to;
    state_.pending_sms_to.reset();
    const size_t total = body.size() + prompt_overflow_;
    prompt_overflow_ = 0;

    if (terminator == '\x1b') return {"OK"};  // cancelled, nothing sent
    if (total > kMaxSmsBytes) return {"+CMS ERROR: 305"};

    SmsMessage msg{sim_number_, to, std::string(body), now_ms};
    if (network_.roll_sms_delivery()) {
        network_.deliver_sms(msg);
        ++cmgs_ref_;
        return {"+CMGS: " + std::to_string(cmgs_ref_), "OK"};
    }
    network_.drop_sms(msg);
    return {"+CMS ERROR: 500"};
}

std::vector<std::string> ModemSession::deliver_inbound(const SmsMessage& msg) {
    if (msg.to != sim_number_) {
        diagnostics_.push_back("inbound sms for foreign number " + msg.to);
        return {};
    }
    storage_.push_back({msg, false});
    return {"+CMTI: \"SM\"," + std::to_string(storage_.size())};
}

ReadResult ModemSession::read_message(size_t index) {
    if (index == 0 || index > storage_.size()) return {};
    StoredSms& slot = storage_[index - 1];
    if (slot.read) return {std::nullopt, true};
    slot.read = true;
    return {slot.msg, false};
}

HttpResponse ModemSession::http_bridge(const std::string& path_and_query, int64_t now_ms) {
    if (network_.roll_http_delivery()) {
        if (backend_) {
            const HttpResponse resp = backend_(path_and_query);
            network_.note_http_delivered();
            return resp;
        }
        network_.note_http_dropped(now_ms, "no backend: " + path_and_query);
        return {0, ""};
    }
    network_.note_http_dropped(now_ms, path_and_query);
    return {0, ""};
}

}  // namespace heartsim::modem
