#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace heartsim::modem {

// ---------------------------------------------------------------------------
// AT grammar

// The minimum command set spanning the device's flows: SMS out, SMS in,
// GNSS read, HTTP update over GPRS.
enum class Verb {
    At,
    Cmgf,
    Cmgs,
    CregQuery,
    Cgnspwr,
    Cgnsinf,
    Sapbr,
    HttpInit,
    HttpPara,
    HttpAction,
    HttpRead,
    HttpTerm,
};

const char* verb_name(Verb v);  // "CMGS", "CREG?", ...

using AtArg = std::variant<int64_t, std::string>;  // bare integer / quoted string

struct AtCommand {
    Verb verb = Verb::At;
    std::vector<AtArg> args;

    friend bool operator==(const AtCommand&, const AtCommand&) = default;
};

struct ParseFailure {
    std::string line;  // offending input, for diagnostics
};

using ParseResult = std::variant<AtCommand, ParseFailure>;

// `line` excludes the CR terminator. Verbs are case-insensitive; quoted
// strings may not contain quotes.
ParseResult parse_at_line(std::string_view line);

// Canonical form: uppercase verb, integers bare, strings quoted.
std::string format_at(const AtCommand& cmd);

// ---------------------------------------------------------------------------
// Virtual network

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Bound by the harness to the telemetry service; receives path+query.
using HttpBackend = std::function<HttpResponse(const std::string& path_and_query)>;

struct DroppedRecord {
    int64_t t_ms = 0;
    std::string kind;  // "sms" | "http"
    std::string detail;
};

struct LegCounters {
    int64_t submitted = 0;
    int64_t delivered = 0;
    int64_t dropped = 0;
};

// Deterministic message fabric: per-class Bernoulli loss from seeded
// sub-streams, inboxes per number, dropped ledger. Lost traffic never
// reaches an inbox; delivered + dropped always equals submitted.
class VirtualNetwork {
  public:
    VirtualNetwork(uint64_t seed, double sms_loss_prob, double http_loss_prob);

    bool roll_sms_delivery();
    bool roll_http_delivery();

    void deliver_sms(const SmsMessage& msg);
    void drop_sms(const SmsMessage& msg);
    void note_http_delivered();
    void note_http_dropped(int64_t t_ms, const std::string& detail);

    const std::vector<SmsMessage>& inbox(const std::string& number) const;
    const LegCounters& sms() const { return sms_; }
    const LegCounters& http() const { return http_; }
    const std::vector<DroppedRecord>& dropped() const { return dropped_; }

    void set_gnss_track(std::function<GeoFix(int64_t)> track);
    GeoFix fix_at(int64_t t_ms) const;

    int band_mhz = 900;  // informational; one of 850/900/1800/1900

  private:
    std::mt19937 sms_rng_;
    std::mt19937 http_rng_;
    double sms_loss_prob_;
    double http_loss_prob_;
    LegCounters sms_;
    LegCounters http_;
    std::map<std::string, std::vector<SmsMessage>> inboxes_;
    std::vector<DroppedRecord> dropped_;
    std::function<GeoFix(int64_t)> gnss_track_;
};

// ---------------------------------------------------------------------------
// Session

enum class HttpState { Idle, Initialized, ParamsSet };

struct SessionState {
    bool text_mode = false;
    bool registered = true;  // registration is instant at simulation start
    bool gnss_on = false;
    bool bearer_open = false;
    HttpState http = HttpState::Idle;
    std::string http_url;
    std::optional<std::string> pending_sms_to;  // CMGS prompt phase
};

struct StoredSms {
    SmsMessage msg;
    bool read = false;
};

struct ReadResult {
    std::optional<SmsMessage> msg;
    bool already_read = false;
};

// Byte-level SIM808-style session. Commands end with CR; every completed
// command yields exactly one terminal OK/ERROR (the CMGS prompt phase is
// payload, terminated by 0x1A or cancelled by 0x1B). Responses come back as
// logical lines without CRLF framing.
class ModemSession {
  public:
    ModemSession(VirtualNetwork& network, std::string sim_number);

    void set_http_backend(HttpBackend backend);

    // Raw serial input; returns response lines in emission order.
    std::vector<std::string> feed(std::string_view bytes, int64_t now_ms);

    // One already-framed command line (no CR). Prompt payload must go
    // through feed/submit_sms_body.
    std::vector<std::string> execute_line(std::string_view line, int64_t now_ms);

    std::vector<std::string> execute(const AtCommand& cmd, int64_t now_ms);

    // Prompt-phase payload; `terminator` is 0x1A (send) or 0x1B (cancel).
    std::vector<std::string> submit_sms_body(std::string_view body, char terminator,
                                             int64_t now_ms);

    // Inbound delivery: stores the message and returns the unsolicited
    // `+CMTI: "SM",<n>` line, or nothing when the recipient differs.
    std::vector<std::string> deliver_inbound(const SmsMessage& msg);

    // Read-once retrieval by 1-based storage index.
    ReadResult read_message(size_t index);

    // Performs one HTTP attempt through the loss roll and the backend.
    HttpResponse http_bridge(const std::string& path_and_query, int64_t now_ms);

    const SessionState& state() const { return state_; }
    const std::string& sim_number() const { return sim_number_; }
    const std::vector<std::string>& diagnostics() const { return diagnostics_; }

    static std::string strip_url(const std::string& url);  // drops scheme://host

  private:
    static constexpr size_t kMaxLineBytes = 512;
    static constexpr size_t kMaxSmsBytes = 160;

    VirtualNetwork& network_;
    std::string sim_number_;
    SessionState state_;
    HttpBackend backend_;
    std::string rx_buffer_;
    std::string prompt_buffer_;
    size_t prompt_overflow_ = 0;
    int cmgs_ref_ = 0;
    std::optional<std::string> last_http_body_;
    std::vector<StoredSms> storage_;
    std::vector<std::string> diagnostics_;
};

}  // namespace heartsim::modem
