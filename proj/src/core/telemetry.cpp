#include "core/telemetry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace heartsim::telemetry {

std::optional<BucketUnit> bucket_unit_from(const std::string& name) {
    if (name == "minutes") return BucketUnit::Minutes;
    if (name == "hours") return BucketUnit::Hours;
    if (name == "days") return BucketUnit::Days;
    return std::nullopt;
}

std::optional<Statistic> statistic_from(const std::string& name) {
    if (name == "average") return Statistic::Average;
    if (name == "min") return Statistic::Min;
    if (name == "max") return Statistic::Max;
    if (name == "last") return Statistic::Last;
    return std::nullopt;
}

const char* to_string(BucketUnit u) {
    switch (u) {
        case BucketUnit::Minutes: return "minutes";
        case BucketUnit::Hours: return "hours";
        case BucketUnit::Days: return "days";
    }
    return "?";
}

const char* to_string(Statistic s) {
    switch (s) {
        case Statistic::Average: return "average";
        case Statistic::Min: return "min";
        case Statistic::Max: return "max";
        case Statistic::Last: return "last";
    }
    return "?";
}

int64_t bucket_unit_ms(BucketUnit u) {
    switch (u) {
        case BucketUnit::Minutes: return 60'000;
        case BucketUnit::Hours: return 3'600'000;
        case BucketUnit::Days: return 86'400'000;
    }
    return 0;
}

// "72" and "72.5" pass, "72x" does not.
std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int64_t> parse_int(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return static_cast<int64_t>(v);
}

// ---------------------------------------------------------------------------
// Store

int64_t Store::create_channel(const std::string& write_api_key,
                              const std::vector<std::string>& field_names) {
    std::lock_guard lock(mu_);
    Channel ch;
    ch.id = static_cast<int64_t>(channels_.size()) + 1;
    ch.write_api_key = write_api_key;
    ch.field_names[0] = "bpm";
    ch.field_names[1] = "SpO2";
    for (size_t i = 0; i < field_names.size() && i < kMaxFields; ++i)
        ch.field_names[i] = field_names[i];
    channels_.push_back(std::move(ch));
    return channels_.back().id;
}

const Channel* Store::find_locked(int64_t id) const {
    for (const auto& ch : channels_)
        if (ch.id == id) return &ch;
    return nullptr;
}

Channel* Store::find_by_key_locked(const std::string& key) {
    for (auto& ch : channels_)
        if (ch.write_api_key == key) return &ch;
    return nullptr;
}

int64_t Store::handle_update(const std::map<std::string, std::string>& params, int64_t now_ms) {
    std::lock_guard lock(mu_);
    const auto key_it = params.find("api_key");
    if (key_it == params.end()) return 0;
    Channel* ch = find_by_key_locked(key_it->second);
    if (ch == nullptr) return 0;

    FeedEntry entry;
    entry.created_at_ms = now_ms;
    bool any_field = false;
    for (size_t i = 0; i < kMaxFields; ++i) {
        const auto it = params.find("field" + std::to_string(i + 1));
        if (it == params.end()) continue;
        const auto v = parse_number(it->second);
        if (!v) return 0;  // malformed value: store nothing
        entry.fields[i] = *v;
        any_field = true;
    }
    if (!any_field) return 0;

    if (ch->last_update_ms >= 0 && now_ms - ch->last_update_ms < kRateLimitMs) return 0;
    if (!ch->entries.empty() && now_ms < ch->entries.back().created_at_ms) return 0;

    entry.entry_id = static_cast<int64_t>(ch->entries.size()) + 1;
    ch->entries.push_back(std::move(entry));
    ch->last_update_ms = now_ms;
    return ch->entries.back().entry_id;
}

bool Store::has_channel(int64_t id) const {
    std::lock_guard lock(mu_);
    return find_locked(id) != nullptr;
}

std::optional<Channel> Store::channel(int64_t id) const {
    std::lock_guard lock(mu_);
    const Channel* ch = find_locked(id);
    if (ch == nullptr) return std::nullopt;
    return *ch;
}

std::optional<std::vector<FeedEntry>> Store::get_feed(int64_t channel_id,
                                                      const FeedQuery& q) const {
    std::lock_guard lock(mu_);
    const Channel* ch = find_locked(channel_id);
    if (ch == nullptr) return std::nullopt;

    std::vector<FeedEntry> out;
    for (const auto& e : ch->entries) {
        if (q.from_ms && e.created_at_ms < *q.from_ms) continue;
        if (q.to_ms && e.created_at_ms > *q.to_ms) continue;
        out.push_back(e);
    }
    if (q.results && static_cast<int64_t>(out.size()) > *q.results)
        out.erase(out.begin(), out.end() - *q.results);
    return out;
}

std::optional<std::vector<AggregateBucket>> Store::aggregate(int64_t channel_id,
                                                             const AggregateQuery& q) const {
    if (q.count <= 0) throw std::invalid_argument("aggregate: bucket count must be positive");
    if (q.field < 1 || q.field > static_cast<int>(kMaxFields))
        throw std::invalid_argument("aggregate: unknown field index");
    if (q.from_ms >= q.to_ms) throw std::invalid_argument("aggregate: empty range");
    const int64_t span = q.span_ms();
    if (q.from_ms % span != 0 || (q.to_ms - q.from_ms) % span != 0)
        throw std::invalid_argument("aggregate: range must cover whole buckets");

    std::lock_guard lock(mu_);
    const Channel* ch = find_locked(channel_id);
    if (ch == nullptr) return std::nullopt;

    std::vector<AggregateBucket> out;
    const size_t fi = static_cast<size_t>(q.field - 1);

    // Entries are ordered by created_at, so one forward scan covers all
    // buckets. Integer-valued fields accumulate in int64 so averages are
    // exact for integer data.
    size_t i = 0;
    while (i < ch->entries.size() && ch->entries[i].created_at_ms < q.from_ms) ++i;
    for (int64_t start = q.from_ms; start < q.to_ms; start += span) {
        const int64_t end = start + span;
        int64_t isum = 0;
        double dsum = 0.0;
        bool all_int = true;
        double vmin = std::numeric_limits<double>::infinity();
        double vmax = -std::numeric_limits<double>::infinity();
        double last = 0.0;
        int64_t n = 0;
        while (i < ch->entries.size() && ch->entries[i].created_at_ms < end) {
            const auto& f = ch->entries[i].fields[fi];
            ++i;
            if (!f) continue;
            const double v = *f;
            if (all_int && v == std::floor(v) && std::abs(v) < 9.0e15)
                isum += static_cast<int64_t>(v);
            else
                all_int = false;
            dsum += v;
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
            last = v;
            ++n;
        }
        if (n == 0) continue;  // empty buckets are omitted
        double value = 0.0;
        switch (q.stat) {
            case Statistic::Average:
                value = all_int ? static_cast<double>(isum) / static_cast<double>(n)
                                : dsum / static_cast<double>(n);
                break;
            case Statistic::Min: value = vmin; break;
            case Statistic::Max: value = vmax; break;
            case Statistic::Last: value = last; break;
        }
        out.push_back({start, value});
    }
    return out;
}

DeliveryReport Store::delivery_report(int64_t channel_id, int64_t from_ms, int64_t to_ms,
                                      int64_t attempted) const {
    DeliveryReport rep;
    rep.attempted = attempted;
    const auto feed = get_feed(channel_id, FeedQuery{std::nullopt, from_ms, to_ms});
    rep.received = feed ? static_cast<int64_t>(feed->size()) : 0;
    if (attempted > 0) rep.ratio = Rational::of(rep.received, attempted);
    return rep;
}

int64_t Store::entry_count(int64_t channel_id) const {
    std::lock_guard lock(mu_);
    const Channel* ch = find_locked(channel_id);
    return ch ? static_cast<int64_t>(ch->entries.size()) : 0;
}

// ---------------------------------------------------------------------------
// Snapshot

namespace {

nlohmann::ordered_json entry_to_json(const FeedEntry& e) {
    nlohmann::ordered_json j;
    j["entry_id"] = e.entry_id;
    j["created_at"] = e.created_at_ms;
    for (size_t i = 0; i < kMaxFields; ++i)
        if (e.fields[i]) {
            const double v = *e.fields[i];
            // integral values render without a fraction, mirroring the
            // string-typed fields of the public feed format
            if (v == std::floor(v) && std::abs(v) < 9.0e15)
                j["field" + std::to_string(i + 1)] = std::to_string(static_cast<int64_t>(v));
            else
                j["field" + std::to_string(i + 1)] = std::to_string(v);
        }
    return j;
}

}  // namespace

void Store::write_snapshot(std::ostream& out, int64_t channel_id) const {
    std::lock_guard lock(mu_);
    const Channel* ch = find_locked(channel_id);
    if (ch == nullptr) return;
    for (const auto& e : ch->entries) out << entry_to_json(e).dump() << '\n';
}

void Store::load_snapshot(std::istream& in, int64_t channel_id) {
    std::lock_guard lock(mu_);
    Channel* ch = nullptr;
    for (auto& c : channels_)
        if (c.id == channel_id) ch = &c;
    if (ch == nullptr) throw std::invalid_argument("load_snapshot: unknown channel");

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        FeedEntry e;
        e.entry_id = j.at("entry_id").get<int64_t>();
        e.created_at_ms = j.at("created_at").get<int64_t>();
        for (size_t i = 0; i < kMaxFields; ++i) {
            const std::string name = "field" + std::to_string(i + 1);
            if (!j.contains(name)) continue;
            const auto v = parse_number(j.at(name).get<std::string>());
            if (!v) throw std::runtime_error("snapshot: bad field value");
            e.fields[i] = *v;
        }
        if (e.entry_id != static_cast<int64_t>(ch->entries.size()) + 1)
            throw std::runtime_error("snapshot: entry ids must run 1..N");
        if (!ch->entries.empty() && e.created_at_ms < ch->entries.back().created_at_ms)
            throw std::runtime_error("snapshot: created_at must be non-decreasing");
        ch->entries.push_back(std::move(e));
    }
    if (!ch->entries.empty()) ch->last_update_ms = ch->entries.back().created_at_ms;
}

std::pair<int64_t, int64_t> aligned_cover(const Channel& ch, int64_t span_ms) {
    if (ch.entries.empty()) return {0, span_ms};
    const int64_t last = ch.entries.back().created_at_ms;
    const int64_t end = (last / span_ms + 1) * span_ms;
    return {0, end};
}

// ---------------------------------------------------------------------------
// Query strings

std::string url_decode(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%' && i + 2 < s.size() && std::isxdigit((unsigned char)s[i + 1]) &&
                   std::isxdigit((unsigned char)s[i + 2])) {
            out.push_back(static_cast<char>(std::stoi(s.substr(i + 1, 2), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::map<std::string, std::string> parse_query(const std::string& query) {
    std::map<std::string, std::string> out;
    size_t pos = 0;
    while (pos < query.size()) {
        size_t amp = query.find('&', pos);
        if (amp == std::string::npos) amp = query.size();
        const std::string pair = query.substr(pos, amp - pos);
        if (!pair.empty()) {
            const size_t eq = pair.find('=');
            if (eq == std::string::npos)
                out[url_decode(pair)] = "";
            else
                out[url_decode(pair.substr(0, eq))] = url_decode(pair.substr(eq + 1));
        }
        pos = amp + 1;
    }
    return out;
}

}  // namespace heartsim::telemetry
