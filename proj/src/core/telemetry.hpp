#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "core/rational.hpp"

namespace heartsim::telemetry {

// Free-tier style per-channel update throttle. The device's 48 s upload
// cadence clears it with room to spare.
constexpr int64_t kRateLimitMs = 15000;

constexpr size_t kMaxFields = 8;

struct FeedEntry {
    int64_t entry_id = 0;
    int64_t created_at_ms = 0;
    std::array<std::optional<double>, kMaxFields> fields;

    friend bool operator==(const FeedEntry&, const FeedEntry&) = default;
};

struct Channel {
    int64_t id = 0;
    std::string write_api_key;
    std::array<std::string, kMaxFields> field_names;  // field1="bpm", field2="SpO2"
    std::vector<FeedEntry> entries;
    int64_t last_update_ms = -1;  // -1: never updated
};

enum class BucketUnit { Minutes, Hours, Days };
enum class Statistic { Average, Min, Max, Last };

std::optional<BucketUnit> bucket_unit_from(const std::string& name);
std::optional<Statistic> statistic_from(const std::string& name);
const char* to_string(BucketUnit u);
const char* to_string(Statistic s);
int64_t bucket_unit_ms(BucketUnit u);

// Buckets are aligned to t=0; the [from_ms, to_ms) range must cover whole
// buckets. field is 1-based.
struct AggregateQuery {
    BucketUnit unit = BucketUnit::Minutes;
    int count = 1;
    Statistic stat = Statistic::Average;
    int field = 1;
    int64_t from_ms = 0;
    int64_t to_ms = 0;

    int64_t span_ms() const { return static_cast<int64_t>(count) * bucket_unit_ms(unit); }
};

struct AggregateBucket {
    int64_t start_ms = 0;
    double value = 0.0;

    friend bool operator==(const AggregateBucket&, const AggregateBucket&) = default;
};

// Feed selection: either the last N entries or a created_at range.
struct FeedQuery {
    std::optional<int64_t> results;
    std::optional<int64_t> from_ms;
    std::optional<int64_t> to_ms;  // inclusive
};

struct DeliveryReport {
    int64_t attempted = 0;
    int64_t received = 0;
    std::optional<Rational> ratio;  // nullopt when attempted == 0
};

// In-memory channel store. Writes are serialized behind one mutex; reads
// copy out consistent snapshots. Entry ids per channel run 1..N with no
// gaps and entries are append-only.
class Store {
  public:
    int64_t create_channel(const std::string& write_api_key,
                           const std::vector<std::string>& field_names);

    // Returns the new entry id, or 0 when rejected: unknown/missing api_key,
    // no valid field, malformed numeric value, rate-limited, or a timestamp
    // older than the channel tail.
    int64_t handle_update(const std::map<std::string, std::string>& params, int64_t now_ms);

    bool has_channel(int64_t id) const;
    std::optional<Channel> channel(int64_t id) const;  // copy
    std::optional<std::vector<FeedEntry>> get_feed(int64_t channel_id,
                                                   const FeedQuery& q) const;

    // Throws std::invalid_argument on a bad query (field out of range,
    // non-positive count, misaligned range); nullopt on unknown channel.
    std::optional<std::vector<AggregateBucket>> aggregate(int64_t channel_id,
                                                          const AggregateQuery& q) const;

    DeliveryReport delivery_report(int64_t channel_id, int64_t from_ms, int64_t to_ms,
                                   int64_t attempted) const;

    // JSON-lines, one FeedEntry per line.
    void write_snapshot(std::ostream& out, int64_t channel_id) const;
    void load_snapshot(std::istream& in, int64_t channel_id);  // throws on malformed lines

    int64_t entry_count(int64_t channel_id) const;

  private:
    const Channel* find_locked(int64_t id) const;
    Channel* find_by_key_locked(const std::string& key);

    mutable std::mutex mu_;
    std::vector<Channel> channels_;
};

// Smallest aggregation window aligned to whole buckets that covers every
// entry of the channel; [0, span) when the channel is empty.
std::pair<int64_t, int64_t> aligned_cover(const Channel& ch, int64_t span_ms);

// Query-string helpers shared by the HTTP surface and the modem bridge.
std::map<std::string, std::string> parse_query(const std::string& query);
std::string url_decode(const std::string& s);

// Strict full-string parses; nullopt on trailing garbage.
std::optional<double> parse_number(const std::string& s);
std::optional<int64_t> parse_int(const std::string& s);

}  // namespace heartsim::telemetry
