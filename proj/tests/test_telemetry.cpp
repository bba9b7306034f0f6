#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "core/telemetry.hpp"

using namespace heartsim;
using namespace heartsim::telemetry;

namespace {

constexpr const char* kKey = "ABCD1234EFGH5678";

std::map<std::string, std::string> update(int bpm, int spo2) {
    return {{"api_key", kKey},
            {"field1", std::to_string(bpm)},
            {"field2", std::to_string(spo2)}};
}

// Brute force, one full pass per bucket, independent of the store's scan.
std::vector<AggregateBucket> oracle_aggregate(const std::vector<FeedEntry>& entries,
                                              const AggregateQuery& q) {
    std::vector<AggregateBucket> out;
    for (int64_t start = q.from_ms; start < q.to_ms; start += q.span_ms()) {
        int64_t isum = 0;
        int64_t n = 0;
        bool all_int = true;
        double dsum = 0, vmin = 1e300, vmax = -1e300, last = 0;
        for (const auto& e : entries) {
            if (e.created_at_ms < start || e.created_at_ms >= start + q.span_ms()) continue;
            const auto& f = e.fields[static_cast<size_t>(q.field - 1)];
            if (!f) continue;
            const double v = *f;
            if (v == std::floor(v))
                isum += static_cast<int64_t>(v);
            else
                all_int = false;
            dsum += v;
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
            last = v;
            ++n;
        }
        if (n == 0) continue;
        double value = 0;
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

}  // namespace

TEST_CASE("updates append with ids from 1 and auth failures return 0") {
    Store store;
    const auto id = store.create_channel(kKey, {"bpm", "SpO2"});
    CHECK(store.handle_update(update(72, 98), 0) == 1);

    auto wrong = update(72, 98);
    wrong["api_key"] = "0000000000000000";
    CHECK(store.handle_update(wrong, 20000) == 0);
    CHECK(store.entry_count(id) == 1);

    // the cadence used by the device clears the rate limit
    CHECK(store.handle_update(update(73, 97), 48000) == 2);
    CHECK(store.handle_update(update(74, 96), 96000) == 3);
}

TEST_CASE("rate limit stores exactly one of two close updates") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    CHECK(store.handle_update(update(70, 95), 1000) == 1);
    CHECK(store.handle_update(update(71, 95), 15999) == 0);
    CHECK(store.entry_count(id) == 1);
    // a rejected update must not push the window forward
    CHECK(store.handle_update(update(72, 95), 16000) == 2);
}

TEST_CASE("malformed and empty updates store nothing") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    auto params = update(72, 98);
    params["field2"] = "9x8";
    CHECK(store.handle_update(params, 0) == 0);
    CHECK(store.handle_update({{"api_key", kKey}}, 0) == 0);
    CHECK(store.handle_update({{"field1", "72"}}, 0) == 0);
    CHECK(store.entry_count(id) == 0);
    // out-of-order timestamps are refused
    CHECK(store.handle_update(update(72, 98), 50000) == 1);
    CHECK(store.handle_update(update(72, 98), 20000) == 0);
}

TEST_CASE("feed selection") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    for (int i = 0; i < 5; ++i)
        CHECK(store.handle_update(update(70 + i, 95), i * 20000) == i + 1);

    const auto last2 = store.get_feed(id, FeedQuery{2, {}, {}});
    REQUIRE(last2.has_value());
    REQUIRE(last2->size() == 2);
    CHECK((*last2)[0].entry_id == 4);
    CHECK((*last2)[1].entry_id == 5);

    const auto all = store.get_feed(id, FeedQuery{});
    CHECK(all->size() == 5);
    for (size_t i = 1; i < all->size(); ++i)
        CHECK((*all)[i].created_at_ms >= (*all)[i - 1].created_at_ms);

    const auto ranged = store.get_feed(id, FeedQuery{{}, 20000, 60000});
    CHECK(ranged->size() == 3);

    CHECK(!store.get_feed(999, FeedQuery{}).has_value());

    Store empty_store;
    const auto empty_id = empty_store.create_channel(kKey, {});
    CHECK(empty_store.get_feed(empty_id, FeedQuery{})->empty());
}

TEST_CASE("minute-bucket aggregation of two entries") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    store.handle_update(update(70, 95), 10000);
    store.handle_update(update(74, 95), 50000);

    AggregateQuery q;
    q.from_ms = 0;
    q.to_ms = 60000;
    const auto avg = store.aggregate(id, q);
    REQUIRE(avg.has_value());
    CHECK(*avg == std::vector<AggregateBucket>{{0, 72.0}});

    q.stat = Statistic::Max;
    CHECK(*store.aggregate(id, q) == std::vector<AggregateBucket>{{0, 74.0}});

    q.stat = Statistic::Min;
    CHECK(*store.aggregate(id, q) == std::vector<AggregateBucket>{{0, 70.0}});

    q.stat = Statistic::Last;
    CHECK(*store.aggregate(id, q) == std::vector<AggregateBucket>{{0, 74.0}});
}

TEST_CASE("aggregate rejects bad queries and omits empty buckets") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    store.handle_update(update(70, 95), 0);
    store.handle_update(update(80, 95), 180000);  // minute 3

    AggregateQuery q;
    q.from_ms = 0;
    q.to_ms = 240000;
    const auto got = store.aggregate(id, q);
    REQUIRE(got.has_value());
    CHECK(*got == std::vector<AggregateBucket>{{0, 70.0}, {180000, 80.0}});

    q.field = 9;
    CHECK_THROWS_AS((void)store.aggregate(id, q), std::invalid_argument);
    q.field = 1;
    q.count = 0;
    CHECK_THROWS_AS((void)store.aggregate(id, q), std::invalid_argument);
    q.count = 1;
    q.to_ms = 90000;  // not a whole bucket
    CHECK_THROWS_AS((void)store.aggregate(id, q), std::invalid_argument);
    q.to_ms = 0;
    CHECK_THROWS_AS((void)store.aggregate(id, q), std::invalid_argument);
    q.to_ms = 240000;
    CHECK(!store.aggregate(12345, q).has_value());
}

TEST_CASE("aggregation equals the brute-force oracle on random channels") {
    std::mt19937 rng(8);
    for (int round = 0; round < 60; ++round) {
        Store store;
        const auto id = store.create_channel(kKey, {});
        const int n = static_cast<int>(rng() % 400);
        int64_t t = 0;
        for (int i = 0; i < n; ++i) {
            t += 15000 + rng() % 200000;
            std::map<std::string, std::string> params{{"api_key", kKey}};
            params["field1"] = std::to_string(rng() % 250);
            if (rng() % 2 == 0) params["field2"] = std::to_string(70 + rng() % 31);
            REQUIRE(store.handle_update(params, t) == i + 1);
        }
        const auto entries = *store.get_feed(id, FeedQuery{});

        AggregateQuery q;
        const int unit = rng() % 3;
        q.unit = unit == 0 ? BucketUnit::Minutes
                           : unit == 1 ? BucketUnit::Hours : BucketUnit::Days;
        q.count = 1 + rng() % 4;
        const int stat = rng() % 4;
        q.stat = stat == 0 ? Statistic::Average
                           : stat == 1 ? Statistic::Min
                                       : stat == 2 ? Statistic::Max : Statistic::Last;
        q.field = 1 + rng() % 2;
        q.from_ms = 0;
        q.to_ms = ((t / q.span_ms()) + 1) * q.span_ms();
        if (q.to_ms <= 0) q.to_ms = q.span_ms();

        const auto got = store.aggregate(id, q);
        REQUIRE(got.has_value());
        CHECK(*got == oracle_aggregate(entries, q));  // exact, integer data
    }
}

TEST_CASE("delivery report") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    for (int i = 0; i < 73; ++i)
        REQUIRE(store.handle_update(update(75, 97), (i + 1) * 48000) == i + 1);

    const auto rep = store.delivery_report(id, 0, 3600000, 75);
    CHECK(rep.attempted == 75);
    CHECK(rep.received == 73);
    REQUIRE(rep.ratio.has_value());
    CHECK(*rep.ratio == Rational::of(73, 75));
    CHECK(rep.ratio->value() == doctest::Approx(0.9733).epsilon(1e-4));

    const auto full = store.delivery_report(id, 0, 3600000, 73);
    CHECK(full.ratio->value() == 1.0);

    const auto none = store.delivery_report(id, 0, 3600000, 0);
    CHECK(!none.ratio.has_value());
}

TEST_CASE("auth fuzzing never stores under a key mismatch") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    std::mt19937 rng(19);
    int accepted = 0;
    int64_t t = 0;
    for (int i = 0; i < 2000; ++i) {
        t += 16000;
        auto params = update(70, 95);
        if (rng() % 3 != 0) {
            std::string k = kKey;
            k[rng() % k.size()] = static_cast<char>('a' + rng() % 26);
            params["api_key"] = k;
            CHECK(store.handle_update(params, t) == 0);
        } else {
            ++accepted;
            CHECK(store.handle_update(params, t) == accepted);
        }
    }
    CHECK(store.entry_count(id) == accepted);

    // ids run 1..N with no gaps, entries ordered
    const auto feed = *store.get_feed(id, FeedQuery{});
    for (size_t i = 0; i < feed.size(); ++i)
        CHECK(feed[i].entry_id == static_cast<int64_t>(i) + 1);
}

TEST_CASE("snapshot round trip") {
    Store store;
    const auto id = store.create_channel(kKey, {});
    store.handle_update(update(72, 98), 48000);
    store.handle_update(update(75, 97), 96000);
    std::map<std::string, std::string> fractional{{"api_key", kKey}, {"field3", "1.25"}};
    store.handle_update(fractional, 144000);

    std::ostringstream out;
    store.write_snapshot(out, id);
    const auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);

    Store loaded;
    const auto lid = loaded.create_channel(kKey, {});
    std::istringstream in(text);
    loaded.load_snapshot(in, lid);
    CHECK(*loaded.get_feed(lid, FeedQuery{}) == *store.get_feed(id, FeedQuery{}));

    std::istringstream bad("{\"entry_id\":5,\"created_at\":0,\"field1\":\"1\"}\n");
    Store rejecting;
    const auto rid = rejecting.create_channel(kKey, {});
    CHECK_THROWS(rejecting.load_snapshot(bad, rid));
}

TEST_CASE("query parsing decodes url escapes") {
    const auto p = parse_query("api_key=K&field1=72&note=a%20b+c&flag");
    CHECK(p.at("api_key") == "K");
    CHECK(p.at("field1") == "72");
    CHECK(p.at("note") == "a b c");
    CHECK(p.at("flag").empty());
    CHECK(parse_query("").empty());
}
