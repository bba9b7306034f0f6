#include "core/telemetry_http.hpp"

#include <httplib.h>
#include <json.hpp>

namespace heartsim::telemetry {

namespace {

std::string field_value_string(double v) {
    if (v == static_cast<double>(static_cast<int64_t>(v)))
        return std::to_string(static_cast<int64_t>(v));
    return std::to_string(v);
}

nlohmann::ordered_json feed_entry_json(const FeedEntry& e) {
    nlohmann::ordered_json j;
    j["created_at"] = e.created_at_ms;
    j["entry_id"] = e.entry_id;
    for (size_t i = 0; i < kMaxFields; ++i)
        if (e.fields[i]) j["field" + std::to_string(i + 1)] = field_value_string(*e.fields[i]);
    return j;
}

std::map<std::string, std::string> params_of(const httplib::Request& req) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : req.params) out[k] = v;
    return out;
}

}  // namespace

HttpServer::HttpServer(Store& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
    route();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::route() {
    const auto update = [this](const httplib::Request& req, httplib::Response& res) {
        auto params = params_of(req);
        int64_t now_ms;
        if (const auto it = params.find("created_at_ms"); it != params.end()) {
            const auto t = parse_int(it->second);
            if (!t) {
                res.status = 200;
                res.set_content("0", "text/plain");
                return;
            }
            now_ms = *t;
        } else {
            now_ms = synthetic_clock_ms_.fetch_add(kRateLimitMs);
        }
        const int64_t id = store_.handle_update(params, now_ms);
        res.status = 200;  // rejections answer 200 with body "0"
        res.set_content(std::to_string(id), "text/plain");
    };
    server_->Get("/update", update);
    server_->Post("/update", update);

    server_->Get(R"(/channels/(\d+)/feeds.json)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     const int64_t id = std::stoll(req.matches[1]);
                     FeedQuery q;
                     if (req.has_param("results"))
                         q.results = parse_int(req.get_param_value("results"));
                     if (req.has_param("from")) q.from_ms = parse_int(req.get_param_value("from"));
                     if (req.has_param("to")) q.to_ms = parse_int(req.get_param_value("to"));
                     const auto feed = store_.get_feed(id, q);
                     if (!feed) {
                         res.status = 404;
                         res.set_content("{\"error\":\"channel not found\"}", "application/json");
                         return;
                     }
                     const auto ch = store_.channel(id);
                     nlohmann::ordered_json j;
                     j["channel"] = {{"id", ch->id}};
                     for (size_t i = 0; i < kMaxFields; ++i)
                         if (!ch->field_names[i].empty())
                             j["channel"]["field" + std::to_string(i + 1)] = ch->field_names[i];
                     j["feeds"] = nlohmann::ordered_json::array();
                     for (const auto& e : *feed) j["feeds"].push_back(feed_entry_json(e));
                     res.set_content(j.dump(), "application/json");
                 });

    server_->Get(R"(/channels/(\d+)/aggregate.json)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     const int64_t id = std::stoll(req.matches[1]);
                     AggregateQuery q;
                     const auto unit = bucket_unit_from(req.get_param_value("bucket"));
                     const auto stat = statistic_from(req.has_param("stat")
                                                          ? req.get_param_value("stat")
                                                          : "average");
                     if (!unit || !stat) {
                         res.status = 400;
                         res.set_content("{\"error\":\"bad bucket or stat\"}",
                                         "application/json");
                         return;
                     }
                     q.unit = *unit;
                     q.stat = *stat;
                     if (req.has_param("n"))
                         q.count = static_cast<int>(
                             parse_int(req.get_param_value("n")).value_or(0));
                     if (req.has_param("field"))
                         q.field = static_cast<int>(
                             parse_int(req.get_param_value("field")).value_or(0));
                     const auto ch = store_.channel(id);
                     if (!ch) {
                         res.status = 404;
                         res.set_content("{\"error\":\"channel not found\"}",
                                         "application/json");
                         return;
                     }
                     if (req.has_param("from") && req.has_param("to")) {
                         q.from_ms = parse_int(req.get_param_value("from")).value_or(-1);
                         q.to_ms = parse_int(req.get_param_value("to")).value_or(-1);
                     } else {
                         int64_t span = 60000;
                         if (q.count > 0) span = q.count * bucket_unit_ms(q.unit);
                         const auto [from, to] = aligned_cover(*ch, span);
                         q.from_ms = from;
                         q.to_ms = to;
                     }
                     try {
                         const auto buckets = store_.aggregate(id, q);
                         nlohmann::ordered_json j;
                         j["channel_id"] = id;
                         j["bucket"] = to_string(q.unit);
                         j["n"] = q.count;
                         j["stat"] = to_string(q.stat);
                         j["field"] = q.field;
                         j["buckets"] = nlohmann::ordered_json::array();
                         for (const auto& b : *buckets)
                             j["buckets"].push_back(
                                 {{"bucket_start_ms", b.start_ms}, {"value", b.value}});
                         res.set_content(j.dump(), "application/json");
                     } catch (const std::invalid_argument& e) {
                         res.status = 400;
                         nlohmann::ordered_json j;
                         j["error"] = e.what();
                         res.set_content(j.dump(), "application/json");
                     }
                 });
}

bool HttpServer::start(const std::string& host, int port) {
    if (running_) return false;
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) return false;
    } else {
        if (!server_->bind_to_port(host, port)) return false;
        port_ = port;
    }
    running_ = true;
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return true;
}

void HttpServer::stop() {
    if (!running_) return;
    server_->stop();
    if (thread_.joinable()) thread_.join();
    running_ = false;
}

}  // namespace heartsim::telemetry
