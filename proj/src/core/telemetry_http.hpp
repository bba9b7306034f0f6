#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>

#include "core/telemetry.hpp"

namespace httplib {
class Server;
}

namespace heartsim::telemetry {

// HTTP front end over a Store. Paths:
//   GET/POST /update?api_key=K&field1=V1&field2=V2      -> entry id or "0"
//   GET /channels/<id>/feeds.json?results=N|from&to     -> channel + feeds
//   GET /channels/<id>/aggregate.json?bucket=&n=&stat=&field=[&from=&to=]
//
// Updates are stamped from an explicit created_at_ms parameter when given,
// otherwise from an internal clock that advances one rate-limit step per
// accepted update. Wall time is never consulted.
class HttpServer {
  public:
    explicit HttpServer(Store& store);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // port 0 binds an ephemeral port. Returns false when binding fails.
    bool start(const std::string& host, int port);
    void stop();

    int port() const { return port_; }
    bool running() const { return running_; }

  private:
    void route();

    Store& store_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<int64_t> synthetic_clock_ms_{0};
    int port_ = 0;
};

}  // namespace heartsim::telemetry
