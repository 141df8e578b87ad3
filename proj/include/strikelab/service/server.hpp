#pragma once

// HTTP front end of the feedback session (JSON payloads).
//
//   GET  /api/session               session summary
//   GET  /api/episodes/next         {episode_id, ball_path, ee_path, top, side, outcome_geometry}
//   POST /api/episodes/{id}/rating  body {"reward": r}, r in {0, 0.25, 0.5, 1, 2}
//   POST /api/session/advance       force-close the open round
//   GET  /api/metrics               per-round metrics table

#include <memory>
#include <string>

#include "strikelab/service/session.hpp"

namespace httplib {
class Server;
}

namespace strikelab::service {

class HttpServer {
public:
    explicit HttpServer(FeedbackService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and returns the port; port 0 picks a free one.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen();
    void stop();

private:
    FeedbackService& service_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace strikelab::service
