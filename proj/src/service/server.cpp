#include "strikelab/service/server.hpp"

#include <httplib.h>

namespace strikelab::service {

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

int status_code(RateStatus s) {
    switch (s) {
        case RateStatus::ok: return 200;
        case RateStatus::conflict: return 409;
        case RateStatus::invalid: return 400;
        case RateStatus::not_found: return 404;
    }
    return 500;
}

}  // namespace

HttpServer::HttpServer(FeedbackService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    srv.Get("/api/session", [this](const httplib::Request&, httplib::Response& res) { send(res, 200, service_.summary()); });
    srv.Get("/api/episodes/next", [this](const httplib::Request&, httplib::Response& res) {
        if (auto ep = service_.next_episode())
            send(res, 200, *ep);
        else
            send(res, 404, {{"error", "no episode awaiting a rating"}});
    });
    srv.Post(R"(/api/episodes/([^/]+)/rating)", [this](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("reward")) {
            send(res, 400, {{"error", "body must be {\"reward\": r}"}});
            return;
        }
        const RateResult r = service_.rate(req.matches[1].str(), body.at("reward"));
        const json out = {{"status", r.status == RateStatus::ok ? "ok" : "rejected"}, {"message", r.message}};
        send(res, status_code(r.status), out);
    });
    srv.Post("/api/session/advance",
             [this](const httplib::Request&, httplib::Response& res) { send(res, 200, service_.advance()); });
    srv.Get("/api/metrics", [this](const httplib::Request&, httplib::Response& res) { send(res, 200, service_.metrics()); });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, 500, {{"error", what}});
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

}  // namespace strikelab::service
