#include <cctype>
#include <httplib.h>

#include "nftm/error.hpp"
#include "nftm/service.hpp"

namespace nftm::service {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

HttpServer::HttpServer(Api& api, const ServiceConfig& config)
    : api_(api), config_(config), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    for (const auto& [k, v] : req.headers) r.headers[lower(k)] = v;
    auto out = api_.handle(r);
    res.status = out.status;
    for (const auto& [k, v] : out.headers) res.set_header(k, v);
    res.set_content(out.body, out.content_type);
  };
  if (!config_.ui_dir.empty()) server_->set_mount_point("/ui", config_.ui_dir.string());
  // Static files under /ui are matched before these catch-alls.
  server_->Get(".*", handler);
  server_->Post(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

std::uint16_t HttpServer::bind() {
  if (config_.port == 0) {
    int p = server_->bind_to_any_port(config_.bind);
    if (p < 0) throw Error(ErrorCode::Io, "cannot bind " + config_.bind);
    port_ = static_cast<std::uint16_t>(p);
  } else {
    if (!server_->bind_to_port(config_.bind, config_.port)) {
      throw Error(ErrorCode::Io, "port " + std::to_string(config_.port) + " on " + config_.bind +
                                     " is busy or unavailable");
    }
    port_ = config_.port;
  }
  return port_;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace nftm::service
