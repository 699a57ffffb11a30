// Copyright 2026 The Dialogkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dialogkit/service.hpp"

#include <sstream>

// After Eigen: resolv.h defines a _res macro.
#include <httplib.h>

namespace dialogkit {

struct HttpServer::Impl {
  SessionService& service;
  ServerOptions options;
  httplib::Server server;

  Impl(SessionService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  static void send(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
      return Json::parse(req.body);
    } catch (const Json::exception& e) {
      throw ServiceError(400, "bad_request", "bad request",
                         std::string("request body is not JSON: ") + e.what());
    }
  }

  // Runs `f`, mapping every failure onto the {code, reason, detail} body.
  template <typename F>
  static httplib::Server::Handler wrap(int ok_status, F f) {
    return [ok_status, f](const httplib::Request& req, httplib::Response& res) {
      try {
        send(res, ok_status, f(req));
      } catch (const ServiceError& e) {
        send(res, e.status(), e.body());
      } catch (const std::invalid_argument& e) {
        send(res, 400, Json{{"code", "bad_request"}, {"reason", "bad request"}, {"detail", e.what()}});
      } catch (const std::exception& e) {
        send(res, 500, Json{{"code", "internal"}, {"reason", "internal error"}, {"detail", e.what()}});
      }
    };
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      if (options.bearer_token &&
          req.get_header_value("Authorization") != "Bearer " + *options.bearer_token) {
        send(res, 401, Json{{"code", "unauthorized"},
                            {"reason", "unauthorized"},
                            {"detail", "missing or wrong bearer token"}});
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    auto& svc = service;
    server.Post("/sessions", wrap(201, [&svc](const httplib::Request& req) {
                  return svc.create_session(parse_body(req));
                }));
    server.Get("/sessions", wrap(200, [&svc](const httplib::Request&) {
                 return svc.list_sessions();
               }));
    server.Get(R"(/sessions/([^/]+))", wrap(200, [&svc](const httplib::Request& req) {
                 return svc.get_session(req.matches[1]);
               }));
    server.Post(R"(/sessions/([^/]+)/turns)", wrap(200, [&svc](const httplib::Request& req) {
                  return svc.post_user_turn(req.matches[1], parse_body(req));
                }));
    server.Post(R"(/sessions/([^/]+)/labels)", wrap(200, [&svc](const httplib::Request& req) {
                  return svc.submit_label(req.matches[1], parse_body(req));
                }));
    server.Post(R"(/sessions/([^/]+)/finish)", wrap(200, [&svc](const httplib::Request& req) {
                  return svc.finish(req.matches[1]);
                }));
    server.Post(R"(/sessions/([^/]+)/abandon)", wrap(200, [&svc](const httplib::Request& req) {
                  return svc.abandon(req.matches[1]);
                }));
    server.Get("/summary", wrap(200, [&svc](const httplib::Request& req) {
                 std::optional<std::set<std::string>> only;
                 if (req.has_param("models")) {
                   only.emplace();
                   std::stringstream ss(req.get_param_value("models"));
                   for (std::string id; std::getline(ss, id, ',');) {
                     if (!id.empty()) only->insert(id);
                   }
                 }
                 return svc.summary(only);
               }));
    server.Get("/models", wrap(200, [&svc](const httplib::Request&) { return svc.models(); }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      send(res, res.status,
           Json{{"code", res.status == 404 ? "not_found" : "http_error"},
                {"reason", res.status == 404 ? "not found" : "http error"},
                {"detail", "status " + std::to_string(res.status)}});
    });
  }
};

HttpServer::HttpServer(SessionService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  int port = impl_->options.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw std::runtime_error("cannot bind " + impl_->options.host + ":" +
                             std::to_string(impl_->options.port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace dialogkit
