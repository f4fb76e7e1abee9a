// Copyright 2026 The descbench Authors.
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

#include "descbench/annotation_http.hpp"

#include <charconv>

#include "httplib.h"

namespace descbench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

int http_status(ServiceError::Status s) {
  switch (s) {
    case ServiceError::Status::kBadRequest:
      return 400;
    case ServiceError::Status::kNotFound:
      return 404;
    case ServiceError::Status::kConflict:
      return 409;
    case ServiceError::Status::kClosed:
      return 410;
  }
  return 500;
}

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, ordered_json{{"error", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) {
      throw ServiceError(ServiceError::Status::kBadRequest, "request body must be an object");
    }
    return j;
  } catch (const json::parse_error& e) {
    throw ServiceError(ServiceError::Status::kBadRequest,
                       std::string("malformed request body: ") + e.what());
  }
}

std::size_t item_index(const std::string& text) {
  std::size_t k = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ServiceError(ServiceError::Status::kNotFound, "bad item index '" + text + "'");
  }
  return k;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      reply_error(res, http_status(e.status()), e.what());
    } catch (const ValidationError& e) {
      reply_error(res, 400, e.what());
    } catch (const json::exception& e) {
      reply_error(res, 400, e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, e.what());
    }
  };
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) { routes(); }

  void routes() {
    server.Post("/session", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("participant_id") || !body["participant_id"].is_string()) {
        throw ServiceError(ServiceError::Status::kBadRequest, "participant_id is required");
      }
      reply(res, 201, to_json(service.create_session(body["participant_id"].get<std::string>())));
    }));
    server.Get(R"(/session/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, to_json(service.session(req.matches[1])));
               }));
    server.Get(R"(/session/([^/]+)/item/([^/]+))",
               guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, service.item_view(req.matches[1], item_index(req.matches[2])));
               }));
    server.Post(R"(/session/([^/]+)/item/([^/]+)/pre)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const std::string id = req.matches[1];
                  const std::size_t k = item_index(req.matches[2]);
                  service.submit_pre(id, k, AnnotationService::answers_from_json(
                                                body.value("answers", json())));
                  reply(res, 200, {{"session_id", id}, {"item", k}, {"state", "reveal_eligible"}});
                }));
    server.Post(R"(/session/([^/]+)/item/([^/]+)/reveal)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 200, service.reveal(req.matches[1], item_index(req.matches[2])));
                }));
    server.Post(R"(/session/([^/]+)/item/([^/]+)/post)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const json body = parse_body(req);
                  const std::string id = req.matches[1];
                  const std::size_t k = item_index(req.matches[2]);
                  const json flag = body.value("wrong_info_flag", json(false));
                  const json comment = body.value("comment", json(""));
                  if (!flag.is_boolean() || !comment.is_string()) {
                    throw ServiceError(ServiceError::Status::kBadRequest,
                                       "wrong_info_flag must be boolean and comment a string");
                  }
                  service.submit_post(
                      id, k, AnnotationService::answers_from_json(body.value("answers", json())),
                      flag.get<bool>(), comment.get<std::string>());
                  reply(res, 200, {{"session_id", id}, {"item", k}, {"state", "done"}});
                }));
    server.Get("/questions", guarded([this](const httplib::Request&, httplib::Response& res) {
      ordered_json out = ordered_json::array();
      for (const auto& q : service.questions()) {
        out.push_back({{"id", to_string(q.id)},
                       {"text", q.text},
                       {"post", asked_in(q.id, Phase::kPost)}});
      }
      reply(res, 200, out);
    }));
    server.Get("/admin/coverage", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, service.coverage().to_json());
    }));
    server.Get("/admin/exclusions",
               guarded([this](const httplib::Request&, httplib::Response& res) {
                 ordered_json out = ordered_json::array();
                 for (const auto& v : service.exclusions()) out.push_back(to_json(v));
                 reply(res, 200, out);
               }));
    server.Get("/admin/ratings", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::string body;
      for (const auto& r : service.ratings()) body += to_json(r).dump() + "\n";
      res.set_content(body, "application/x-ndjson");
    }));
  }
};

AnnotationServer::AnnotationServer(AnnotationService& service)
    : impl_(std::make_unique<Impl>(service)) {}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind_to_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool AnnotationServer::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

bool AnnotationServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void AnnotationServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace descbench
