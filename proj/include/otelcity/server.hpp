// Copyright 2026 The otelcity Authors
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

#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "otelcity/api.hpp"

namespace otelcity {

/// HTTP front end: the OTLP receiver on ingest.port and the query API on
/// api.port. Equal ports share one listener. Port 0 binds an ephemeral port.
class Server {
 public:
  explicit Server(Pipeline& pipeline) : pipeline_(pipeline) {}
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server() { stop(); }

  void start() {
    const auto& cfg = pipeline_.config();
    bool shared = cfg.ingest_port == cfg.api_port && cfg.ingest_port != 0;
    auto ingest = std::make_unique<httplib::Server>();
    mount_ingest(*ingest);
    if (shared) {
      mount_api(*ingest);
      ingest_port_ = api_port_ = bind(*ingest, cfg.ingest_port);
      servers_.push_back(std::move(ingest));
    } else {
      auto api = std::make_unique<httplib::Server>();
      mount_api(*api);
      ingest_port_ = bind(*ingest, cfg.ingest_port);
      api_port_ = bind(*api, cfg.api_port);
      servers_.push_back(std::move(ingest));
      servers_.push_back(std::move(api));
    }
    for (auto& s : servers_) {
      threads_.emplace_back([srv = s.get()] { srv->listen_after_bind(); });
    }
    for (auto& s : servers_) s->wait_until_ready();
  }

  void stop() {
    for (auto& s : servers_) s->stop();
    for (auto& t : threads_) t.join();
    threads_.clear();
    servers_.clear();
  }

  int ingest_port() const { return ingest_port_; }
  int api_port() const { return api_port_; }

 private:
  int bind(httplib::Server& srv, std::uint16_t port) {
    const auto& host = pipeline_.config().host;
    int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  static void reply(httplib::Response& res, const api::Response& r) {
    res.status = r.status;
    if (r.summary) {
      res.set_header("X-Otelcity-Accepted", std::to_string(r.summary->accepted));
      res.set_header("X-Otelcity-Rejected", std::to_string(r.summary->rejected));
      res.set_header("X-Otelcity-Dropped", std::to_string(r.summary->dropped));
    }
    res.set_content(r.body, r.content_type);
  }

  static std::optional<std::string> param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
  }

  void mount_ingest(httplib::Server& srv) {
    srv.Post("/v1/traces", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api::export_traces(pipeline_, req.body, req.get_header_value("Content-Type"),
                                    req.get_header_value("Content-Encoding")));
    });
  }

  void mount_api(httplib::Server& srv) {
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    srv.Get("/api/landscape", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api::landscape(pipeline_, param(req, "from"), param(req, "to")));
    });
    srv.Get("/api/layout", [this](const httplib::Request& req, httplib::Response& res) {
      reply(res, api::layout(pipeline_, param(req, "from"), param(req, "to")));
    });
    srv.Get("/api/status", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, api::status(pipeline_));
    });
  }

  Pipeline& pipeline_;
  std::vector<std::unique_ptr<httplib::Server>> servers_;
  std::vector<std::thread> threads_;
  int ingest_port_ = 0;
  int api_port_ = 0;
};

}  // namespace otelcity
