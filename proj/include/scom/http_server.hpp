// Copyright 2026 The SCOM Authors
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

// HTTP/1.1 transport for ApiService (cpp-httplib). Needs a threads library
// at link time.

#include <filesystem>
#include <string>
#include <utility>

#include <httplib.h>

#include "scom/config.hpp"
#include "scom/error.hpp"
#include "scom/service.hpp"

namespace scom {

class HttpServer {
 public:
  HttpServer(const ApiService& api, ServiceSettings settings) : api_(api), settings_(std::move(settings)) {
    // httplib's default also sets SO_REUSEPORT, which lets a second server
    // share a port that is already in use.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    server_.set_default_headers({{"Access-Control-Allow-Origin", settings_.cors_origin},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                 {"Access-Control-Allow-Headers", "Content-Type"}});
    server_.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      const ApiResponse out = api_.handle(req.method, req.path, req.body);
      res.status = out.status;
      res.set_content(out.body.dump(), "application/json");
    };
    server_.Get(R"(/api/v1/.*)", forward);
    server_.Post(R"(/api/v1/.*)", forward);
    if (settings_.static_dir) {
      if (!std::filesystem::is_directory(*settings_.static_dir))
        fail(ErrorCode::io, "static directory not found: " + settings_.static_dir->string(),
             settings_.static_dir->string());
      server_.set_mount_point("/", settings_.static_dir->string());
    }
  }

  /// Binds the configured port (0: any free port) and returns it. A port
  /// that is already taken is a user error.
  int bind() {
    if (settings_.port == 0) {
      port_ = server_.bind_to_any_port(settings_.host);
      if (port_ < 0) fail(ErrorCode::io, "could not bind " + settings_.host);
      return port_;
    }
    if (!server_.bind_to_port(settings_.host, settings_.port))
      fail(ErrorCode::io, "port " + std::to_string(settings_.port) + " on " + settings_.host + " is busy or unavailable",
           std::to_string(settings_.port));
    port_ = settings_.port;
    return port_;
  }

  /// Serves until stop() is called.
  void run() { server_.listen_after_bind(); }

  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const { return port_; }

 private:
  const ApiService& api_;
  ServiceSettings settings_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace scom
