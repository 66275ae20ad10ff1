// Copyright 2026 The rtcshim Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rtcshim/payload.hpp"

namespace rtcshim {

// Blocking HTTP exchange (http:// only). The request's url must be absolute.
// Returns the response with status set. Throws Error(kUpstreamConnectFailed)
// or Error(kUpstreamTimeout).
HttpMessage http_fetch(const HttpMessage& request, int timeout_ms = 5000);

struct WsFrame {
  std::string data;
  bool binary = false;
};

// Minimal blocking WebSocket client (ws:// only) with a background reader.
class WsClient {
 public:
  WsClient();
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  // Throws Error(kUpstreamConnectFailed) or Error(kUpstreamTimeout).
  void connect(const std::string& url, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void send(const std::string& data, bool binary = false);
  // Next frame, or nullopt on timeout or after the connection closed.
  std::optional<WsFrame> receive(std::chrono::milliseconds timeout);
  // Blocks until the peer closes (or timeout). Returns the close code, 0 if
  // the socket ended without a close frame.
  std::optional<std::uint16_t> wait_closed(std::chrono::milliseconds timeout);
  void close();
  bool is_open() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Loopback upstream for tests and demos. WebSocket: echoes every frame on
// any path, except that "/silent" accepts and never answers. HTTP:
//   /echo   - 200, body echoed, request headers reflected as x-echo-<name>
//   /slow   - answers after `slow_ms`
//   /csp    - 200 with content-security-policy and x-frame-options set
//   other   - 200 "ok"
class EchoServer {
 public:
  explicit EchoServer(std::int64_t slow_ms = 3000);
  ~EchoServer();
  EchoServer(const EchoServer&) = delete;
  EchoServer& operator=(const EchoServer&) = delete;

  void start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
  void stop();
  std::uint16_t port() const;

  struct Arrival {
    std::string data;
    std::int64_t t_ms;  // steady clock
  };
  std::vector<Arrival> arrivals() const;
  std::size_t http_hits() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rtcshim
