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

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rtcshim/engine.hpp"
#include "rtcshim/payload.hpp"

namespace rtcshim {

enum class HeaderDirection { kRequest, kResponse };
enum class HeaderAction { kRemove, kSet, kAppend };

struct HeaderRule {
  HeaderDirection direction = HeaderDirection::kResponse;
  HeaderAction action = HeaderAction::kRemove;
  std::string name;
  std::optional<std::string> value;

  bool operator==(const HeaderRule&) const = default;
};

// Throws Error(kInvalidConfig): remove carries no value, set/append need one.
void validate(const HeaderRule& rule);
json to_json(const HeaderRule& rule);
HeaderRule header_rule_from_json(const json& j);

// Applies the rules matching `direction` in order. Names compare
// case-insensitively; remove deletes every instance.
HeaderList apply_header_rules(HeaderList headers, const std::vector<HeaderRule>& rules, HeaderDirection direction);

struct DelaySpec {
  // Fixed when min_ms == max_ms, else uniform on [min_ms, max_ms].
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;

  bool operator==(const DelaySpec&) const = default;
};

struct FakeResponseRule {
  // Glob against the request URL (HTTP) or the message text (WebSocket).
  std::string match;
  int status = 200;
  std::string body;
  double probability = 1.0;

  bool operator==(const FakeResponseRule&) const = default;
};

struct UrlRewrite {
  // ECMAScript regex; the template may use $1..$9.
  std::string from_pattern;
  std::string to_template;

  bool operator==(const UrlRewrite&) const = default;
};

struct FaultPolicy {
  std::optional<DelaySpec> delay;
  double drop_prob = 0;
  std::optional<std::int64_t> close_after_ms;
  std::vector<FakeResponseRule> fake_response_rules;
  std::optional<UrlRewrite> url_rewrite;

  bool operator==(const FaultPolicy&) const = default;
};

// Throws Error(kInvalidConfig) for probabilities outside [0,1], negative
// times or a regex that does not compile.
void validate(const FaultPolicy& policy);
json to_json(const FaultPolicy& policy);
FaultPolicy fault_policy_from_json(const json& j);

std::string apply_url_rewrite(const std::optional<UrlRewrite>& rewrite, const std::string& url);

enum class FlowDirection { kClientToServer, kServerToClient };
std::string_view to_string(FlowDirection d);

struct MessageRecord {
  std::string session_id;
  FlowDirection direction = FlowDirection::kClientToServer;
  std::int64_t t_ms = 0;
  std::string payload;
  bool binary = false;
  std::size_t size = 0;
  bool modified = false;
  // Not forwarded: dropped by fault policy or consumed by a short circuit.
  bool dropped = false;
};

json to_json(const MessageRecord& r);

struct ProxyCounters {
  std::uint64_t msgs_c2s = 0, msgs_s2c = 0;
  std::uint64_t bytes_c2s = 0, bytes_s2c = 0;
  std::uint64_t modified_count = 0;
  std::uint64_t forwarded_c2s = 0, forwarded_s2c = 0;
  std::uint64_t dropped_c2s = 0, dropped_s2c = 0;
};

struct ProxySession {
  std::string id;
  std::string client_endpoint;
  std::string upstream_url;
  std::int64_t opened_at_ms = 0;
  bool open = true;
  ProxyCounters counters;
};

json to_json(const ProxySession& s);

struct SequenceExport {
  std::vector<MessageRecord> records;
  std::uint64_t evicted = 0;
};

// What to do with one message after transforms and fault policy.
struct Delivery {
  // Send to the other leg, not before release_at_ms.
  std::optional<SocketMessage> forward;
  std::int64_t release_at_ms = 0;
  // Send back towards the origin (short circuit answer).
  std::optional<SocketMessage> reply;
  bool modified = false;
  bool dropped = false;
};

struct RequestDecision {
  // Set when the request is answered without contacting upstream.
  std::optional<HttpMessage> local_response;
  HttpMessage forward;
  // Sampled delay before forwarding (or answering locally).
  std::int64_t delay_ms = 0;
};

// Transport-independent core of the proxy: runs every message through the
// engine, applies header rules and fault policy, keeps per-session records.
// Thread-safe; calls for one session and direction must come in order.
class SignalPipeline {
 public:
  using Clock = std::function<std::int64_t()>;
  static constexpr std::size_t kDefaultCapacity = 10000;

  SignalPipeline(std::shared_ptr<Engine> engine, FaultPolicy policy = {}, std::vector<HeaderRule> rules = {},
                 std::size_t capacity = kDefaultCapacity, Clock clock = {});

  // Ids are "<prefix>-<n>" with n counting from 1, so seeded runs repeat.
  std::string open_session(const std::string& client_endpoint, const std::string& upstream_url,
                           const std::string& prefix = "ws");
  void close_session(const std::string& id);

  // Applies the policy's url_rewrite, then Socket dispatch with context
  // "connect". Returns the URL to dial and stores it on the session.
  std::string resolve_upstream(const std::string& id);

  Delivery on_message(const std::string& id, FlowDirection direction, SocketMessage message);

  RequestDecision on_request(const std::string& id, HttpMessage request);
  HttpMessage on_response(const std::string& id, HttpMessage response);
  // Records a response the proxy produced itself (local answer, 502, 504).
  void record_local_response(const std::string& id, const HttpMessage& response);

  // Absolute deadline (clock ms) after which both legs must be closed.
  std::optional<std::int64_t> close_deadline(const std::string& id) const;
  // True once a "proxy.close" control names this session (or is true).
  bool close_requested(const std::string& id);

  // Throws Error(kUnknownSession).
  SequenceExport export_sequence(const std::string& id, std::int64_t from_ms = INT64_MIN,
                                 std::int64_t to_ms = INT64_MAX) const;
  ProxySession session(const std::string& id) const;
  std::vector<ProxySession> sessions() const;
  // Sampled fault decisions in order; no timestamps, so seeded runs compare equal.
  json effect_log(const std::string& id) const;

  void set_policy(FaultPolicy policy);
  FaultPolicy policy() const;
  void set_header_rules(std::vector<HeaderRule> rules);
  std::vector<HeaderRule> header_rules() const;

  std::int64_t now() const { return clock_(); }
  std::shared_ptr<Engine> engine() const { return engine_; }

 private:
  struct State {
    std::mutex mu;
    ProxySession info;
    std::deque<MessageRecord> records;
    std::uint64_t evicted = 0;
    std::int64_t last_release[2] = {0, 0};
    std::uint64_t seq = 0;
    std::mt19937_64 rng;
    json effects = json::array();
    std::shared_ptr<Subscription> close_sub;
    bool close_flag = false;
  };

  std::shared_ptr<State> find(const std::string& id) const;
  void record(State& s, MessageRecord r);
  bool draw(State& s, double p);

  std::shared_ptr<Engine> engine_;
  std::size_t capacity_;
  Clock clock_;

  mutable std::mutex mu_;
  FaultPolicy policy_;
  std::vector<HeaderRule> rules_;
  std::map<std::string, std::shared_ptr<State>> sessions_;
  std::map<std::string, std::uint64_t> next_id_;
};

struct ProxyOptions {
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;
  // Base upstream, e.g. "ws://127.0.0.1:9000". The client's request target
  // is appended. HTTP requests use the same host with http://.
  std::string upstream;
  std::int64_t upstream_timeout_ms = 5000;
  std::optional<std::string> tls_cert_file;
  std::optional<std::string> tls_key_file;
  int threads = 2;
};

json to_json(const ProxyOptions& o);
ProxyOptions proxy_options_from_json(const json& j, ProxyOptions base = {});

// WebSocket close code sent to the client when the upstream cannot be reached.
// Private range: 1014 is still treated as reserved by common stacks.
inline constexpr std::uint16_t kCloseUpstreamFailed = 4502;

class ProxyServer {
 public:
  ProxyServer(ProxyOptions options, std::shared_ptr<SignalPipeline> pipeline);
  ~ProxyServer();
  ProxyServer(const ProxyServer&) = delete;
  ProxyServer& operator=(const ProxyServer&) = delete;

  // Binds and starts serving on background threads. Throws Error on bind failure.
  void start();
  void stop();
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rtcshim
