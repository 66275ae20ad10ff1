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

#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "rtcshim/error.hpp"
#include "rtcshim/net_tools.hpp"
#include "rtcshim/proxy.hpp"

namespace rtcshim {
namespace {

using namespace std::chrono_literals;

std::shared_ptr<Engine> engine(std::optional<std::uint64_t> seed = 7) {
  return std::make_shared<Engine>(EngineSettings{false, 1000, std::nullopt, seed}, std::make_shared<ControlsBus>());
}

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---- header rules ----

TEST(HeaderRules, RemoveCsp) {
  HeaderList h{{"Content-Security-Policy", "default-src 'self'"}, {"content-security-policy", "x"}, {"A", "1"}};
  auto out = apply_header_rules(h, {{HeaderDirection::kResponse, HeaderAction::kRemove, "content-security-policy", std::nullopt}},
                                HeaderDirection::kResponse);
  EXPECT_EQ(out, (HeaderList{{"A", "1"}}));
}

TEST(HeaderRules, SetAddsWhenMissing) {
  auto out = apply_header_rules({{"A", "1"}}, {{HeaderDirection::kResponse, HeaderAction::kSet, "x-frame-options", "ALLOWALL"}},
                                HeaderDirection::kResponse);
  EXPECT_EQ(out, (HeaderList{{"A", "1"}, {"x-frame-options", "ALLOWALL"}}));
}

TEST(HeaderRules, EmptyIsIdentityAndDirectionFilters) {
  HeaderList h{{"B", "2"}, {"A", "1"}};
  EXPECT_EQ(apply_header_rules(h, {}, HeaderDirection::kRequest), h);
  EXPECT_EQ(apply_header_rules(h, {{HeaderDirection::kResponse, HeaderAction::kRemove, "a", std::nullopt}},
                               HeaderDirection::kRequest),
            h);
  auto appended = apply_header_rules(h, {{HeaderDirection::kRequest, HeaderAction::kAppend, "b", "3"}},
                                     HeaderDirection::kRequest);
  EXPECT_EQ(appended.size(), 3u);
}

TEST(HeaderRules, Validation) {
  EXPECT_THROW(validate(HeaderRule{HeaderDirection::kRequest, HeaderAction::kRemove, "a", "v"}), Error);
  EXPECT_THROW(validate(HeaderRule{HeaderDirection::kRequest, HeaderAction::kSet, "a", std::nullopt}), Error);
  EXPECT_THROW(header_rule_from_json(json{{"action", "zap"}, {"name", "a"}}), Error);
  auto r = header_rule_from_json(json{{"direction", "request"}, {"action", "append"}, {"name", "a"}, {"value", "b"}});
  EXPECT_EQ(header_rule_from_json(to_json(r)), r);
}

TEST(FaultPolicyJson, RoundTripAndValidation) {
  auto p = fault_policy_from_json(json{{"delay_ms", {{"min", 10}, {"max", 20}}},
                                       {"drop_prob", 0.25},
                                       {"close_after_ms", 1000},
                                       {"fake_response_rules", {{{"match", "*/x"}, {"status", 503}}}},
                                       {"url_rewrite", {{"from_pattern", ":(\\d+)/"}, {"to_template", ":9/"}}}});
  EXPECT_EQ(fault_policy_from_json(to_json(p)), p);
  EXPECT_THROW(fault_policy_from_json(json{{"drop_prob", 1.5}}), Error);
  EXPECT_THROW(fault_policy_from_json(json{{"delay_ms", {{"min", 5}, {"max", 1}}}}), Error);
  EXPECT_THROW(fault_policy_from_json(json{{"url_rewrite", {{"from_pattern", "("}, {"to_template", ""}}}}), Error);
  EXPECT_EQ(apply_url_rewrite(p.url_rewrite, "ws://h:80/a"), "ws://h:9/a");
}

// ---- pipeline ----

TEST(Pipeline, PassThroughRecordsAndCounts) {
  SignalPipeline p(engine());
  auto id = p.open_session("c", "ws://u/");
  for (int i = 0; i < 3; ++i) {
    auto d = p.on_message(id, i % 2 ? FlowDirection::kServerToClient : FlowDirection::kClientToServer,
                          SocketMessage{"", "m" + std::to_string(i), false});
    ASSERT_TRUE(d.forward);
    EXPECT_EQ(d.forward->data, "m" + std::to_string(i));
    EXPECT_FALSE(d.modified);
  }
  auto seq = p.export_sequence(id);
  ASSERT_EQ(seq.records.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) EXPECT_LE(seq.records[i - 1].t_ms, seq.records[i].t_ms);
  EXPECT_EQ(seq.evicted, 0u);
  auto c = p.session(id).counters;
  EXPECT_EQ(c.msgs_c2s, 2u);
  EXPECT_EQ(c.msgs_s2c, 1u);
  EXPECT_EQ(c.bytes_c2s, 4u);
}

TEST(Pipeline, RingBufferEvicts) {
  SignalPipeline p(engine(), {}, {}, 2);
  auto id = p.open_session("c", "ws://u/");
  for (int i = 0; i < 3; ++i) p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", std::to_string(i), false});
  auto seq = p.export_sequence(id);
  ASSERT_EQ(seq.records.size(), 2u);
  EXPECT_EQ(seq.evicted, 1u);
  EXPECT_EQ(seq.records[0].payload, "1");
}

TEST(Pipeline, UnknownSession) {
  SignalPipeline p(engine());
  try {
    p.export_sequence("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUnknownSession);
  }
}

TEST(Pipeline, DropAllRecordsDropped) {
  FaultPolicy pol;
  pol.drop_prob = 1;
  SignalPipeline p(engine(), pol);
  auto id = p.open_session("c", "ws://u/");
  for (int i = 0; i < 50; ++i) {
    auto d = p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", "x", false});
    EXPECT_FALSE(d.forward);
    EXPECT_TRUE(d.dropped);
  }
  auto seq = p.export_sequence(id);
  for (const auto& r : seq.records) EXPECT_TRUE(r.dropped);
  auto c = p.session(id).counters;
  EXPECT_EQ(c.forwarded_c2s, 0u);
  EXPECT_EQ(c.dropped_c2s, 50u);
}

TEST(Pipeline, SeededDropPatternRepeats) {
  auto run = [] {
    FaultPolicy pol;
    pol.drop_prob = 0.5;
    pol.delay = DelaySpec{0, 30};
    SignalPipeline p(engine(99), pol);
    auto id = p.open_session("c", "ws://u/");
    std::vector<bool> pattern;
    for (int i = 0; i < 1000; ++i) {
      pattern.push_back(p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", "x", false}).dropped);
    }
    return std::make_pair(pattern, p.effect_log(id));
  };
  auto a = run(), b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  const auto drops = std::count(a.first.begin(), a.first.end(), true);
  EXPECT_GT(drops, 400);
  EXPECT_LT(drops, 600);
}

// Counter coherence and FIFO release under random delays, per direction.
TEST(Pipeline, CountersAndFifoProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    FaultPolicy pol;
    pol.drop_prob = std::uniform_real_distribution<double>(0, 1)(rng);
    pol.delay = DelaySpec{0, static_cast<std::int64_t>(rng() % 200)};
    std::int64_t now = 0;
    SignalPipeline p(engine(trial), pol, {}, SignalPipeline::kDefaultCapacity, [&now] { return now; });
    auto id = p.open_session("c", "ws://u/");
    std::int64_t last[2] = {INT64_MIN, INT64_MIN};
    std::uint64_t fwd[2] = {0, 0}, drop[2] = {0, 0};
    for (int i = 0; i < 200; ++i) {
      now += static_cast<std::int64_t>(rng() % 20);
      const int dir = static_cast<int>(rng() % 2);
      auto d = p.on_message(id, dir ? FlowDirection::kServerToClient : FlowDirection::kClientToServer,
                            SocketMessage{"", "m", false});
      if (d.forward) {
        EXPECT_GE(d.release_at_ms, last[dir]);
        EXPECT_GE(d.release_at_ms, now);
        last[dir] = d.release_at_ms;
        ++fwd[dir];
      } else {
        ++drop[dir];
      }
    }
    auto c = p.session(id).counters;
    EXPECT_EQ(c.msgs_c2s, c.forwarded_c2s + c.dropped_c2s);
    EXPECT_EQ(c.msgs_s2c, c.forwarded_s2c + c.dropped_s2c);
    EXPECT_EQ(c.forwarded_c2s, fwd[0]);
    EXPECT_EQ(c.dropped_s2c, drop[1]);
  }
}

TEST(Pipeline, FixedDelayAddsToArrival) {
  FaultPolicy pol;
  pol.delay = DelaySpec{500, 500};
  std::int64_t now = 1000;
  SignalPipeline p(engine(), pol, {}, 100, [&now] { return now; });
  auto id = p.open_session("c", "ws://u/");
  EXPECT_EQ(p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", "a", false}).release_at_ms, 1500);
  now = 1010;
  EXPECT_EQ(p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", "b", false}).release_at_ms, 1510);
}

TEST(Pipeline, SocketShortCircuitReplies) {
  auto e = engine();
  e->install_transform({CategoryId::kSocket, "fake_reply", {{"match", Scalar{std::string("hello*")}},
                                                          {"reply", Scalar{std::string("fake")}}}, {}, true});
  SignalPipeline p(e);
  auto id = p.open_session("c", "ws://u/");
  auto d = p.on_message(id, FlowDirection::kClientToServer, SocketMessage{"", "hello there", false});
  EXPECT_FALSE(d.forward);
  ASSERT_TRUE(d.reply);
  EXPECT_EQ(d.reply->data, "fake");
  auto c = p.session(id).counters;
  EXPECT_EQ(c.msgs_c2s, c.forwarded_c2s + c.dropped_c2s);
}

TEST(Pipeline, RequestResponseShareState) {
  auto e = engine();
  e->install_transform({CategoryId::kRequest, "correlate", {}, {}, true});
  SignalPipeline p(e);
  auto id = p.open_session("c", "http://u/", "http");
  auto d = p.on_request(id, HttpMessage{"GET", "http://u/x", 0, {}, ""});
  ASSERT_FALSE(d.local_response);
  auto tag = d.forward.header("x-correlation-id");
  ASSERT_TRUE(tag);
  auto resp = p.on_response(id, HttpMessage{"GET", "http://u/x", 200, {}, "ok"});
  EXPECT_EQ(resp.header("x-correlation-id"), tag);
}

TEST(Pipeline, FakeResponseRuleAnswersLocally) {
  FaultPolicy pol;
  pol.fake_response_rules.push_back({"*/api/*", 503, "busy", 1.0});
  SignalPipeline p(engine(), pol);
  auto id = p.open_session("c", "http://u/", "http");
  auto d = p.on_request(id, HttpMessage{"GET", "http://u/api/x", 0, {}, ""});
  ASSERT_TRUE(d.local_response);
  EXPECT_EQ(d.local_response->status, 503);
  EXPECT_FALSE(p.on_request(id, HttpMessage{"GET", "http://u/other", 0, {}, ""}).local_response);
}

TEST(Pipeline, CloseControl) {
  auto e = engine();
  SignalPipeline p(e);
  auto a = p.open_session("c", "ws://u/");
  auto b = p.open_session("c", "ws://u/");
  EXPECT_FALSE(p.close_requested(a));
  e->controls()->trigger("proxy.close", Scalar{b});
  EXPECT_FALSE(p.close_requested(a));
  EXPECT_TRUE(p.close_requested(b));
}

// ---- over the wire ----

class ProxyWire : public ::testing::Test {
 protected:
  void SetUp() override { echo_.start(); }

  void start_proxy(FaultPolicy pol = {}, std::vector<HeaderRule> rules = {}, std::string upstream = {},
                   std::int64_t timeout_ms = 2000) {
    pipeline_ = std::make_shared<SignalPipeline>(engine_, pol, rules);
    ProxyOptions o;
    o.upstream = upstream.empty() ? "ws://127.0.0.1:" + std::to_string(echo_.port()) : upstream;
    o.upstream_timeout_ms = timeout_ms;
    proxy_ = std::make_unique<ProxyServer>(o, pipeline_);
    proxy_->start();
  }

  std::string ws_url(const std::string& path = "/") { return "ws://127.0.0.1:" + std::to_string(proxy_->port()) + path; }
  std::string http_url(const std::string& path) { return "http://127.0.0.1:" + std::to_string(proxy_->port()) + path; }

  EchoServer echo_{1500};
  std::shared_ptr<Engine> engine_ = engine();
  std::shared_ptr<SignalPipeline> pipeline_;
  std::unique_ptr<ProxyServer> proxy_;
};

TEST_F(ProxyWire, WebSocketPassthroughIsByteIdentical) {
  start_proxy();
  WsClient c;
  c.connect(ws_url("/room/1"));
  std::mt19937_64 rng(11);
  std::vector<WsFrame> sent;
  for (int i = 0; i < 200; ++i) {
    WsFrame f{std::string(rng() % 300, '\0'), (rng() % 2) == 0};
    for (auto& ch : f.data) ch = f.binary ? static_cast<char>(rng()) : static_cast<char>('a' + rng() % 26);
    c.send(f.data, f.binary);
    sent.push_back(f);
  }
  for (const auto& f : sent) {
    auto got = c.receive(3s);
    ASSERT_TRUE(got);
    EXPECT_EQ(got->data, f.data);
    EXPECT_EQ(got->binary, f.binary);
  }
  c.close();
  auto sessions = pipeline_->sessions();
  ASSERT_EQ(sessions.size(), 1u);
  EXPECT_EQ(sessions[0].counters.msgs_c2s, 200u);
  EXPECT_EQ(sessions[0].counters.msgs_s2c, 200u);
  EXPECT_NE(sessions[0].upstream_url.find("/room/1"), std::string::npos);
}

TEST_F(ProxyWire, ConsumedMessageNeverReachesUpstream) {
  engine_->install_transform({CategoryId::kSocket, "fake_reply", {{"match", Scalar{std::string("secret*")}},
                                                                {"reply", Scalar{std::string("handled")}}}, {}, true});
  start_proxy();
  WsClient c;
  c.connect(ws_url());
  c.send("secret 1");
  c.send("public 1");
  auto a = c.receive(2s), b = c.receive(2s);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->data, "handled");
  EXPECT_EQ(b->data, "public 1");
  c.close();
  for (const auto& arr : echo_.arrivals()) EXPECT_EQ(arr.data.find("secret"), std::string::npos);
}

TEST_F(ProxyWire, RewriteUrlAtConnect) {
  // The configured upstream is dead; the transform points the session at the echo server.
  engine_->install_transform({CategoryId::kSocket, "rewrite_url", {{"from", Scalar{std::string(":1/")}},
                                                                 {"to", Scalar{":" + std::to_string(echo_.port()) + "/"}}},
                              {}, true});
  start_proxy({}, {}, "ws://127.0.0.1:1");
  WsClient c;
  c.connect(ws_url("/x"));
  c.send("ping");
  auto got = c.receive(2s);
  ASSERT_TRUE(got);
  EXPECT_EQ(got->data, "ping");
  EXPECT_NE(pipeline_->sessions()[0].upstream_url.find(std::to_string(echo_.port())), std::string::npos);
}

TEST_F(ProxyWire, UpstreamDownClosesWithDistinctCode) {
  start_proxy({}, {}, "ws://127.0.0.1:1");
  WsClient c;
  c.connect(ws_url());
  auto code = c.wait_closed(3s);
  ASSERT_TRUE(code);
  EXPECT_EQ(*code, kCloseUpstreamFailed);
}

TEST_F(ProxyWire, FixedDelay) {
  FaultPolicy pol;
  pol.delay = DelaySpec{200, 200};
  start_proxy(pol);
  WsClient c;
  c.connect(ws_url("/silent"));
  std::vector<std::int64_t> sent;
  for (int i = 0; i < 5; ++i) {
    sent.push_back(steady_ms());
    c.send("m" + std::to_string(i));
    std::this_thread::sleep_for(20ms);
  }
  std::this_thread::sleep_for(500ms);
  auto arr = echo_.arrivals();
  ASSERT_EQ(arr.size(), 5u);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    EXPECT_EQ(arr[i].data, "m" + std::to_string(i));
    const auto lat = arr[i].t_ms - sent[i];
    EXPECT_GE(lat, 200);
    EXPECT_LT(lat, 300);
  }
}

TEST_F(ProxyWire, CloseAfter) {
  FaultPolicy pol;
  pol.close_after_ms = 300;
  start_proxy(pol);
  WsClient c;
  const auto t0 = steady_ms();
  c.connect(ws_url());
  auto code = c.wait_closed(2s);
  const auto elapsed = steady_ms() - t0;
  ASSERT_TRUE(code);
  EXPECT_GE(elapsed, 300);
  EXPECT_LT(elapsed, 400);
}

TEST_F(ProxyWire, CloseControl) {
  start_proxy();
  WsClient c;
  c.connect(ws_url());
  c.send("a");
  ASSERT_TRUE(c.receive(2s));
  engine_->controls()->trigger("proxy.close", Scalar{true});
  EXPECT_TRUE(c.wait_closed(1s));
}

TEST_F(ProxyWire, HttpPassthrough) {
  start_proxy();
  std::string body(5000, '\0');
  std::mt19937_64 rng(5);
  for (auto& ch : body) ch = static_cast<char>(rng());
  auto r = http_fetch(HttpMessage{"POST", http_url("/echo?q=1"), 0, {{"X-Custom", "abc"}}, body});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, body);
  EXPECT_EQ(r.header("x-echo-x-custom"), "abc");
}

TEST_F(ProxyWire, HttpHeaderRulesAndSecurity) {
  start_proxy({}, {{HeaderDirection::kResponse, HeaderAction::kSet, "x-frame-options", "ALLOWALL"}});
  engine_->install_transform({CategoryId::kSecurity, "remove_header", {{"name", Scalar{std::string("content-security-policy")}}},
                              {}, true});
  auto r = http_fetch(HttpMessage{"GET", http_url("/csp"), 0, {}, ""});
  EXPECT_EQ(r.status, 200);
  EXPECT_FALSE(r.header("content-security-policy"));
  EXPECT_EQ(r.header("x-frame-options"), "ALLOWALL");
  EXPECT_EQ(r.body, "guarded");
}

TEST_F(ProxyWire, HttpFakeResponseSkipsUpstream) {
  FaultPolicy pol;
  pol.fake_response_rules.push_back({"*/api/*", 200, "{\"ok\":true}", 1.0});
  start_proxy(pol);
  auto r = http_fetch(HttpMessage{"GET", http_url("/api/thing"), 0, {}, ""});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, "{\"ok\":true}");
  EXPECT_EQ(echo_.http_hits(), 0u);
}

TEST_F(ProxyWire, HttpUpstreamFailures) {
  start_proxy({}, {}, {}, 300);
  EXPECT_EQ(http_fetch(HttpMessage{"GET", http_url("/slow"), 0, {}, ""}).status, 504);
  proxy_->stop();
  start_proxy({}, {}, "ws://127.0.0.1:1");
  EXPECT_EQ(http_fetch(HttpMessage{"GET", http_url("/x"), 0, {}, ""}).status, 502);
}

}  // namespace
}  // namespace rtcshim
