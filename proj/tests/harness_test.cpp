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

#include <fmt/format.h>
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "rtcshim/cpu_monitor.hpp"
#include "rtcshim/engine.hpp"
#include "rtcshim/harness.hpp"
#include "rtcshim/net_tools.hpp"
#include "rtcshim/proxy.hpp"

using namespace rtcshim;

namespace {

std::unique_ptr<Engine> make_engine(std::uint64_t seed = 7) {
  EngineSettings s;
  s.seed = seed;
  return std::make_unique<Engine>(s, std::make_shared<ControlsBus>());
}

TransformSpec spec(CategoryId cat, std::string builtin, Params p = {}) {
  TransformSpec t;
  t.category = cat;
  t.builtin = std::move(builtin);
  t.params = std::move(p);
  return t;
}

std::vector<std::string> codecs_of(const MediaSection& s) {
  std::vector<std::string> out;
  for (int pt : s.payload_ids) out.push_back(s.rtpmap.at(pt).codec);
  return out;
}

const MediaSection* section(const SessionDescription& sd, MediaKind kind) {
  for (const auto& s : sd.media_sections) {
    if (s.kind == kind) return &s;
  }
  return nullptr;
}

EndpointSpec ep(std::string id, Role role, CodecSet codecs = default_codec_set()) {
  EndpointSpec e;
  e.id = std::move(id);
  e.role = role;
  e.codecs = std::move(codecs);
  return e;
}

IceCandidate cand(const std::string& line) { return parse_candidate(line); }

// host + relay, both udp, priorities from the standard formula.
CandidateList host_relay(const std::string& host_ip, const std::string& relay_ip) {
  auto h = cand("candidate:1 1 udp " + std::to_string(compute_priority(CandidateType::kHost, 65535, 1)) + " " + host_ip +
                " 5000 typ host");
  auto r = cand("candidate:3 1 udp " + std::to_string(compute_priority(CandidateType::kRelay, 65535, 1)) + " " +
                relay_ip + " 6000 typ relay raddr 0.0.0.0 rport 0");
  return {h, r};
}

void negotiate(Harness& h, const std::string& a, const std::string& b) {
  h.generate_offer(a, b);
  h.answer(b);
  h.signal_candidates(a);
  h.signal_candidates(b);
  h.connect(a, b);
}

}  // namespace

TEST(Offer, CodecOrderFollowsCodecSet) {
  auto sd = build_offer({{MediaKind::kAudio, {"opus", "PCMU"}}}, "a");
  ASSERT_EQ(sd.media_sections.size(), 1u);
  EXPECT_EQ(codecs_of(sd.media_sections[0]), (std::vector<std::string>{"opus", "PCMU"}));
  // Round-trips through the parser unchanged.
  EXPECT_EQ(parse_sdp(serialize_sdp(sd)), sd);
}

TEST(Offer, SessionTransformReordersSignaledOffer) {
  auto engine = make_engine();
  engine->install_transform(spec(CategoryId::kSession, "prefer_codec", {{"kind", "audio"}, {"codec", "PCMU"}}));
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller, {{MediaKind::kAudio, {"opus", "PCMA", "PCMU"}}}));
  h.add_endpoint(ep("b", Role::kCallee));
  auto offer = h.generate_offer("a", "b");
  // Hand application: PCMU moved to the front, the rest keep their order.
  EXPECT_EQ(codecs_of(*section(offer, MediaKind::kAudio)), (std::vector<std::string>{"PCMU", "opus", "PCMA"}));
  EXPECT_EQ(h.endpoint("a").signaling_state, SignalingState::kHaveLocalOffer);
  EXPECT_EQ(h.endpoint("b").signaling_state, SignalingState::kHaveRemoteOffer);
}

TEST(Offer, SecondOfferWithoutAnswerIsWrongState) {
  auto engine = make_engine();
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee));
  h.generate_offer("a", "b");
  try {
    h.generate_offer("a", "b");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kWrongState);
  }
}

TEST(Answer, FirstOfferedCodecTheCalleeSupports) {
  auto offer = build_offer({{MediaKind::kAudio, {"PCMU", "opus"}}}, "a");
  auto ans = build_answer(offer, {{MediaKind::kAudio, {"opus", "PCMU"}}});
  EXPECT_EQ(codecs_of(*section(ans, MediaKind::kAudio)), (std::vector<std::string>{"PCMU"}));
  EXPECT_EQ(ans.type, SdpType::kAnswer);
}

TEST(Answer, NoCommonCodecRejectsSection) {
  auto offer = build_offer({{MediaKind::kAudio, {"PCMU", "opus"}}}, "a");
  auto ans = build_answer(offer, {{MediaKind::kAudio, {"G722"}}});
  EXPECT_EQ(section(ans, MediaKind::kAudio)->port, 0);
}

TEST(Answer, VideoLessCalleeRejectsVideoOnly) {
  auto engine = make_engine();
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee, {{MediaKind::kAudio, {"PCMU"}}}));
  h.generate_offer("a", "b");
  auto ans = h.answer("b");
  EXPECT_EQ(section(ans, MediaKind::kVideo)->port, 0);
  EXPECT_NE(section(ans, MediaKind::kAudio)->port, 0);
  EXPECT_EQ(codecs_of(*section(ans, MediaKind::kAudio)), (std::vector<std::string>{"PCMU"}));
  EXPECT_EQ(h.endpoint("a").signaling_state, SignalingState::kStable);
  EXPECT_EQ(h.endpoint("b").signaling_state, SignalingState::kStable);
}

TEST(Answer, VideoKeepsMatchingRtx) {
  auto offer = build_offer({{MediaKind::kVideo, {"VP8", "H264"}}}, "a");
  auto ans = build_answer(offer, {{MediaKind::kVideo, {"H264"}}});
  EXPECT_EQ(codecs_of(*section(ans, MediaKind::kVideo)), (std::vector<std::string>{"H264", "rtx"}));
}

TEST(Negotiation, SoundnessProperty) {
  const std::vector<std::string> audio = {"opus", "PCMU", "PCMA", "G722", "ilbc"};
  const std::vector<std::string> video = {"VP8", "VP9", "H264", "AV1"};
  std::mt19937 rng(99);
  auto pick = [&](const std::vector<std::string>& pool) {
    std::vector<std::string> v = pool;
    std::shuffle(v.begin(), v.end(), rng);
    v.resize(std::uniform_int_distribution<std::size_t>(0, v.size())(rng));
    return v;
  };
  for (int round = 0; round < 300; ++round) {
    CodecSet offerer{{MediaKind::kAudio, pick(audio)}, {MediaKind::kVideo, pick(video)}};
    CodecSet answerer{{MediaKind::kAudio, pick(audio)}, {MediaKind::kVideo, pick(video)}};
    auto engine = make_engine();
    Harness h(*engine);
    h.add_endpoint(ep("a", Role::kCaller, offerer));
    h.add_endpoint(ep("b", Role::kCallee, answerer));
    h.generate_offer("a", "b");
    auto ans = h.answer("b");
    for (MediaKind kind : {MediaKind::kAudio, MediaKind::kVideo}) {
      const auto& mine = offerer[kind];
      const auto& theirs = answerer[kind];
      const auto* s = section(ans, kind);
      if (mine.empty()) {
        EXPECT_EQ(s, nullptr);
        continue;
      }
      ASSERT_NE(s, nullptr);
      // Oracle: first codec in the offer's order that the answerer lists.
      std::optional<std::string> expected;
      for (const auto& c : mine) {
        if (std::find(theirs.begin(), theirs.end(), c) != theirs.end()) {
          expected = c;
          break;
        }
      }
      if (!expected) {
        EXPECT_EQ(s->port, 0) << round;
      } else {
        ASSERT_NE(s->port, 0) << round;
        EXPECT_EQ(s->rtpmap.at(s->payload_ids[0]).codec, *expected) << round;
      }
    }
  }
}

TEST(Candidates, NoTransformSignalsEverything) {
  auto engine = make_engine();
  Harness h(*engine);
  auto a = ep("a", Role::kCaller);
  a.candidates = host_relay("192.168.1.10", "198.51.100.1");
  h.add_endpoint(a);
  h.add_endpoint(ep("b", Role::kCallee));
  h.generate_offer("a", "b");
  EXPECT_EQ(h.signal_candidates("a"), a.candidates);
}

TEST(Candidates, FilterAffectsSignalingOnly) {
  auto engine = make_engine();
  engine->install_transform(spec(CategoryId::kNetwork, "filter_candidates", {{"drop_host", true}}));
  Harness h(*engine);
  auto a = ep("a", Role::kCaller);
  a.candidates = host_relay("192.168.1.10", "198.51.100.1");
  auto b = ep("b", Role::kCallee);
  b.candidates = host_relay("192.168.1.20", "198.51.100.2");
  h.add_endpoint(a);
  h.add_endpoint(b);
  h.generate_offer("a", "b");
  h.answer("b");
  auto sig_a = h.signal_candidates("a");
  ASSERT_EQ(sig_a.size(), 1u);
  EXPECT_EQ(sig_a[0].type, CandidateType::kRelay);
  EXPECT_EQ(h.endpoint("a").local_candidates.size(), 2u);
  h.signal_candidates("b");
  auto& conn = h.connect("a", "b");
  ASSERT_TRUE(conn.selected_pair);
  EXPECT_EQ(conn.selected_pair->first.type, CandidateType::kHost);
  EXPECT_EQ(conn.selected_pair->second.type, CandidateType::kRelay);
}

TEST(Connect, HostPairWinsWhenNothingFiltered) {
  auto engine = make_engine();
  Harness h(*engine);
  auto a = ep("a", Role::kCaller);
  a.candidates = host_relay("192.168.1.10", "198.51.100.1");
  auto b = ep("b", Role::kCallee);
  b.candidates = host_relay("192.168.1.20", "198.51.100.2");
  h.add_endpoint(a);
  h.add_endpoint(b);
  negotiate(h, "a", "b");
  const auto& c = h.connection_of("a")->get();
  EXPECT_EQ(c.selected_pair->first.type, CandidateType::kHost);
  EXPECT_EQ(c.selected_pair->second.type, CandidateType::kHost);
  EXPECT_TRUE(c.active);
}

TEST(Connect, PairPriorityOrdersByType) {
  const auto host = compute_priority(CandidateType::kHost, 65535, 1);
  const auto srflx = compute_priority(CandidateType::kSrflx, 65535, 1);
  const auto relay = compute_priority(CandidateType::kRelay, 65535, 1);
  EXPECT_GT(pair_priority(host, host), pair_priority(srflx, srflx));
  EXPECT_GT(pair_priority(srflx, srflx), pair_priority(relay, relay));
  EXPECT_GT(pair_priority(host, relay), pair_priority(relay, relay));
}

TEST(Connect, DisjointTransportsHaveNoPair) {
  CandidateList udp = {cand("candidate:1 1 udp 2130706431 10.0.0.1 5000 typ host")};
  CandidateList tcp = {cand("candidate:1 1 tcp 2130706431 10.0.0.2 9 typ host tcptype active")};
  try {
    select_pair(udp, tcp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoViablePair);
  }
}

TEST(Connect, TieBreakIsStringOrder) {
  CandidateList local = {cand("candidate:2 1 udp 100 10.0.0.9 5000 typ host"),
                         cand("candidate:1 1 udp 100 10.0.0.1 5000 typ host")};
  CandidateList remote = {cand("candidate:1 1 udp 100 10.0.0.5 5000 typ host")};
  auto [l, r] = select_pair(local, remote);
  EXPECT_EQ(l.address, "10.0.0.1");
}

TEST(DataChannel, VetoedByDisableData) {
  auto engine = make_engine();
  engine->install_transform(spec(CategoryId::kData, "disable_data"));
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee));
  negotiate(h, "a", "b");
  try {
    h.create_datachannel("a", "chat");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kChannelVetoed);
  }
  EXPECT_FALSE(h.endpoint("a").channels.count("chat"));
}

TEST(DataChannel, UppercaseOnSend) {
  auto engine = make_engine();
  engine->install_transform(spec(CategoryId::kData, "uppercase_data", {{"context", "send"}}));
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee));
  negotiate(h, "a", "b");
  h.create_datachannel("a", "chat");
  EXPECT_EQ(h.send_data("a", "chat", "hello"), "HELLO");
  EXPECT_EQ(h.endpoint("b").channels.at("chat").received, (std::vector<std::string>{"HELLO"}));
}

TEST(DataChannel, IdentityWithoutTransformAndNotOpenBeforeConnect) {
  auto engine = make_engine();
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee));
  h.generate_offer("a", "b");
  h.answer("b");
  h.create_datachannel("a", "chat");
  EXPECT_EQ(h.endpoint("a").channels.at("chat").state, ChannelState::kConnecting);
  try {
    h.send_data("a", "chat", "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNotOpen);
  }
  h.signal_candidates("a");
  h.signal_candidates("b");
  h.connect("a", "b");
  const std::string payload("\x00\x01 bytes \xff", 10);
  EXPECT_EQ(h.send_data("a", "chat", payload), payload);
  EXPECT_EQ(h.send_data("b", "chat", "back"), "back");
}

TEST(Stats, OneMegabitForOneSecond) {
  auto engine = make_engine();
  Harness h(*engine);
  h.add_endpoint(ep("a", Role::kCaller));
  h.add_endpoint(ep("b", Role::kCallee));
  negotiate(h, "a", "b");
  auto r0 = h.synthesize_stats("a", 0);
  auto r1 = h.synthesize_stats("a", 1000);
  ASSERT_TRUE(r0 && r1);
  EXPECT_EQ(*r1->entries.at("OT01").number("bytes_sent") - *r0->entries.at("OT01").number("bytes_sent"), 125000);
  // loss 0: nothing lost
  EXPECT_EQ(*r1->entries.at("IT01").number("packets_lost"), 0);
  EXPECT_EQ(*r0->entries.at("IT01").number("packets_lost"), 0);
}

TEST(Stats, DerivedBitrateMatchesModel) {
  auto engine = make_engine();
  Harness h(*engine);
  auto a = ep("a", Role::kCaller);
  a.network.send_bitrate_bps = {{0, 640'000}};
  h.add_endpoint(a);
  h.add_endpoint(ep("b", Role::kCallee));
  negotiate(h, "a", "b");
  StatsEngine se;
  for (int t = 0; t <= 10'000; t += 700) h.synthesize_stats("a", t, &se);
  auto series = se.query_series(h.session_of("a"), "send_bitrate_bps");
  ASSERT_GE(series.points.size(), 10u);
  for (const auto& p : series.points) EXPECT_NEAR(p.value, 640'000, 6400);
}

TEST(Stats, PiecewiseProfileIntegrates) {
  NetworkModel m;
  m.send_bitrate_bps = {{0, 1000}, {1000, 3000}};
  EXPECT_DOUBLE_EQ(m.bits_between(0, 2000), 1000 + 3000);
  EXPECT_DOUBLE_EQ(m.bits_between(500, 1500), 500 + 1500);
  EXPECT_DOUBLE_EQ(m.bitrate_at(999), 1000);
  EXPECT_DOUBLE_EQ(m.bitrate_at(1000), 3000);
}

namespace {

json call_scenario() {
  return json::parse(R"({
    "name": "basic",
    "endpoints": [{"id": "alice", "role": "caller"}, {"id": "bob", "role": "callee", "ice_servers": [{"urls": "turn:turn.example.org:3478"}]}],
    "stats_interval_ms": 1000,
    "steps": [
      {"at_ms": 0, "action": "call", "params": {"from": "alice", "to": "bob"}},
      {"at_ms": 10, "action": "answer", "params": {"endpoint": "bob"}},
      {"at_ms": 20, "action": "add_candidate", "params": {"endpoint": "alice"}},
      {"at_ms": 30, "action": "add_candidate", "params": {"endpoint": "bob"}},
      {"at_ms": 40, "action": "create_datachannel", "params": {"endpoint": "alice", "label": "chat"}},
      {"at_ms": 50, "action": "send_data", "params": {"endpoint": "alice", "label": "chat", "data": "hi"}},
      {"at_ms": 3000, "action": "hangup", "params": {"endpoint": "alice"}}
    ]})");
}

std::vector<std::string> events(const ScenarioResult& r) {
  std::vector<std::string> out;
  for (const auto& e : r.transcript) out.push_back(e["event"]);
  return out;
}

}  // namespace

TEST(Scenario, CallAndHangupTranscript) {
  auto engine = make_engine();
  auto r = run_scenario(*engine, scenario_from_json(call_scenario()));
  ASSERT_TRUE(r.ok) << r.error;
  auto ev = events(r);
  auto has = [&](const std::string& name) { return std::find(ev.begin(), ev.end(), name) != ev.end(); };
  for (const char* name : {"signal", "candidate", "connection", "datachannel", "data", "stats", "hangup"}) {
    EXPECT_TRUE(has(name)) << name;
  }
  // Offer precedes answer precedes connection precedes hangup.
  auto pos = [&](const std::function<bool(const json&)>& f) {
    for (std::size_t i = 0; i < r.transcript.size(); ++i) {
      if (f(r.transcript[i])) return i;
    }
    return r.transcript.size();
  };
  auto offer = pos([](const json& e) { return e["event"] == "signal" && e["kind"] == "offer"; });
  auto answer = pos([](const json& e) { return e["event"] == "signal" && e["kind"] == "answer"; });
  auto conn = pos([](const json& e) { return e["event"] == "connection"; });
  auto bye = pos([](const json& e) { return e["event"] == "hangup"; });
  EXPECT_LT(offer, answer);
  EXPECT_LT(answer, conn);
  EXPECT_LT(conn, bye);
  EXPECT_LT(bye, r.transcript.size());
  // Stats ticks at 1000 and 2000 for both endpoints.
  EXPECT_EQ(std::count(ev.begin(), ev.end(), "stats"), 4);
}

TEST(Scenario, VirtualClockIsByteIdentical) {
  auto sc = scenario_from_json(call_scenario());
  sc.transforms.push_back(spec(CategoryId::kRequest, "fake_response", {{"match", "*"}, {"probability", 0.5}}));
  auto e1 = make_engine(42), e2 = make_engine(42);
  auto r1 = run_scenario(*e1, sc);
  auto r2 = run_scenario(*e2, sc);
  ASSERT_TRUE(r1.ok);
  EXPECT_EQ(to_ndjson(r1.transcript), to_ndjson(r2.transcript));
}

TEST(Scenario, StepFailureKeepsPartialTranscript) {
  auto j = call_scenario();
  j["steps"][1] = {{"at_ms", 10}, {"action", "answer"}, {"params", {{"endpoint", "alice"}}}};
  auto engine = make_engine();
  auto r = run_scenario(*engine, scenario_from_json(j));
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.failed_step);
  EXPECT_EQ(*r.failed_step, 1u);
  EXPECT_NE(r.error.find("StepFailed(1, WrongState)"), std::string::npos) << r.error;
  EXPECT_EQ(r.transcript.back()["event"], "end");
  auto ev = events(r);
  EXPECT_EQ(std::count(ev.begin(), ev.end(), "step"), 2);
}

TEST(Scenario, RejectsBadInput) {
  auto j = call_scenario();
  j["steps"][2]["at_ms"] = 5;
  EXPECT_THROW(scenario_from_json(j), Error);
  j = call_scenario();
  j["steps"][0]["action"] = "teleport";
  EXPECT_THROW(scenario_from_json(j), Error);
  j = call_scenario();
  j["endpoints"][1]["id"] = "alice";
  EXPECT_THROW(scenario_from_json(j), Error);
}

TEST(Scenario, MidCallLossIsRecovered) {
  auto j = call_scenario();
  j["steps"][6] = {{"at_ms", 5000}, {"action", "set_network"}, {"params", {{"loss_fraction", 0.05}}}};
  j["steps"].push_back({{"at_ms", 30000}, {"action", "hangup"}, {"params", {{"endpoint", "alice"}}}});
  auto engine = make_engine();
  auto r = run_scenario(*engine, scenario_from_json(j));
  ASSERT_TRUE(r.ok) << r.error;
  auto series = r.stats->query_series("basic/alice", "packet_loss_rate", 6000, 1e9);
  ASSERT_GE(series.points.size(), 20u);
  double sum = 0;
  for (const auto& p : series.points) sum += p.value;
  EXPECT_NEAR(sum / series.points.size(), 0.05, 0.005);
  auto before = r.stats->query_series("basic/alice", "packet_loss_rate", 0, 4999);
  for (const auto& p : before.points) EXPECT_EQ(p.value, 0);
}

TEST(Scenario, EnterpriseRelayEndToEnd) {
  auto j = call_scenario();
  j["transforms"] = {{"Connect", {{"builtin", "enterprise_relay"}, {"params", {{"url", "turn:relay.corp.example:3478"}}}}}};
  auto engine = make_engine();
  auto sc = scenario_from_json(j);
  auto r = run_scenario(*engine, sc);
  ASSERT_TRUE(r.ok) << r.error;
  int candidates = 0;
  for (const auto& e : r.transcript) {
    if (e["event"] == "endpoint") {
      ASSERT_EQ(e["peer_config"]["ice_servers"].size(), 1u);
      EXPECT_EQ(e["peer_config"]["ice_transport_policy"], "relay");
    }
    if (e["event"] == "candidate") {
      auto c = parse_candidate(e["candidate"].get<std::string>());
      EXPECT_EQ(c.type, CandidateType::kRelay);
      EXPECT_EQ(c.address, "relay.corp.example");
      ++candidates;
    }
  }
  EXPECT_EQ(candidates, 2);
  // Previous (empty) Connect slot restored.
  EXPECT_FALSE(engine->active(CategoryId::kConnect));
}

TEST(Scenario, AdaptiveLoopCapsNextCapture) {
  auto j = json::parse(R"({
    "name": "adaptive",
    "endpoints": [{"id": "cam", "constraints": {"video": {"frame_rate": {"ideal": 30}, "height": {"ideal": 720}}}}],
    "transforms": {"Cpu": {"builtin": "threshold", "params": {"threshold": 75}},
                   "Media": {"builtin": "adaptive_constraints"}},
    "steps": [
      {"at_ms": 0, "action": "get_user_media", "params": {"endpoint": "cam"}},
      {"at_ms": 100, "action": "cpu_sample", "params": {"load": 80}},
      {"at_ms": 200, "action": "get_user_media", "params": {"endpoint": "cam"}},
      {"at_ms": 300, "action": "cpu_sample", "params": {"load": 20}},
      {"at_ms": 400, "action": "get_user_media", "params": {"endpoint": "cam"}}
    ]})");
  auto engine = make_engine();
  auto r = run_scenario(*engine, scenario_from_json(j));
  ASSERT_TRUE(r.ok) << r.error;
  std::vector<json> media;
  for (const auto& e : r.transcript) {
    if (e["event"] == "media") media.push_back(e["constraints"]);
  }
  ASSERT_EQ(media.size(), 3u);
  EXPECT_FALSE(media[0]["video"].contains("frame_rate") && media[0]["video"]["frame_rate"].contains("max"));
  EXPECT_EQ(media[1]["video"]["frame_rate"]["max"], 10);
  EXPECT_EQ(media[1]["video"]["height"]["max"], 320);
  EXPECT_FALSE(media[2]["video"]["frame_rate"].contains("max"));
  EXPECT_EQ(engine->controls()->get("cpu.load"), Scalar{20.0});
}

TEST(StateMachine, RandomOperationsStayDefined) {
  std::mt19937 rng(5);
  for (int round = 0; round < 200; ++round) {
    auto engine = make_engine(round);
    Harness h(*engine);
    h.add_endpoint(ep("a", Role::kCaller));
    h.add_endpoint(ep("b", Role::kCallee));
    h.add_endpoint(ep("c", Role::kCallee));
    const std::vector<std::string> ids = {"a", "b", "c"};
    for (int op = 0; op < 30; ++op) {
      const auto& x = ids[rng() % 3];
      const auto& y = ids[rng() % 3];
      try {
        switch (rng() % 7) {
          case 0: h.generate_offer(x, y); break;
          case 1: h.answer(x); break;
          case 2: h.signal_candidates(x); break;
          case 3: h.connect(x, y); break;
          case 4: h.create_datachannel(x, "d"); break;
          case 5: h.send_data(x, "d", "m"); break;
          case 6: h.hangup(x); break;
        }
      } catch (const Error& e) {
        const std::set<Errc> allowed = {Errc::kWrongState, Errc::kNotOpen, Errc::kInvalidValue, Errc::kNoViablePair};
        EXPECT_TRUE(allowed.count(e.code())) << errc_name(e.code()) << ": " << e.what();
      }
      // have_local_offer only with an outstanding local offer; peers agree.
      for (const auto& id : ids) {
        const auto& e = h.endpoint(id);
        if (e.signaling_state == SignalingState::kHaveLocalOffer) EXPECT_TRUE(e.local_description);
        if (e.signaling_state == SignalingState::kHaveRemoteOffer) EXPECT_TRUE(e.remote_description);
        // Renegotiation may move a connected endpoint out of stable; the
        // connection itself is shared by both ends.
        if (auto c = h.connection_of(id)) {
          const auto& conn = c->get();
          EXPECT_TRUE(conn.active);
          const auto& other = conn.a == id ? conn.b : conn.a;
          auto back = h.connection_of(other);
          ASSERT_TRUE(back);
          EXPECT_EQ(&back->get(), &conn);
        }
        for (const auto& [_, ch] : e.channels) {
          if (ch.state != ChannelState::kOpen) EXPECT_TRUE(ch.state == ChannelState::kConnecting || ch.state == ChannelState::kClosed);
        }
      }
    }
  }
}

TEST(Caveat, FilteredCandidateStaysEligibleProperty) {
  std::mt19937 rng(11);
  for (int round = 0; round < 200; ++round) {
    auto engine = make_engine(round);
    CandidatePolicy policy;
    policy.drop_host = rng() % 2;
    policy.drop_private = rng() % 2;
    policy.relay_only = !policy.drop_host && !policy.drop_private;
    engine->install_transform(spec(CategoryId::kNetwork, "filter_candidates",
                                   {{"drop_host", policy.drop_host}, {"drop_private", policy.drop_private},
                                    {"relay_only", policy.relay_only}}));
    Harness h(*engine);
    auto a = ep("a", Role::kCaller);
    a.candidates = host_relay(fmt::format("10.0.{}.{}", rng() % 200, rng() % 200 + 1), "198.51.100.1");
    auto b = ep("b", Role::kCallee);
    b.candidates = host_relay("192.168.5.5", fmt::format("198.51.100.{}", rng() % 200 + 2));
    h.add_endpoint(a);
    h.add_endpoint(b);
    negotiate(h, "a", "b");
    const auto& conn = h.connection_of("a")->get();
    for (const auto& c : conn.signaled_a) EXPECT_TRUE(policy_admits(c, policy));
    // Full local list stays; the host candidate has the highest priority and wins.
    EXPECT_EQ(h.endpoint("a").local_candidates.size(), 2u);
    EXPECT_EQ(conn.selected_pair->first.type, CandidateType::kHost) << round;
  }
}

TEST(Gather, ServersDecideCandidateTypes) {
  auto engine = make_engine();
  Harness h(*engine);
  h.add_endpoint(ep("bare", Role::kCaller));
  auto s = ep("full", Role::kCallee);
  s.peer_config.ice_servers = {{{"stun:stun.example.org"}, {}, {}}, {{"turn:10.1.1.1:3478?transport=tcp"}, std::string("u"), std::string("p")}};
  h.add_endpoint(s);
  EXPECT_EQ(h.endpoint("bare").local_candidates.size(), 1u);
  const auto& full = h.endpoint("full").local_candidates;
  ASSERT_EQ(full.size(), 3u);
  EXPECT_EQ(full[0].type, CandidateType::kHost);
  EXPECT_EQ(full[1].type, CandidateType::kSrflx);
  EXPECT_EQ(full[2].type, CandidateType::kRelay);
  EXPECT_EQ(full[2].address, "10.1.1.1");
  EXPECT_EQ(full[2].transport, Transport::kTcp);
}

TEST(Proxied, ScenarioSignalsThroughTheProxy) {
  EchoServer echo;
  echo.start();
  std::shared_ptr<Engine> engine = make_engine();
  auto pipeline = std::make_shared<SignalPipeline>(engine);
  ProxyOptions po;
  po.listen_host = "127.0.0.1";
  po.listen_port = 0;
  po.upstream = fmt::format("ws://127.0.0.1:{}", echo.port());
  ProxyServer proxy(po, pipeline);
  proxy.start();

  ScenarioOptions so;
  so.link = std::make_shared<WebSocketLink>(fmt::format("ws://127.0.0.1:{}/signal", proxy.port()));
  auto direct = run_scenario(*make_engine(), scenario_from_json(call_scenario()));
  auto proxied = run_scenario(*engine, scenario_from_json(call_scenario()), so);
  ASSERT_TRUE(proxied.ok) << proxied.error;
  EXPECT_EQ(to_ndjson(direct.transcript), to_ndjson(proxied.transcript));
  EXPECT_GT(pipeline->sessions().at(0).counters.msgs_c2s, 3u);
  proxy.stop();
  echo.stop();
}
