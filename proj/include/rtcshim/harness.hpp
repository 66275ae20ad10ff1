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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rtcshim/engine.hpp"
#include "rtcshim/ice.hpp"
#include "rtcshim/media_config.hpp"
#include "rtcshim/sdp.hpp"
#include "rtcshim/stats.hpp"

namespace rtcshim {

enum class Role { kCaller, kCallee };
enum class SignalingState { kStable, kHaveLocalOffer, kHaveRemoteOffer };
enum class ChannelState { kConnecting, kOpen, kClosed };

std::string_view to_string(Role r);
std::string_view to_string(SignalingState s);
std::string_view to_string(ChannelState s);

struct RatePoint {
  double from_ms = 0;
  double bps = 0;

  bool operator==(const RatePoint&) const = default;
};

struct NetworkModel {
  double loss_fraction = 0;
  double rtt_ms = 0;
  double jitter_ms = 0;
  // Piecewise constant on the scenario timeline, sorted by from_ms. The first
  // rate also covers times before its from_ms.
  std::vector<RatePoint> send_bitrate_bps{{0, 1'000'000}};

  double bitrate_at(double t_ms) const;
  // Integral of the rate over [t0, t1], in bits.
  double bits_between(double t0_ms, double t1_ms) const;

  bool operator==(const NetworkModel&) const = default;
};

// Throws Error(kInvalidValue).
void validate(const NetworkModel& m);
json to_json(const NetworkModel& m);
// "send_bitrate_bps" may be a number or [{from_ms, bps}, ...]; absent fields
// keep their value in `base`.
NetworkModel network_model_from_json(const json& j, NetworkModel base = {});

using CodecSet = std::map<MediaKind, std::vector<std::string>>;

json to_json(const CodecSet& c);
CodecSet codec_set_from_json(const json& j);
CodecSet default_codec_set();

struct EndpointSpec {
  std::string id;
  Role role = Role::kCaller;
  CodecSet codecs = default_codec_set();
  // Empty means: gather from peer_config (host always, srflx with any
  // server, one relay per TURN url).
  CandidateList candidates;
  PeerConfig peer_config;
  EncodingParams encoding;
  MediaConstraints constraints;
  NetworkModel network;
};

EndpointSpec endpoint_spec_from_json(const json& j);

struct DataChannelSim {
  std::string label;
  ChannelState state = ChannelState::kConnecting;
  std::vector<std::string> sent;
  std::vector<std::string> received;
};

struct SimEndpoint {
  std::string id;
  Role role = Role::kCaller;
  CodecSet codec_set;
  CandidateList local_candidates;
  SignalingState signaling_state = SignalingState::kStable;
  // After the Connect dispatch at creation.
  PeerConfig peer_config;
  EncodingParams encoding;
  // Requested constraints, and what the last getUserMedia dispatch made of
  // them.
  MediaConstraints constraints;
  std::optional<MediaConstraints> captured;
  NetworkModel network_model;

  std::optional<SessionDescription> local_description;
  std::optional<SessionDescription> remote_description;
  // Post-filter list this endpoint handed to signaling.
  std::optional<CandidateList> signaled;
  std::map<std::string, DataChannelSim> channels;
};

struct SimConnection {
  std::string a;
  std::string b;
  std::map<MediaKind, std::string> negotiated;
  CandidateList signaled_a;
  CandidateList signaled_b;
  // local half from a's full list, remote half from b's signaled list.
  std::optional<std::pair<IceCandidate, IceCandidate>> selected_pair;
  bool active = false;
};

// RFC 8445 pair priority with `g` as the controlling side.
std::uint64_t pair_priority(std::uint32_t g, std::uint32_t d);

// Best pair from local × remote with matching transport and component;
// ties go to the lexicographically smaller "local remote" string. Throws
// Error(kNoViablePair).
std::pair<IceCandidate, IceCandidate> select_pair(const CandidateList& local, const CandidateList& remote);

// Answer rule: per offered section, keep the first offered codec the callee
// supports (plus its rtx), else reject the section with port 0.
SessionDescription build_answer(const SessionDescription& offer, const CodecSet& supported);

// Offer built from an endpoint's codec set; one section per kind in the set.
SessionDescription build_offer(const CodecSet& codecs, const std::string& origin_id);

// Carries serialized signaling between endpoints. The default hands the
// message straight over; a proxied link round-trips it through a WebSocket.
class SignalingLink {
 public:
  virtual ~SignalingLink() = default;
  // Returns what the far side receives, or nullopt when the message was
  // consumed on the way.
  virtual std::optional<std::string> carry(const std::string& from, const std::string& to,
                                           const std::string& message) = 0;
};

class DirectLink : public SignalingLink {
 public:
  std::optional<std::string> carry(const std::string&, const std::string&, const std::string& message) override {
    return message;
  }
};

// Sends each message over one WebSocket (through the signaling proxy to an
// echo upstream) and takes the frame coming back as the delivered message.
class WebSocketLink : public SignalingLink {
 public:
  explicit WebSocketLink(std::string url, std::int64_t timeout_ms = 2000);
  ~WebSocketLink() override;
  std::optional<std::string> carry(const std::string& from, const std::string& to,
                                   const std::string& message) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct HarnessOptions {
  // Engine session ids are "<session_prefix>/<endpoint id>".
  std::string session_prefix = "harness";
  // Bytes per synthesized packet.
  double packet_bytes = 1200;
  std::shared_ptr<SignalingLink> link;
};

// Deterministic set of endpoints sharing one engine. Every artifact crosses
// its category dispatch on the sending side. Not thread-safe.
class Harness {
 public:
  using Sink = std::function<void(json)>;

  Harness(Engine& engine, HarnessOptions options = {});

  // Runs Connect ("RTCPeerConnection") over the peer config, then gathers.
  SimEndpoint& add_endpoint(const EndpointSpec& spec);
  SimEndpoint& endpoint(const std::string& id);
  const SimEndpoint& endpoint(const std::string& id) const;
  std::vector<std::string> endpoint_ids() const;
  std::string session_of(const std::string& endpoint_id) const;

  // Session dispatch "createOffer"; the result is what the callee gets.
  // Throws Error(kWrongState) unless both sides are stable.
  SessionDescription generate_offer(const std::string& caller, const std::string& callee);
  // Session dispatch "createAnswer"; delivered to the caller, which applies
  // it. Throws Error(kWrongState).
  SessionDescription answer(const std::string& callee);

  // Lower level halves of `answer`.
  SessionDescription generate_answer(const std::string& callee);
  void apply_answer(const std::string& caller, const SessionDescription& answer);

  // Network dispatch "icecandidate" over the local list; returns what the
  // peer receives. Throws Error(kWrongState) before negotiation began.
  CandidateList signal_candidates(const std::string& id);

  // Pairs once both sides signaled. Throws Error(kNoViablePair).
  SimConnection& connect(const std::string& a, const std::string& b);
  std::optional<std::reference_wrapper<const SimConnection>> connection_of(const std::string& id) const;

  // Data dispatch "createDataChannel"; the peer gets a channel of the same
  // label. Throws Error(kChannelVetoed).
  DataChannelSim& create_datachannel(const std::string& id, const std::string& label);
  // Data "send" on the sender, "message" on the receiver. Returns what the
  // receiver's log got, nullopt if consumed. Throws Error(kNotOpen).
  std::optional<std::string> send_data(const std::string& id, const std::string& label, const std::string& data);

  // Media dispatch "getUserMedia" over the endpoint's constraints.
  MediaConstraints get_user_media(const std::string& id);
  // Session dispatch "setParameters" over the endpoint's encoding.
  EncodingParams set_parameters(const std::string& id, const EncodingParams& params);

  // Advances counters of every active connection to t_ms, then swaps the
  // model in.
  void set_network(const std::string& id, const NetworkModel& model, double t_ms);

  // Report for `id` at t_ms after the Stats dispatch ("getStats"); nullopt
  // when a transform swallowed it. Fed to `stats` when given.
  std::optional<StatsReport> synthesize_stats(const std::string& id, double t_ms, StatsEngine* stats = nullptr);

  void hangup(const std::string& id);

  // Timeline position used for connection start and signaling records.
  void set_time(double t_ms) { now_ms_ = t_ms; }
  double now() const { return now_ms_; }

  // Receives every signaling/connection/data/stats event.
  void set_sink(Sink sink) { sink_ = std::move(sink); }
  Engine& engine() { return engine_; }

 private:
  struct Counters {
    double t_ms = 0;
    double bytes_sent = 0, packets_sent = 0;
    double bytes_received = 0, packets_received = 0, packets_lost = 0;
    bool started = false;
  };

  InterceptContext ctx(const std::string& id, std::string context, bool event = false) const;
  std::string peer_of(const std::string& id) const;
  SimConnection* find_connection(const std::string& id);
  void advance(SimConnection& c, double t_ms);
  void emit(json j);
  std::optional<std::string> carry(const std::string& from, const std::string& to, const json& message);

  Engine& engine_;
  HarnessOptions options_;
  std::map<std::string, SimEndpoint> endpoints_;
  // caller -> callee while an offer is outstanding or a call is up.
  std::map<std::string, std::string> peers_;
  std::vector<SimConnection> connections_;
  std::map<std::string, Counters> counters_;
  Sink sink_;
  double now_ms_ = 0;
};

// ---- scenarios ----

enum class ClockMode { kVirtual, kWall };

struct ScenarioStep {
  double at_ms = 0;
  // call | answer | add_candidate | create_datachannel | send_data |
  // set_network | trigger_control | set_control | cpu_sample |
  // get_user_media | set_parameters | get_stats | hangup
  std::string action;
  json params = json::object();
};

struct Scenario {
  std::string name;
  ClockMode clock = ClockMode::kVirtual;
  std::vector<EndpointSpec> endpoints;
  // Installed before the first step; uninstalled afterwards.
  std::vector<TransformSpec> transforms;
  // Periodic synthesized stats for connected endpoints; 0 disables.
  std::int64_t stats_interval_ms = 0;
  std::vector<ScenarioStep> steps;
};

const std::vector<std::string>& scenario_actions();

// Throws Error(kInvalidValue) for unknown actions, decreasing at_ms, bad
// endpoint specs or duplicate ids.
Scenario scenario_from_json(const json& j);
json to_json(const Scenario& s);

struct ScenarioResult {
  bool ok = true;
  std::optional<std::size_t> failed_step;
  std::string error;
  std::vector<json> transcript;
  // Derived metrics keyed by engine session id.
  std::shared_ptr<StatsEngine> stats;
};

std::string to_ndjson(const std::vector<json>& transcript);

struct ScenarioOptions {
  std::string session_prefix;  // defaults to the scenario name
  std::shared_ptr<SignalingLink> link;
  std::shared_ptr<StatsEngine> stats;
};

// Runs on one timeline. Step errors end the run with ok=false and a
// StepFailed record carrying the index and cause; the partial transcript is
// kept.
ScenarioResult run_scenario(Engine& engine, const Scenario& scenario, const ScenarioOptions& options = {});

}  // namespace rtcshim
