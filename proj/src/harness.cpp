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

#include "rtcshim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "rtcshim/cpu_monitor.hpp"
#include "rtcshim/error.hpp"
#include "rtcshim/net_tools.hpp"
#include "text_util.hpp"

namespace rtcshim {

std::string_view to_string(Role r) { return r == Role::kCaller ? "caller" : "callee"; }

std::string_view to_string(SignalingState s) {
  switch (s) {
    case SignalingState::kStable: return "stable";
    case SignalingState::kHaveLocalOffer: return "have_local_offer";
    case SignalingState::kHaveRemoteOffer: return "have_remote_offer";
  }
  return "?";
}

std::string_view to_string(ChannelState s) {
  switch (s) {
    case ChannelState::kConnecting: return "connecting";
    case ChannelState::kOpen: return "open";
    case ChannelState::kClosed: return "closed";
  }
  return "?";
}

// ---- network model ----

double NetworkModel::bitrate_at(double t_ms) const {
  if (send_bitrate_bps.empty()) return 0;
  double rate = send_bitrate_bps.front().bps;
  for (const auto& p : send_bitrate_bps) {
    if (p.from_ms <= t_ms) rate = p.bps;
  }
  return rate;
}

double NetworkModel::bits_between(double t0_ms, double t1_ms) const {
  if (t1_ms <= t0_ms || send_bitrate_bps.empty()) return 0;
  double bits = 0, t = t0_ms;
  for (std::size_t i = 0; i < send_bitrate_bps.size() && t < t1_ms; ++i) {
    const double end = i + 1 < send_bitrate_bps.size() ? send_bitrate_bps[i + 1].from_ms : t1_ms;
    if (end <= t) continue;
    const double seg_end = std::min(end, t1_ms);
    bits += send_bitrate_bps[i].bps * (seg_end - t) / 1000.0;
    t = seg_end;
  }
  return bits;
}

void validate(const NetworkModel& m) {
  auto bad = [](const std::string& what) { throw Error(Errc::kInvalidValue, "network model: " + what); };
  if (!(m.loss_fraction >= 0 && m.loss_fraction <= 1)) bad("loss_fraction must be within [0,1]");
  if (!(m.rtt_ms >= 0) || !std::isfinite(m.rtt_ms)) bad("rtt_ms must be non-negative");
  if (!(m.jitter_ms >= 0) || !std::isfinite(m.jitter_ms)) bad("jitter_ms must be non-negative");
  if (m.send_bitrate_bps.empty()) bad("send_bitrate_bps is empty");
  double last = -1e300;
  for (const auto& p : m.send_bitrate_bps) {
    if (!(p.bps >= 0) || !std::isfinite(p.bps)) bad("bitrate must be non-negative");
    if (p.from_ms < last) bad("bitrate profile must be sorted by from_ms");
    last = p.from_ms;
  }
}

json to_json(const NetworkModel& m) {
  json profile = json::array();
  for (const auto& p : m.send_bitrate_bps) profile.push_back({{"from_ms", p.from_ms}, {"bps", p.bps}});
  return {{"loss_fraction", m.loss_fraction}, {"rtt_ms", m.rtt_ms}, {"jitter_ms", m.jitter_ms},
          {"send_bitrate_bps", profile}};
}

NetworkModel network_model_from_json(const json& j, NetworkModel base) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "network model must be an object");
  auto num = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw Error(Errc::kInvalidValue, fmt::format("network model: {} must be a number", key));
    out = j[key].get<double>();
  };
  num("loss_fraction", base.loss_fraction);
  if (j.contains("loss")) num("loss", base.loss_fraction);
  num("rtt_ms", base.rtt_ms);
  num("jitter_ms", base.jitter_ms);
  if (j.contains("send_bitrate_bps")) {
    const auto& b = j["send_bitrate_bps"];
    base.send_bitrate_bps.clear();
    if (b.is_number()) {
      base.send_bitrate_bps.push_back({0, b.get<double>()});
    } else if (b.is_array()) {
      for (const auto& p : b) {
        if (!p.is_object() || !p.contains("bps") || !p["bps"].is_number()) {
          throw Error(Errc::kInvalidValue, "network model: profile points need bps");
        }
        base.send_bitrate_bps.push_back({p.value("from_ms", 0.0), p["bps"].get<double>()});
      }
    } else {
      throw Error(Errc::kInvalidValue, "network model: send_bitrate_bps must be a number or a list");
    }
  }
  validate(base);
  return base;
}

// ---- codecs ----

json to_json(const CodecSet& c) {
  json j = json::object();
  for (const auto& [kind, names] : c) j[std::string(to_string(kind))] = names;
  return j;
}

CodecSet codec_set_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "codecs must be an object of kind -> [names]");
  CodecSet c;
  for (const auto& [k, v] : j.items()) {
    auto kind = parse_media_kind(k);
    if (!kind || *kind == MediaKind::kApplication) throw Error(Errc::kInvalidValue, "unknown media kind " + k);
    if (!v.is_array()) throw Error(Errc::kInvalidValue, "codec list for " + k + " must be an array");
    auto& names = c[*kind];
    for (const auto& n : v) {
      if (!n.is_string() || n.get<std::string>().empty()) throw Error(Errc::kInvalidValue, "codec names are strings");
      names.push_back(n.get<std::string>());
    }
  }
  return c;
}

CodecSet default_codec_set() {
  return {{MediaKind::kAudio, {"opus", "PCMU", "PCMA"}}, {MediaKind::kVideo, {"VP8", "H264"}}};
}

namespace {

struct KnownCodec {
  const char* name;
  MediaKind kind;
  int pt;
  int clock;
  std::optional<int> channels;
  const char* fmtp;
  int rtx_pt;  // 0: none
};

const KnownCodec kKnown[] = {
    {"opus", MediaKind::kAudio, 111, 48000, 2, "minptime=10;useinbandfec=1", 0},
    {"PCMU", MediaKind::kAudio, 0, 8000, std::nullopt, nullptr, 0},
    {"PCMA", MediaKind::kAudio, 8, 8000, std::nullopt, nullptr, 0},
    {"G722", MediaKind::kAudio, 9, 8000, std::nullopt, nullptr, 0},
    {"telephone-event", MediaKind::kAudio, 126, 8000, std::nullopt, nullptr, 0},
    {"VP8", MediaKind::kVideo, 96, 90000, std::nullopt, nullptr, 97},
    {"VP9", MediaKind::kVideo, 98, 90000, std::nullopt, "profile-id=0", 99},
    {"H264", MediaKind::kVideo, 102, 90000, std::nullopt,
     "level-asymmetry-allowed=1;packetization-mode=1;profile-level-id=42e01f", 103},
    {"AV1", MediaKind::kVideo, 45, 90000, std::nullopt, nullptr, 46},
};

const KnownCodec* known(MediaKind kind, std::string_view name) {
  for (const auto& k : kKnown) {
    if (k.kind == kind && detail::iequals(k.name, name)) return &k;
  }
  return nullptr;
}

std::string origin_line(const std::string& id) {
  return fmt::format("o=- {} 2 IN IP4 127.0.0.1", detail::fnv1a(id) % 10'000'000'000'000ULL);
}

}  // namespace

SessionDescription build_offer(const CodecSet& codecs, const std::string& origin_id) {
  std::vector<std::string> lines = {"v=0", origin_line(origin_id), "s=-", "t=0 0"};
  std::vector<std::pair<MediaKind, const std::vector<std::string>*>> kinds;
  for (const auto& [kind, names] : codecs) {
    if (!names.empty()) kinds.emplace_back(kind, &names);
  }
  std::string bundle = "a=group:BUNDLE";
  for (std::size_t i = 0; i < kinds.size(); ++i) bundle += fmt::format(" {}", i);
  if (!kinds.empty()) lines.push_back(bundle);
  lines.push_back("a=msid-semantic: WMS");

  std::set<int> used;
  for (const auto& k : kKnown) {
    used.insert(k.pt);
    if (k.rtx_pt) used.insert(k.rtx_pt);
  }
  int next_dynamic = 35;
  auto dynamic = [&] {
    while (used.count(next_dynamic)) ++next_dynamic;
    if (next_dynamic > 127) throw Error(Errc::kInvalidValue, "too many codecs for the payload type space");
    used.insert(next_dynamic);
    return next_dynamic;
  };

  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const auto kind = kinds[i].first;
    const bool video = kind == MediaKind::kVideo;
    std::vector<int> pts;
    std::vector<std::string> attrs;
    std::set<std::string> seen;
    for (const auto& name : *kinds[i].second) {
      if (!seen.insert(detail::to_lower(name)).second) continue;
      const KnownCodec* k = known(kind, name);
      const int pt = k ? k->pt : dynamic();
      pts.push_back(pt);
      const int clock = k ? k->clock : (video ? 90000 : 48000);
      std::string rtpmap = fmt::format("a=rtpmap:{} {}/{}", pt, k ? k->name : name, clock);
      if (k && k->channels) rtpmap += fmt::format("/{}", *k->channels);
      attrs.push_back(rtpmap);
      if (video) {
        for (const char* fb : {"goog-remb", "transport-cc", "ccm fir", "nack", "nack pli"}) {
          attrs.push_back(fmt::format("a=rtcp-fb:{} {}", pt, fb));
        }
      } else if (k && std::string_view(k->name) == "opus") {
        attrs.push_back(fmt::format("a=rtcp-fb:{} transport-cc", pt));
      }
      if (k && k->fmtp) attrs.push_back(fmt::format("a=fmtp:{} {}", pt, k->fmtp));
      if (video) {
        const int rtx = (k && k->rtx_pt) ? k->rtx_pt : dynamic();
        pts.push_back(rtx);
        attrs.push_back(fmt::format("a=rtpmap:{} rtx/90000", rtx));
        attrs.push_back(fmt::format("a=fmtp:{} apt={}", rtx, pt));
      }
    }
    std::string m = fmt::format("m={} 9 UDP/TLS/RTP/SAVPF", to_string(kind));
    for (int pt : pts) m += fmt::format(" {}", pt);
    lines.push_back(m);
    lines.push_back("c=IN IP4 0.0.0.0");
    lines.push_back("a=rtcp:9 IN IP4 0.0.0.0");
    lines.push_back(fmt::format("a=mid:{}", i));
    lines.push_back("a=sendrecv");
    lines.push_back("a=rtcp-mux");
    for (auto& a : attrs) lines.push_back(std::move(a));
  }

  std::string text;
  for (const auto& l : lines) text += l + "\r\n";
  return parse_sdp(text, SdpType::kOffer);
}

namespace {

bool is_rtx(const MediaSection& s, int pt) {
  auto c = s.codec_of(pt);
  return c && detail::iequals(*c, "rtx");
}

std::optional<int> apt_of(const MediaSection& s, int pt) {
  auto it = s.fmtp.find(pt);
  if (it == s.fmtp.end()) return std::nullopt;
  for (const auto& p : it->second) {
    if (p.key == "apt" && p.value) {
      try {
        return std::stoi(*p.value);
      } catch (...) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

bool supports(const CodecSet& set, MediaKind kind, const std::string& codec) {
  auto it = set.find(kind);
  if (it == set.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](const std::string& n) { return codec_matches(codec, n); });
}

std::optional<std::string> first_codec(const MediaSection& s) {
  if (s.port == 0) return std::nullopt;
  for (int pt : s.payload_ids) {
    if (is_rtx(s, pt)) continue;
    if (auto c = s.codec_of(pt)) return c;
  }
  return std::nullopt;
}

}  // namespace

SessionDescription build_answer(const SessionDescription& offer, const CodecSet& supported) {
  SessionDescription answer = offer;
  answer.type = SdpType::kAnswer;
  for (auto& s : answer.media_sections) {
    s.candidates.clear();
    if (s.port == 0) continue;
    std::optional<int> chosen;
    for (int pt : s.payload_ids) {
      if (is_rtx(s, pt)) continue;
      auto codec = s.codec_of(pt);
      if (codec && supports(supported, s.kind, *codec)) {
        chosen = pt;
        break;
      }
    }
    if (!chosen) {
      s.port = 0;
      continue;
    }
    std::vector<int> keep = {*chosen};
    for (int pt : s.payload_ids) {
      if (is_rtx(s, pt) && apt_of(s, pt) == chosen) keep.push_back(pt);
    }
    const std::set<int> live(keep.begin(), keep.end());
    std::erase_if(s.rtpmap, [&](const auto& kv) { return !live.count(kv.first); });
    std::erase_if(s.fmtp, [&](const auto& kv) { return !live.count(kv.first); });
    std::erase_if(s.rtcp_fb, [&](const auto& kv) { return !live.count(kv.first); });
    s.payload_ids = keep;
  }
  return answer;
}

// ---- pairing ----

std::uint64_t pair_priority(std::uint32_t g, std::uint32_t d) {
  const std::uint64_t lo = std::min(g, d), hi = std::max(g, d);
  return (lo << 32) + 2 * hi + (g > d ? 1 : 0);
}

std::pair<IceCandidate, IceCandidate> select_pair(const CandidateList& local, const CandidateList& remote) {
  const IceCandidate* best_l = nullptr;
  const IceCandidate* best_r = nullptr;
  std::uint64_t best = 0;
  std::string best_key;
  for (const auto& l : local) {
    for (const auto& r : remote) {
      if (l.transport != r.transport || l.component != r.component) continue;
      const auto p = pair_priority(l.priority, r.priority);
      std::string key = serialize_candidate(l) + " " + serialize_candidate(r);
      if (!best_l || p > best || (p == best && key < best_key)) {
        best_l = &l;
        best_r = &r;
        best = p;
        best_key = std::move(key);
      }
    }
  }
  if (!best_l) throw Error(Errc::kNoViablePair, "no candidate pair with matching transport");
  return {*best_l, *best_r};
}

// ---- endpoint specs ----

namespace {

struct ServerAddr {
  std::string host;
  int port = 3478;
  Transport transport = Transport::kUdp;
};

std::optional<ServerAddr> server_addr(const std::string& url) {
  auto colon = url.find(':');
  if (colon == std::string::npos) return std::nullopt;
  std::string rest = url.substr(colon + 1);
  ServerAddr a;
  if (url.rfind("turns:", 0) == 0 || url.rfind("stuns:", 0) == 0) {
    a.port = 5349;
    a.transport = Transport::kTcp;
  }
  if (auto q = rest.find('?'); q != std::string::npos) {
    if (rest.find("transport=tcp", q) != std::string::npos) a.transport = Transport::kTcp;
    rest.resize(q);
  }
  if (!rest.empty() && rest[0] == '[') {
    auto close = rest.find(']');
    if (close == std::string::npos) return std::nullopt;
    a.host = rest.substr(1, close - 1);
    if (close + 1 < rest.size() && rest[close + 1] == ':') a.port = std::atoi(rest.c_str() + close + 2);
  } else if (auto pc = rest.rfind(':'); pc != std::string::npos) {
    a.host = rest.substr(0, pc);
    a.port = std::atoi(rest.c_str() + pc + 1);
  } else {
    a.host = rest;
  }
  if (a.host.empty()) return std::nullopt;
  return a;
}

IceCandidate make_candidate(std::string foundation, CandidateType type, Transport transport, std::string address,
                            int port, std::uint32_t local_pref, std::optional<std::pair<std::string, int>> related) {
  IceCandidate c;
  c.foundation = std::move(foundation);
  c.component = 1;
  c.transport = transport;
  c.priority = compute_priority(type, local_pref, 1);
  c.address = std::move(address);
  c.port = port;
  c.type = type;
  if (related) {
    c.related_address = related->first;
    c.related_port = related->second;
  }
  c.extensions = {{"generation", "0"}};
  if (transport == Transport::kTcp) c.extensions.insert(c.extensions.begin(), {"tcptype", "passive"});
  c.raw = serialize_candidate(c);
  return c;
}

CandidateList gather(const std::string& id, const PeerConfig& cfg) {
  const auto h = detail::mix64(detail::fnv1a(id));
  const std::string host_ip = fmt::format("192.168.{}.{}", (h >> 8) % 250 + 1, h % 250 + 2);
  const std::string public_ip = fmt::format("203.0.113.{}", (h >> 16) % 250 + 2);
  const int host_port = 50000 + int((h >> 24) % 10000);

  CandidateList out;
  out.push_back(make_candidate("1", CandidateType::kHost, Transport::kUdp, host_ip, host_port, 65535, std::nullopt));
  bool any_server = false;
  int relay_no = 0;
  for (const auto& server : cfg.ice_servers) {
    for (const auto& url : server.urls) {
      any_server = true;
      if (url.rfind("turn", 0) != 0) continue;
      auto addr = server_addr(url);
      if (!addr) continue;
      out.push_back(make_candidate(fmt::format("{}", 3 + relay_no), CandidateType::kRelay, addr->transport, addr->host,
                                   40000 + host_port % 10000 + relay_no, 65535 - std::uint32_t(relay_no),
                                   std::pair{public_ip, host_port}));
      ++relay_no;
    }
  }
  if (any_server) {
    out.insert(out.begin() + 1, make_candidate("2", CandidateType::kSrflx, Transport::kUdp, public_ip, host_port, 65535,
                                               std::pair{host_ip, host_port}));
  }
  return out;
}

}  // namespace

EndpointSpec endpoint_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "endpoint must be an object");
  EndpointSpec e;
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    throw Error(Errc::kInvalidValue, "endpoint id is required");
  }
  e.id = j["id"].get<std::string>();
  if (e.id.find('/') != std::string::npos) throw Error(Errc::kInvalidValue, "endpoint id may not contain '/'");
  const auto role = j.value("role", std::string("caller"));
  if (role == "caller") {
    e.role = Role::kCaller;
  } else if (role == "callee") {
    e.role = Role::kCallee;
  } else {
    throw Error(Errc::kInvalidValue, "role must be caller or callee");
  }
  if (j.contains("codecs")) e.codecs = codec_set_from_json(j["codecs"]);
  if (j.contains("candidates")) {
    if (!j["candidates"].is_array()) throw Error(Errc::kInvalidValue, "candidates must be an array");
    for (const auto& c : j["candidates"]) {
      e.candidates.push_back(c.is_string() ? parse_candidate(c.get<std::string>()) : candidate_from_json(c));
    }
  }
  if (j.contains("peer_config")) e.peer_config = peer_config_from_json(j["peer_config"]);
  if (j.contains("ice_servers")) {
    e.peer_config.ice_servers.clear();
    for (const auto& s : j["ice_servers"]) e.peer_config.ice_servers.push_back(ice_server_from_json(s));
  }
  validate(e.peer_config);
  if (j.contains("encoding")) e.encoding = encoding_params_from_json(j["encoding"]);
  if (j.contains("constraints")) e.constraints = constraints_from_json(j["constraints"]);
  if (j.contains("network")) e.network = network_model_from_json(j["network"]);
  return e;
}

// ---- proxied link ----

struct WebSocketLink::Impl {
  WsClient client;
  std::int64_t timeout_ms;
  std::string url;
};

WebSocketLink::WebSocketLink(std::string url, std::int64_t timeout_ms) : impl_(std::make_unique<Impl>()) {
  impl_->timeout_ms = timeout_ms;
  impl_->url = std::move(url);
  impl_->client.connect(impl_->url, std::chrono::milliseconds(timeout_ms));
}

WebSocketLink::~WebSocketLink() {
  try {
    impl_->client.close();
  } catch (...) {
  }
}

std::optional<std::string> WebSocketLink::carry(const std::string&, const std::string&, const std::string& message) {
  if (!impl_->client.is_open()) throw Error(Errc::kUpstreamConnectFailed, "signaling link is closed");
  impl_->client.send(message);
  auto frame = impl_->client.receive(std::chrono::milliseconds(impl_->timeout_ms));
  if (!frame) return std::nullopt;
  return frame->data;
}

// ---- harness ----

namespace {

template <class T>
std::optional<T> pass(Engine& engine, CategoryId cat, const InterceptContext& ctx, T value) {
  auto out = engine.dispatch(cat, ctx, Payload{std::move(value)});
  if (auto* sc = std::get_if<ShortCircuit>(&out)) {
    if (sc->result) {
      if (auto* t = std::get_if<T>(&*sc->result)) return *t;
    }
    return std::nullopt;
  }
  return std::get<T>(*forwarded(out));
}

json candidates_json(const CandidateList& list) {
  json a = json::array();
  for (const auto& c : list) a.push_back(serialize_candidate(c));
  return a;
}

}  // namespace

Harness::Harness(Engine& engine, HarnessOptions options) : engine_(engine), options_(std::move(options)) {
  if (!options_.link) options_.link = std::make_shared<DirectLink>();
  if (!(options_.packet_bytes > 0)) throw Error(Errc::kInvalidValue, "packet_bytes must be positive");
}

std::string Harness::session_of(const std::string& id) const { return options_.session_prefix + "/" + id; }

InterceptContext Harness::ctx(const std::string& id, std::string context, bool event) const {
  InterceptContext c;
  c.context = std::move(context);
  c.kind = event ? InterceptContext::Kind::kEvent : InterceptContext::Kind::kMethod;
  c.session_id = session_of(id);
  return c;
}

void Harness::emit(json j) {
  if (sink_) sink_(std::move(j));
}

SimEndpoint& Harness::add_endpoint(const EndpointSpec& spec) {
  if (spec.id.empty()) throw Error(Errc::kInvalidValue, "endpoint id is required");
  if (endpoints_.count(spec.id)) throw Error(Errc::kInvalidValue, "duplicate endpoint id " + spec.id);
  validate(spec.network);
  SimEndpoint ep;
  ep.id = spec.id;
  ep.role = spec.role;
  ep.codec_set = spec.codecs;
  ep.encoding = spec.encoding;
  ep.constraints = spec.constraints;
  ep.network_model = spec.network;

  auto cfg = pass(engine_, CategoryId::kConnect, ctx(spec.id, "RTCPeerConnection"), spec.peer_config);
  ep.peer_config = cfg.value_or(spec.peer_config);

  CandidateList local = spec.candidates.empty() ? gather(spec.id, ep.peer_config) : spec.candidates;
  if (ep.peer_config.ice_transport_policy == IceTransportPolicy::kRelay) {
    std::erase_if(local, [](const IceCandidate& c) { return c.type != CandidateType::kRelay; });
  }
  ep.local_candidates = std::move(local);

  emit({{"event", "endpoint"},
        {"id", ep.id},
        {"role", to_string(ep.role)},
        {"peer_config", to_json(ep.peer_config)},
        {"local_candidates", candidates_json(ep.local_candidates)}});
  return endpoints_.emplace(spec.id, std::move(ep)).first->second;
}

SimEndpoint& Harness::endpoint(const std::string& id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) throw Error(Errc::kInvalidValue, "unknown endpoint " + id);
  return it->second;
}

const SimEndpoint& Harness::endpoint(const std::string& id) const {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) throw Error(Errc::kInvalidValue, "unknown endpoint " + id);
  return it->second;
}

std::vector<std::string> Harness::endpoint_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : endpoints_) out.push_back(id);
  return out;
}

std::string Harness::peer_of(const std::string& id) const {
  if (auto it = peers_.find(id); it != peers_.end()) return it->second;
  for (const auto& [a, b] : peers_) {
    if (b == id) return a;
  }
  throw Error(Errc::kWrongState, id + " has no peer");
}

std::optional<std::string> Harness::carry(const std::string& from, const std::string& to, const json& message) {
  auto delivered = options_.link->carry(from, to, message.dump());
  if (!delivered) return std::nullopt;
  return delivered;
}

SessionDescription Harness::generate_offer(const std::string& caller, const std::string& callee) {
  auto& a = endpoint(caller);
  auto& b = endpoint(callee);
  if (caller == callee) throw Error(Errc::kInvalidValue, "an endpoint cannot call itself");
  if (a.signaling_state != SignalingState::kStable) {
    throw Error(Errc::kWrongState, fmt::format("{} is in {}", caller, to_string(a.signaling_state)));
  }
  if (b.signaling_state != SignalingState::kStable) {
    throw Error(Errc::kWrongState, fmt::format("{} is in {}", callee, to_string(b.signaling_state)));
  }
  auto offer = build_offer(a.codec_set, a.id);
  auto signaled = pass(engine_, CategoryId::kSession, ctx(caller, "createOffer"), offer).value_or(offer);
  signaled.type = SdpType::kOffer;
  a.local_description = signaled;
  a.signaling_state = SignalingState::kHaveLocalOffer;
  a.signaled.reset();
  b.signaled.reset();
  peers_[caller] = callee;

  const auto text = serialize_sdp(signaled);
  auto delivered = carry(caller, callee, {{"type", "offer"}, {"from", caller}, {"to", callee}, {"sdp", text}});
  std::optional<SessionDescription> received;
  if (delivered) {
    auto msg = json::parse(*delivered, nullptr, false);
    if (msg.is_object() && msg.contains("sdp") && msg["sdp"].is_string()) {
      received = parse_sdp(msg["sdp"].get<std::string>(), SdpType::kOffer);
    }
  }
  emit({{"event", "signal"}, {"kind", "offer"}, {"from", caller}, {"to", callee}, {"sdp", text},
        {"delivered", received.has_value()}});
  if (received) {
    b.remote_description = *received;
    b.signaling_state = SignalingState::kHaveRemoteOffer;
  }
  return received.value_or(signaled);
}

SessionDescription Harness::generate_answer(const std::string& callee) {
  auto& b = endpoint(callee);
  if (b.signaling_state != SignalingState::kHaveRemoteOffer || !b.remote_description) {
    throw Error(Errc::kWrongState, fmt::format("{} has no remote offer ({})", callee, to_string(b.signaling_state)));
  }
  auto answer = build_answer(*b.remote_description, b.codec_set);
  if (!answer.session_lines.empty()) {
    for (auto& l : answer.session_lines) {
      if (l.rfind("o=", 0) == 0) l = origin_line(b.id);
    }
  }
  auto signaled = pass(engine_, CategoryId::kSession, ctx(callee, "createAnswer"), answer).value_or(answer);
  signaled.type = SdpType::kAnswer;
  b.local_description = signaled;
  b.signaling_state = SignalingState::kStable;
  return signaled;
}

void Harness::apply_answer(const std::string& caller, const SessionDescription& answer) {
  auto& a = endpoint(caller);
  if (a.signaling_state != SignalingState::kHaveLocalOffer) {
    throw Error(Errc::kWrongState, fmt::format("{} has no outstanding offer ({})", caller, to_string(a.signaling_state)));
  }
  a.remote_description = answer;
  a.signaling_state = SignalingState::kStable;
}

SessionDescription Harness::answer(const std::string& callee) {
  const std::string caller = peer_of(callee);
  auto signaled = generate_answer(callee);
  const auto text = serialize_sdp(signaled);
  auto delivered = carry(callee, caller, {{"type", "answer"}, {"from", callee}, {"to", caller}, {"sdp", text}});
  std::optional<SessionDescription> received;
  if (delivered) {
    auto msg = json::parse(*delivered, nullptr, false);
    if (msg.is_object() && msg.contains("sdp") && msg["sdp"].is_string()) {
      received = parse_sdp(msg["sdp"].get<std::string>(), SdpType::kAnswer);
    }
  }
  json negotiated = json::object();
  if (received) {
    apply_answer(caller, *received);
    for (const auto& s : received->media_sections) {
      auto c = first_codec(s);
      negotiated[std::string(to_string(s.kind))] = c ? json(*c) : json(nullptr);
    }
  }
  emit({{"event", "signal"}, {"kind", "answer"}, {"from", callee}, {"to", caller}, {"sdp", text},
        {"delivered", received.has_value()}, {"negotiated", negotiated}});
  return received.value_or(signaled);
}

CandidateList Harness::signal_candidates(const std::string& id) {
  auto& ep = endpoint(id);
  const std::string peer = peer_of(id);
  if (!ep.local_description && ep.signaling_state == SignalingState::kStable) {
    throw Error(Errc::kWrongState, id + " has not begun negotiation");
  }
  auto signaled = pass(engine_, CategoryId::kNetwork, ctx(id, "icecandidate", true), ep.local_candidates)
                      .value_or(CandidateList{});
  CandidateList received;
  for (const auto& c : signaled) {
    const auto line = serialize_candidate(c);
    auto delivered = carry(id, peer, {{"type", "candidate"}, {"from", id}, {"to", peer}, {"candidate", line}});
    std::optional<IceCandidate> got;
    if (delivered) {
      auto msg = json::parse(*delivered, nullptr, false);
      if (msg.is_object() && msg.contains("candidate") && msg["candidate"].is_string()) {
        got = parse_candidate(msg["candidate"].get<std::string>());
      }
    }
    emit({{"event", "candidate"}, {"from", id}, {"to", peer}, {"candidate", line}, {"delivered", got.has_value()}});
    if (got) received.push_back(*got);
  }
  emit({{"event", "candidates_done"}, {"from", id}, {"to", peer}, {"count", received.size()},
        {"gathered", ep.local_candidates.size()}});
  ep.signaled = received;
  return received;
}

SimConnection* Harness::find_connection(const std::string& id) {
  for (auto& c : connections_) {
    if (c.active && (c.a == id || c.b == id)) return &c;
  }
  return nullptr;
}

std::optional<std::reference_wrapper<const SimConnection>> Harness::connection_of(const std::string& id) const {
  for (const auto& c : connections_) {
    if (c.active && (c.a == id || c.b == id)) return std::cref(c);
  }
  return std::nullopt;
}

SimConnection& Harness::connect(const std::string& a_id, const std::string& b_id) {
  auto& a = endpoint(a_id);
  auto& b = endpoint(b_id);
  if (!a.signaled || !b.signaled) throw Error(Errc::kWrongState, "both sides must signal candidates first");
  if (a.signaling_state != SignalingState::kStable || b.signaling_state != SignalingState::kStable) {
    throw Error(Errc::kWrongState, "negotiation has not finished");
  }
  if (find_connection(a_id) || find_connection(b_id)) throw Error(Errc::kWrongState, "already connected");

  SimConnection conn;
  conn.a = a_id;
  conn.b = b_id;
  conn.signaled_a = *a.signaled;
  conn.signaled_b = *b.signaled;
  // `a` pairs its full local list against what b signaled.
  conn.selected_pair = select_pair(a.local_candidates, *b.signaled);
  const auto& answer = a.remote_description ? *a.remote_description : *b.local_description;
  for (const auto& s : answer.media_sections) {
    if (auto c = first_codec(s)) conn.negotiated[s.kind] = *c;
  }
  conn.active = true;

  json negotiated = json::object();
  for (const auto& [k, v] : conn.negotiated) negotiated[std::string(to_string(k))] = v;
  emit({{"event", "connection"},
        {"a", a_id},
        {"b", b_id},
        {"local", serialize_candidate(conn.selected_pair->first)},
        {"remote", serialize_candidate(conn.selected_pair->second)},
        {"negotiated", negotiated},
        {"active", true}});

  counters_[a_id] = Counters{now_ms_, 0, 0, 0, 0, 0, true};
  counters_[b_id] = Counters{now_ms_, 0, 0, 0, 0, 0, true};
  connections_.push_back(std::move(conn));

  for (auto* ep : {&a, &b}) {
    for (auto& [label, ch] : ep->channels) {
      if (ch.state == ChannelState::kConnecting) {
        ch.state = ChannelState::kOpen;
        emit({{"event", "datachannel"}, {"endpoint", ep->id}, {"label", label}, {"state", "open"}});
      }
    }
  }
  return connections_.back();
}

DataChannelSim& Harness::create_datachannel(const std::string& id, const std::string& label) {
  auto& ep = endpoint(id);
  const std::string peer = peer_of(id);
  auto out = engine_.dispatch(CategoryId::kData, ctx(id, "createDataChannel"), DataMessage{label, "", false});
  if (std::holds_alternative<ShortCircuit>(out)) {
    emit({{"event", "datachannel"}, {"endpoint", id}, {"label", label}, {"state", "vetoed"}});
    throw Error(Errc::kChannelVetoed, fmt::format("data channel '{}' vetoed", label));
  }
  const bool up = find_connection(id) != nullptr;
  for (const auto& who : {id, peer}) {
    auto& ch = endpoint(who).channels[label];
    ch.label = label;
    ch.state = up ? ChannelState::kOpen : ChannelState::kConnecting;
    emit({{"event", "datachannel"}, {"endpoint", who}, {"label", label}, {"state", to_string(ch.state)}});
  }
  return ep.channels[label];
}

std::optional<std::string> Harness::send_data(const std::string& id, const std::string& label, const std::string& data) {
  auto& ep = endpoint(id);
  auto it = ep.channels.find(label);
  if (it == ep.channels.end() || it->second.state != ChannelState::kOpen) {
    throw Error(Errc::kNotOpen, fmt::format("data channel '{}' is not open on {}", label, id));
  }
  const std::string peer = peer_of(id);
  auto& rx_ch = endpoint(peer).channels[label];
  if (rx_ch.state != ChannelState::kOpen) throw Error(Errc::kNotOpen, "peer side of '" + label + "' is not open");

  auto sent = pass(engine_, CategoryId::kData, ctx(id, "send"), DataMessage{label, data, false});
  if (!sent) {
    emit({{"event", "data"}, {"from", id}, {"to", peer}, {"label", label}, {"data", bytes_to_json(data)}, {"delivered", false}});
    return std::nullopt;
  }
  it->second.sent.push_back(sent->data);
  auto delivered = carry(id, peer, {{"type", "data"}, {"from", id}, {"to", peer}, {"label", label}, {"data", bytes_to_json(sent->data)}});
  std::optional<std::string> wire;
  if (delivered) {
    auto msg = json::parse(*delivered, nullptr, false);
    if (msg.is_object() && msg.contains("data")) {
      try {
        wire = bytes_from_json(msg["data"]);
      } catch (const Error&) {
      }
    }
  }
  std::optional<DataMessage> received;
  if (wire) received = pass(engine_, CategoryId::kData, ctx(peer, "message", true), DataMessage{label, *wire, false});
  if (received) rx_ch.received.push_back(received->data);
  emit({{"event", "data"},
        {"from", id},
        {"to", peer},
        {"label", label},
        {"data", bytes_to_json(sent->data)},
        {"delivered", received.has_value()},
        {"received", received ? bytes_to_json(received->data) : json(nullptr)}});
  if (!received) return std::nullopt;
  return received->data;
}

MediaConstraints Harness::get_user_media(const std::string& id) {
  auto& ep = endpoint(id);
  auto out = pass(engine_, CategoryId::kMedia, ctx(id, "getUserMedia"), ep.constraints).value_or(ep.constraints);
  ep.captured = out;
  emit({{"event", "media"}, {"endpoint", id}, {"requested", to_json(ep.constraints)}, {"constraints", to_json(out)}});
  return out;
}

EncodingParams Harness::set_parameters(const std::string& id, const EncodingParams& params) {
  auto& ep = endpoint(id);
  validate(params);
  auto out = pass(engine_, CategoryId::kSession, ctx(id, "setParameters"), params).value_or(params);
  if (auto* c = find_connection(id)) advance(*c, now_ms_);
  ep.encoding = out;
  emit({{"event", "encoding"}, {"endpoint", id}, {"requested", to_json(params)}, {"encoding", to_json(out)}});
  return out;
}

void Harness::advance(SimConnection& c, double t_ms) {
  for (const auto& [tx, rx] : {std::pair{c.a, c.b}, std::pair{c.b, c.a}}) {
    auto& ct = counters_[tx];
    auto& cr = counters_[rx];
    const double t0 = ct.t_ms;
    if (t_ms <= t0) continue;
    const auto& sender = endpoint(tx);
    double bits = sender.network_model.bits_between(t0, t_ms);
    if (sender.encoding.max_bitrate_bps) bits = std::min(bits, double(*sender.encoding.max_bitrate_bps) * (t_ms - t0) / 1000);
    const double bytes = bits / 8;
    const double packets = bytes / options_.packet_bytes;
    ct.bytes_sent += bytes;
    ct.packets_sent += packets;
    const double loss = endpoint(rx).network_model.loss_fraction;
    cr.packets_lost += packets * loss;
    cr.packets_received += packets * (1 - loss);
    cr.bytes_received += bytes * (1 - loss);
  }
  counters_[c.a].t_ms = std::max(counters_[c.a].t_ms, t_ms);
  counters_[c.b].t_ms = std::max(counters_[c.b].t_ms, t_ms);
}

void Harness::set_network(const std::string& id, const NetworkModel& model, double t_ms) {
  validate(model);
  auto& ep = endpoint(id);
  if (auto* c = find_connection(id)) advance(*c, t_ms);
  ep.network_model = model;
  emit({{"event", "network"}, {"endpoint", id}, {"model", to_json(model)}});
}

std::optional<StatsReport> Harness::synthesize_stats(const std::string& id, double t_ms, StatsEngine* stats) {
  auto* c = find_connection(id);
  if (!c) throw Error(Errc::kWrongState, id + " is not connected");
  advance(*c, t_ms);
  const auto& ep = endpoint(id);
  const auto& ct = counters_[id];

  StatsReport r;
  r.session_id = session_of(id);
  r.taken_at_ms = t_ms;
  auto entry = [&](const char* eid, const char* type) -> StatsEntry& {
    auto& e = r.entries[eid];
    e.id = eid;
    e.type = type;
    e.timestamp_ms = t_ms;
    return e;
  };
  auto& out = entry("OT01", "outbound-rtp");
  out.fields["bytes_sent"] = std::floor(ct.bytes_sent);
  out.fields["packets_sent"] = std::floor(ct.packets_sent);
  if (c->negotiated.count(MediaKind::kVideo)) {
    double height = 720, fps = 30;
    if (ep.captured) {
      if (const auto* v = std::get_if<TrackConstraints>(&ep.captured->video)) {
        if (v->height && v->height->max) height = std::min(height, *v->height->max);
        if (v->frame_rate && v->frame_rate->max) fps = std::min(fps, *v->frame_rate->max);
      }
    }
    if (ep.encoding.scale_resolution_down_by) height /= *ep.encoding.scale_resolution_down_by;
    if (ep.encoding.max_framerate) fps = std::min(fps, *ep.encoding.max_framerate);
    out.fields["frame_height"] = std::round(height);
    out.fields["frame_width"] = std::round(height * 16 / 9);
    out.fields["frames_per_second"] = fps;
  }
  auto& in = entry("IT01", "inbound-rtp");
  in.fields["bytes_received"] = std::floor(ct.bytes_received);
  in.fields["packets_received"] = std::floor(ct.packets_received);
  in.fields["packets_lost"] = std::floor(ct.packets_lost);
  in.fields["jitter_s"] = ep.network_model.jitter_ms / 1000;
  auto& pair = entry("CP01", "candidate-pair");
  pair.fields["current_rtt_s"] = ep.network_model.rtt_ms / 1000;
  pair.fields["available_outgoing_bitrate"] = ep.network_model.bitrate_at(t_ms);
  if (c->selected_pair) {
    const auto& p = *c->selected_pair;
    const bool local_is_a = c->a == id;
    pair.fields["local_candidate_type"] = std::string(to_string((local_is_a ? p.first : p.second).type));
    pair.fields["remote_candidate_type"] = std::string(to_string((local_is_a ? p.second : p.first).type));
  }

  auto passed = pass(engine_, CategoryId::kStats, ctx(id, "getStats"), r);
  json ev = {{"event", "stats"}, {"endpoint", id}, {"delivered", passed.has_value()}};
  if (passed) {
    ev["report"] = to_json(*passed);
    if (stats) {
      auto ingest = stats->ingest(*passed);
      if (ingest.metrics) ev["metrics"] = to_json(*ingest.metrics);
      if (ingest.quality) ev["mos"] = ingest.quality->mos;
      if (!ingest.accepted) ev["rejected"] = ingest.reason;
    }
  }
  emit(std::move(ev));
  return passed;
}

void Harness::hangup(const std::string& id) {
  std::string peer;
  try {
    peer = peer_of(id);
  } catch (const Error&) {
    throw Error(Errc::kWrongState, id + " is not in a call");
  }
  for (auto& c : connections_) {
    if (c.active && (c.a == id || c.b == id)) c.active = false;
  }
  std::erase_if(connections_, [](const SimConnection& c) { return !c.active; });
  for (const auto& who : {id, peer}) {
    auto& ep = endpoint(who);
    ep.signaling_state = SignalingState::kStable;
    ep.local_description.reset();
    ep.remote_description.reset();
    ep.signaled.reset();
    for (auto& [_, ch] : ep.channels) ch.state = ChannelState::kClosed;
    counters_.erase(who);
  }
  peers_.erase(id);
  peers_.erase(peer);
  emit({{"event", "hangup"}, {"from", id}, {"to", peer}});
}

// ---- scenarios ----

const std::vector<std::string>& scenario_actions() {
  static const std::vector<std::string> actions = {
      "call",        "answer",     "add_candidate",  "create_datachannel", "send_data",      "set_network",
      "trigger_control", "set_control", "cpu_sample", "get_user_media", "set_parameters", "get_stats", "hangup"};
  return actions;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "scenario must be an object");
  Scenario s;
  s.name = j.value("name", std::string("scenario"));
  if (s.name.empty() || s.name.find('/') != std::string::npos) throw Error(Errc::kInvalidValue, "bad scenario name");
  const auto clock = j.value("clock", std::string("virtual"));
  if (clock == "virtual") {
    s.clock = ClockMode::kVirtual;
  } else if (clock == "wall") {
    s.clock = ClockMode::kWall;
  } else {
    throw Error(Errc::kInvalidValue, "clock must be virtual or wall");
  }
  std::set<std::string> ids;
  for (const auto& e : j.value("endpoints", json::array())) {
    s.endpoints.push_back(endpoint_spec_from_json(e));
    if (!ids.insert(s.endpoints.back().id).second) throw Error(Errc::kInvalidValue, "duplicate endpoint " + s.endpoints.back().id);
  }
  if (j.contains("transforms")) {
    const auto& t = j["transforms"];
    if (t.is_object()) {
      for (const auto& [cat, spec] : t.items()) {
        auto id = parse_category(cat);
        if (!id) throw Error(Errc::kInvalidValue, "unknown category " + cat);
        s.transforms.push_back(transform_spec_from_json(spec, *id));
      }
    } else if (t.is_array()) {
      for (const auto& spec : t) s.transforms.push_back(transform_spec_from_json(spec));
    } else {
      throw Error(Errc::kInvalidValue, "transforms must be an object or an array");
    }
  }
  if (j.contains("stats_interval_ms")) {
    if (!j["stats_interval_ms"].is_number_integer() || j["stats_interval_ms"].get<std::int64_t>() < 0) {
      throw Error(Errc::kInvalidValue, "stats_interval_ms must be a non-negative integer");
    }
    s.stats_interval_ms = j["stats_interval_ms"].get<std::int64_t>();
  }
  const auto& actions = scenario_actions();
  double last = 0;
  for (const auto& st : j.value("steps", json::array())) {
    if (!st.is_object()) throw Error(Errc::kInvalidValue, "steps are objects");
    ScenarioStep step;
    step.at_ms = st.value("at_ms", last);
    step.action = st.value("action", std::string());
    if (std::find(actions.begin(), actions.end(), step.action) == actions.end()) {
      throw Error(Errc::kInvalidValue, "unknown action '" + step.action + "'");
    }
    if (st.contains("params")) {
      if (!st["params"].is_object()) throw Error(Errc::kInvalidValue, "params must be an object");
      step.params = st["params"];
    }
    if (!(step.at_ms >= last)) throw Error(Errc::kInvalidValue, "at_ms must be non-decreasing");
    last = step.at_ms;
    s.steps.push_back(std::move(step));
  }
  return s;
}

json to_json(const Scenario& s) {
  json j = {{"name", s.name}, {"clock", s.clock == ClockMode::kVirtual ? "virtual" : "wall"}};
  json eps = json::array();
  for (const auto& e : s.endpoints) {
    json ej = {{"id", e.id},
               {"role", to_string(e.role)},
               {"codecs", to_json(e.codecs)},
               {"peer_config", to_json(e.peer_config)},
               {"encoding", to_json(e.encoding)},
               {"constraints", to_json(e.constraints)},
               {"network", to_json(e.network)}};
    if (!e.candidates.empty()) ej["candidates"] = candidates_json(e.candidates);
    eps.push_back(std::move(ej));
  }
  j["endpoints"] = eps;
  json ts = json::array();
  for (const auto& t : s.transforms) ts.push_back(to_json(t));
  j["transforms"] = ts;
  j["stats_interval_ms"] = s.stats_interval_ms;
  json steps = json::array();
  for (const auto& st : s.steps) steps.push_back({{"at_ms", st.at_ms}, {"action", st.action}, {"params", st.params}});
  j["steps"] = steps;
  return j;
}

std::string to_ndjson(const std::vector<json>& transcript) {
  std::string out;
  for (const auto& r : transcript) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string param_str(const json& p, const char* key) {
  if (!p.contains(key) || !p[key].is_string()) throw Error(Errc::kInvalidValue, fmt::format("missing string param '{}'", key));
  return p[key].get<std::string>();
}

class Runner {
 public:
  Runner(Engine& engine, const Scenario& s, const ScenarioOptions& o)
      : engine_(engine), scenario_(s), prefix_(o.session_prefix.empty() ? s.name : o.session_prefix),
        harness_(engine, HarnessOptions{prefix_, 1200, o.link}) {
    result_.stats = o.stats ? o.stats : std::make_shared<StatsEngine>();
    harness_.set_sink([this](json j) { record(std::move(j)); });
  }

  ScenarioResult run() {
    const std::string match = prefix_ + "/";
    auto observer = engine_.add_observer([this, match](const DispatchRecord& r) {
      if (r.session_id.rfind(match, 0) != 0 || std::this_thread::get_id() != thread_) return;
      json j = to_json(r);
      j["event"] = "dispatch";
      record(std::move(j));
    });
    subscription_ = engine_.controls()->subscribe("*");

    std::vector<std::pair<CategoryId, std::optional<TransformSpec>>> saved;
    try {
      for (const auto& e : scenario_.endpoints) engine_.end_session(harness_.session_of(e.id));
      engine_.end_session(prefix_ + "/cpu");
      for (const auto& t : scenario_.transforms) {
        saved.emplace_back(t.category, engine_.active(t.category));
        engine_.install_transform(t);
      }
      record({{"event", "scenario"}, {"name", scenario_.name}, {"clock", scenario_.clock == ClockMode::kVirtual ? "virtual" : "wall"}});
      for (const auto& e : scenario_.endpoints) harness_.add_endpoint(e);
      drain_controls();
    } catch (const std::exception& e) {
      fail(0, "setup", e);
    }

    start_ = std::chrono::steady_clock::now();
    for (std::size_t i = 0; result_.ok && i < scenario_.steps.size(); ++i) {
      const auto& step = scenario_.steps[i];
      try {
        tick_until(step.at_ms);
        wait_until(step.at_ms);
        set_now(step.at_ms);
        record({{"event", "step"}, {"index", i}, {"action", step.action}, {"params", step.params}});
        execute(step);
        drain_controls();
      } catch (const std::exception& e) {
        drain_controls();
        fail(i, step.action, e);
      }
    }
    record({{"event", "end"}, {"ok", result_.ok}});

    for (auto it = saved.rbegin(); it != saved.rend(); ++it) {
      try {
        if (it->second) {
          engine_.install_transform(*it->second);
        } else {
          engine_.uninstall_transform(it->first);
        }
      } catch (const std::exception&) {
      }
    }
    engine_.remove_observer(observer);
    subscription_.reset();
    return std::move(result_);
  }

 private:
  void record(json j) {
    std::lock_guard lk(mu_);
    json out = {{"seq", seq_++}, {"t_ms", now_}};
    for (auto& [k, v] : j.items()) out[k] = std::move(v);
    result_.transcript.push_back(std::move(out));
  }

  void fail(std::size_t index, const std::string& action, const std::exception& e) {
    std::string cause = "Internal";
    if (auto* err = dynamic_cast<const Error*>(&e)) cause = std::string(errc_name(err->code()));
    result_.ok = false;
    result_.failed_step = index;
    result_.error = fmt::format("StepFailed({}, {}): {}", index, cause, e.what());
    record({{"event", "step_failed"}, {"index", index}, {"action", action}, {"cause", cause}, {"message", e.what()}});
  }

  void set_now(double t) {
    now_ = t;
    harness_.set_time(t);
  }

  void wait_until(double t_ms) {
    if (scenario_.clock != ClockMode::kWall) return;
    std::this_thread::sleep_until(start_ + std::chrono::microseconds(std::int64_t(t_ms * 1000)));
  }

  // Periodic stats strictly before `t_ms`.
  void tick_until(double t_ms) {
    if (scenario_.stats_interval_ms <= 0) return;
    const double iv = double(scenario_.stats_interval_ms);
    while (next_tick_ < t_ms) {
      wait_until(next_tick_);
      set_now(next_tick_);
      for (const auto& id : harness_.endpoint_ids()) {
        if (harness_.connection_of(id)) harness_.synthesize_stats(id, next_tick_, result_.stats.get());
      }
      drain_controls();
      next_tick_ += iv;
    }
  }

  void drain_controls() {
    if (!subscription_) return;
    for (const auto& ev : subscription_->drain()) {
      json j = to_json(ev);
      j["control_event"] = j.value("kind", std::string());
      j.erase("kind");
      j["event"] = "control";
      record(std::move(j));
    }
  }

  std::vector<std::string> targets(const json& p) {
    if (p.contains("endpoint")) return {param_str(p, "endpoint")};
    return harness_.endpoint_ids();
  }

  void execute(const ScenarioStep& step) {
    const auto& p = step.params;
    const auto& a = step.action;
    if (a == "call") {
      harness_.generate_offer(param_str(p, "from"), param_str(p, "to"));
    } else if (a == "answer") {
      harness_.answer(param_str(p, "endpoint"));
    } else if (a == "add_candidate") {
      const auto id = param_str(p, "endpoint");
      harness_.signal_candidates(id);
      auto& me = harness_.endpoint(id);
      // Connect once both sides have signaled; the caller controls.
      for (const auto& other : harness_.endpoint_ids()) {
        if (other == id) continue;
        auto& them = harness_.endpoint(other);
        if (!them.signaled || !me.signaled || harness_.connection_of(id) || harness_.connection_of(other)) continue;
        const bool me_caller = me.role == Role::kCaller;
        harness_.connect(me_caller ? id : other, me_caller ? other : id);
        break;
      }
    } else if (a == "create_datachannel") {
      harness_.create_datachannel(param_str(p, "endpoint"), p.value("label", std::string("data")));
    } else if (a == "send_data") {
      harness_.send_data(param_str(p, "endpoint"), p.value("label", std::string("data")), param_str(p, "data"));
    } else if (a == "set_network") {
      for (const auto& id : targets(p)) {
        auto model = network_model_from_json(p, harness_.endpoint(id).network_model);
        harness_.set_network(id, model, now_);
      }
    } else if (a == "trigger_control") {
      auto v = scalar_from_json(p.value("value", json(true)));
      if (!v) throw Error(Errc::kInvalidType, "control payloads are strings, booleans or numbers");
      engine_.controls()->trigger(param_str(p, "name"), *v);
    } else if (a == "set_control") {
      if (!p.contains("value")) throw Error(Errc::kInvalidValue, "set_control needs a value");
      engine_.controls()->set(param_str(p, "name"), p["value"]);
    } else if (a == "cpu_sample") {
      CpuSample s;
      s.t_ms = now_;
      if (!p.contains("load") || !p["load"].is_number()) throw Error(Errc::kInvalidValue, "cpu_sample needs a numeric load");
      s.total_load_percent = p["load"].get<double>();
      int i = 0;
      for (const auto& c : p.value("per_core", json::array())) {
        if (!c.is_number()) throw Error(Errc::kInvalidValue, "per_core loads are numbers");
        s.per_core.push_back({i++, c.get<double>()});
      }
      record({{"event", "cpu"}, {"sample", to_json(s)}});
      publish_cpu_sample(engine_, s, prefix_ + "/cpu");
    } else if (a == "get_user_media") {
      for (const auto& id : targets(p)) {
        if (p.contains("constraints")) harness_.endpoint(id).constraints = constraints_from_json(p["constraints"]);
        harness_.get_user_media(id);
      }
    } else if (a == "set_parameters") {
      const auto id = param_str(p, "endpoint");
      harness_.set_parameters(id, encoding_params_from_json(p.value("encoding", json::object())));
    } else if (a == "get_stats") {
      for (const auto& id : targets(p)) {
        if (harness_.connection_of(id)) {
          harness_.synthesize_stats(id, now_, result_.stats.get());
        } else if (p.contains("endpoint")) {
          throw Error(Errc::kWrongState, id + " is not connected");
        }
      }
    } else if (a == "hangup") {
      harness_.hangup(param_str(p, "endpoint"));
    }
  }

  Engine& engine_;
  const Scenario& scenario_;
  std::string prefix_;
  Harness harness_;
  ScenarioResult result_;
  std::shared_ptr<Subscription> subscription_;
  std::mutex mu_;
  std::uint64_t seq_ = 0;
  double now_ = 0;
  double next_tick_ = 0;
  std::chrono::steady_clock::time_point start_;
  std::thread::id thread_ = std::this_thread::get_id();
};

}  // namespace

ScenarioResult run_scenario(Engine& engine, const Scenario& scenario, const ScenarioOptions& options) {
  Runner runner(engine, scenario, options);
  return runner.run();
}

}  // namespace rtcshim
