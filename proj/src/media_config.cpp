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

#include "rtcshim/media_config.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "rtcshim/error.hpp"
#include "text_util.hpp"

namespace rtcshim {
namespace {

TrackRequest& track(MediaConstraints& c, TrackKind kind) { return kind == TrackKind::kAudio ? c.audio : c.video; }

// A requested track as a constraint map; `true` becomes an empty map.
// Returns nullptr for a track that is not requested.
TrackConstraints* as_map(TrackRequest& t) {
  if (auto* b = std::get_if<bool>(&t)) {
    if (!*b) return nullptr;
    t = TrackConstraints{};
  }
  return &std::get<TrackConstraints>(t);
}

void tighten(std::optional<Bound>& bound, double cap) {
  if (!bound) bound = Bound{};
  bound->max = bound->max ? std::min(*bound->max, cap) : cap;
  if (bound->ideal && *bound->ideal > *bound->max) bound->ideal = bound->max;
}

void check_bound(const std::optional<Bound>& b, const char* name) {
  if (!b) return;
  for (const auto& v : {b->ideal, b->max}) {
    if (v && !(*v > 0)) throw Error(Errc::kInvalidValue, fmt::format("{} must be positive", name));
  }
  if (b->ideal && b->max && *b->ideal > *b->max) {
    throw Error(Errc::kInvalidValue, fmt::format("{}: ideal exceeds max", name));
  }
}

json bound_to_json(const Bound& b) {
  json j = json::object();
  if (b.ideal) j["ideal"] = *b.ideal;
  if (b.max) j["max"] = *b.max;
  return j;
}

Bound bound_from_json(const json& j) {
  if (j.is_number()) return Bound{j.get<double>(), std::nullopt};
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "bound must be a number or object");
  Bound b;
  if (j.contains("ideal")) b.ideal = j.at("ideal").get<double>();
  if (j.contains("exact") && !b.ideal) b.ideal = j.at("exact").get<double>();
  if (j.contains("max")) b.max = j.at("max").get<double>();
  return b;
}

const json* member(const json& j, const char* snake, const char* camel) {
  if (auto it = j.find(snake); it != j.end()) return &*it;
  if (auto it = j.find(camel); it != j.end()) return &*it;
  return nullptr;
}

std::string plain_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  // {exact: "..."} / {ideal: "..."} forms collapse to the value.
  if (j.is_object()) {
    if (j.contains("exact")) return j.at("exact").get<std::string>();
    if (j.contains("ideal")) return j.at("ideal").get<std::string>();
  }
  throw Error(Errc::kInvalidValue, "expected a string constraint");
}

json track_to_json(const TrackRequest& t) {
  if (auto* b = std::get_if<bool>(&t)) return *b;
  const auto& m = std::get<TrackConstraints>(t);
  json j = m.extra.is_object() ? m.extra : json::object();
  if (m.width) j["width"] = bound_to_json(*m.width);
  if (m.height) j["height"] = bound_to_json(*m.height);
  if (m.frame_rate) j["frame_rate"] = bound_to_json(*m.frame_rate);
  if (m.device_id) j["device_id"] = *m.device_id;
  if (m.facing_mode) j["facing_mode"] = *m.facing_mode;
  return j;
}

TrackRequest track_from_json(const json& j) {
  if (j.is_null()) return false;
  if (j.is_boolean()) return j.get<bool>();
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "track constraint must be boolean or object");
  TrackConstraints m;
  static const std::set<std::string> known = {"width", "height", "frame_rate", "frameRate", "device_id",
                                              "deviceId", "facing_mode", "facingMode"};
  if (auto* v = member(j, "width", "width")) m.width = bound_from_json(*v);
  if (auto* v = member(j, "height", "height")) m.height = bound_from_json(*v);
  if (auto* v = member(j, "frame_rate", "frameRate")) m.frame_rate = bound_from_json(*v);
  if (auto* v = member(j, "device_id", "deviceId")) m.device_id = plain_string(*v);
  if (auto* v = member(j, "facing_mode", "facingMode")) m.facing_mode = plain_string(*v);
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) m.extra[k] = v;
  }
  return m;
}

}  // namespace

void validate(const MediaConstraints& c) {
  for (const auto* t : {&c.audio, &c.video}) {
    if (const auto* m = std::get_if<TrackConstraints>(t)) {
      check_bound(m->width, "width");
      check_bound(m->height, "height");
      check_bound(m->frame_rate, "frame_rate");
    }
  }
}

MediaConstraints transform_constraints(MediaConstraints c, const std::vector<ConstraintRule>& rules) {
  for (const auto& rule : rules) {
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, CapFrameRate>) {
            if (auto* m = as_map(c.video)) tighten(m->frame_rate, r.fps);
          } else if constexpr (std::is_same_v<R, CapResolution>) {
            if (auto* m = as_map(c.video)) tighten(m->height, r.height);
          } else if constexpr (std::is_same_v<R, DropTrack>) {
            track(c, r.kind) = false;
          } else if constexpr (std::is_same_v<R, ForceDevice>) {
            if (auto* m = as_map(track(c, r.kind))) m->device_id = r.device_id;
          } else if constexpr (std::is_same_v<R, ForceFacingMode>) {
            if (auto* m = as_map(c.video)) m->facing_mode = r.mode;
          }
        },
        rule);
  }
  return c;
}

json to_json(const MediaConstraints& c) {
  return json{{"audio", track_to_json(c.audio)}, {"video", track_to_json(c.video)}};
}

MediaConstraints constraints_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "constraints must be an object");
  MediaConstraints c;
  c.audio = track_from_json(j.value("audio", json(false)));
  c.video = track_from_json(j.value("video", json(false)));
  validate(c);
  return c;
}

// ---- devices ----

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::kAudioInput: return "audioinput";
    case DeviceKind::kVideoInput: return "videoinput";
    case DeviceKind::kAudioOutput: return "audiooutput";
  }
  return "?";
}

std::optional<DeviceKind> parse_device_kind(std::string_view s) {
  const auto l = detail::to_lower(s);
  if (l == "audioinput") return DeviceKind::kAudioInput;
  if (l == "videoinput") return DeviceKind::kVideoInput;
  if (l == "audiooutput") return DeviceKind::kAudioOutput;
  return std::nullopt;
}

std::string pseudonym_label(const DeviceInfo& device, std::uint64_t seed) {
  static constexpr const char* kPrefix[] = {"Microphone", "Camera", "Speaker"};
  const auto h = detail::mix64(seed ^ detail::fnv1a(device.device_id));
  auto label = fmt::format("{} {:06x}", kPrefix[static_cast<int>(device.kind)], h & 0xffffff);
  if (label == device.label) label += "*";
  return label;
}

DeviceList transform_devices(DeviceList list, const std::vector<DeviceRule>& rules, std::uint64_t seed) {
  for (const auto& rule : rules) {
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, HideKind>) {
            std::erase_if(list, [&](const DeviceInfo& d) { return d.kind == r.kind; });
          } else if constexpr (std::is_same_v<R, HideLabel>) {
            std::erase_if(list, [&](const DeviceInfo& d) { return detail::glob_match(r.pattern, d.label); });
          } else if constexpr (std::is_same_v<R, RandomizeLabels>) {
            for (auto& d : list) d.label = pseudonym_label(d, seed);
          } else if constexpr (std::is_same_v<R, DefaultOnly>) {
            std::set<DeviceKind> seen;
            std::erase_if(list, [&](const DeviceInfo& d) { return !seen.insert(d.kind).second; });
          } else if constexpr (std::is_same_v<R, AddDummy>) {
            std::set<std::string> ids;
            for (const auto& d : list) ids.insert(d.device_id);
            std::uint64_t n = 1;
            while (ids.count(fmt::format("dummy-{}", n))) ++n;
            list.push_back(DeviceInfo{fmt::format("dummy-{}", n), r.kind, r.label, "dummy"});
          }
        },
        rule);
  }
  return list;
}

json to_json(const DeviceInfo& d) {
  return json{{"device_id", d.device_id}, {"kind", to_string(d.kind)}, {"label", d.label}, {"group_id", d.group_id}};
}

json to_json(const DeviceList& list) {
  json out = json::array();
  for (const auto& d : list) out.push_back(to_json(d));
  return out;
}

DeviceList device_list_from_json(const json& j) {
  if (!j.is_array()) throw Error(Errc::kInvalidValue, "device list must be an array");
  DeviceList out;
  std::set<std::string> ids;
  for (const auto& e : j) {
    DeviceInfo d;
    const json* id = member(e, "device_id", "deviceId");
    const json* group = member(e, "group_id", "groupId");
    if (!id) throw Error(Errc::kInvalidValue, "device entry lacks device_id");
    d.device_id = id->get<std::string>();
    auto kind = parse_device_kind(e.value("kind", std::string()));
    if (!kind) throw Error(Errc::kInvalidValue, "unknown device kind");
    d.kind = *kind;
    d.label = e.value("label", std::string());
    d.group_id = group ? group->get<std::string>() : std::string();
    if (!ids.insert(d.device_id).second) {
      throw Error(Errc::kInvalidValue, "duplicate device_id " + d.device_id);
    }
    out.push_back(std::move(d));
  }
  return out;
}

// ---- peer configuration ----

bool is_ice_server_url(std::string_view url) {
  const auto l = detail::to_lower(url);
  for (std::string_view scheme : {"stun:", "stuns:", "turn:", "turns:"}) {
    if (l.size() > scheme.size() && l.starts_with(scheme)) return true;
  }
  return false;
}

void validate(const IceServer& server) {
  if (server.urls.empty()) throw Error(Errc::kInvalidServerUrl, "ice server has no urls");
  for (const auto& u : server.urls) {
    if (!is_ice_server_url(u)) throw Error(Errc::kInvalidServerUrl, "not a stun/turn url: " + u);
  }
}

void validate(const PeerConfig& cfg) {
  for (const auto& s : cfg.ice_servers) validate(s);
}

PeerConfig transform_peer_config(PeerConfig cfg, const std::vector<PeerConfigRule>& rules) {
  for (const auto& rule : rules) {
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, InjectServer>) {
            validate(r.server);
            cfg.ice_servers.push_back(r.server);
          } else if constexpr (std::is_same_v<R, StripServers>) {
            cfg.ice_servers.clear();
          } else if constexpr (std::is_same_v<R, RelayOnly>) {
            cfg.ice_transport_policy = IceTransportPolicy::kRelay;
          }
        },
        rule);
  }
  return cfg;
}

json to_json(const IceServer& s) {
  json j{{"urls", s.urls}};
  if (s.username) j["username"] = *s.username;
  if (s.credential) j["credential"] = *s.credential;
  return j;
}

json to_json(const PeerConfig& cfg) {
  json servers = json::array();
  for (const auto& s : cfg.ice_servers) servers.push_back(to_json(s));
  return json{{"ice_servers", servers},
              {"ice_transport_policy", cfg.ice_transport_policy == IceTransportPolicy::kRelay ? "relay" : "all"}};
}

IceServer ice_server_from_json(const json& j) {
  IceServer s;
  const json* urls = member(j, "urls", "url");
  if (!urls) throw Error(Errc::kInvalidServerUrl, "ice server lacks urls");
  if (urls->is_string()) {
    s.urls.push_back(urls->get<std::string>());
  } else {
    s.urls = urls->get<std::vector<std::string>>();
  }
  if (j.contains("username")) s.username = j.at("username").get<std::string>();
  if (j.contains("credential")) s.credential = j.at("credential").get<std::string>();
  validate(s);
  return s;
}

PeerConfig peer_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "peer config must be an object");
  PeerConfig cfg;
  if (const json* servers = member(j, "ice_servers", "iceServers")) {
    for (const auto& s : *servers) cfg.ice_servers.push_back(ice_server_from_json(s));
  }
  if (const json* p = member(j, "ice_transport_policy", "iceTransportPolicy")) {
    const auto v = p->get<std::string>();
    if (v == "relay") {
      cfg.ice_transport_policy = IceTransportPolicy::kRelay;
    } else if (v != "all") {
      throw Error(Errc::kInvalidValue, "ice_transport_policy must be all or relay");
    }
  }
  return cfg;
}

// ---- encoding ----

void validate(const EncodingParams& p) {
  if (p.max_bitrate_bps && *p.max_bitrate_bps <= 0) throw Error(Errc::kInvalidValue, "max_bitrate_bps must be > 0");
  if (p.max_framerate && !(*p.max_framerate > 0)) throw Error(Errc::kInvalidValue, "max_framerate must be > 0");
  if (p.scale_resolution_down_by && !(*p.scale_resolution_down_by >= 1)) {
    throw Error(Errc::kInvalidValue, "scale_resolution_down_by must be >= 1");
  }
}

EncodingParams apply_encoding_limits(EncodingParams p, const EncodingParams& limits) {
  auto tighter_min = [](auto& field, const auto& limit) {
    if (limit) field = field ? std::min(*field, *limit) : *limit;
  };
  tighter_min(p.max_bitrate_bps, limits.max_bitrate_bps);
  tighter_min(p.max_framerate, limits.max_framerate);
  if (limits.scale_resolution_down_by) {
    p.scale_resolution_down_by = p.scale_resolution_down_by
                                     ? std::max(*p.scale_resolution_down_by, *limits.scale_resolution_down_by)
                                     : *limits.scale_resolution_down_by;
  }
  return p;
}

json to_json(const EncodingParams& p) {
  json j = json::object();
  if (p.max_bitrate_bps) j["max_bitrate_bps"] = *p.max_bitrate_bps;
  if (p.max_framerate) j["max_framerate"] = *p.max_framerate;
  if (p.scale_resolution_down_by) j["scale_resolution_down_by"] = *p.scale_resolution_down_by;
  return j;
}

EncodingParams encoding_params_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidValue, "encoding params must be an object");
  EncodingParams p;
  if (const json* v = member(j, "max_bitrate_bps", "maxBitrate")) p.max_bitrate_bps = v->get<std::int64_t>();
  if (const json* v = member(j, "max_framerate", "maxFramerate")) p.max_framerate = v->get<double>();
  if (const json* v = member(j, "scale_resolution_down_by", "scaleResolutionDownBy")) {
    p.scale_resolution_down_by = v->get<double>();
  }
  validate(p);
  return p;
}

}  // namespace rtcshim
