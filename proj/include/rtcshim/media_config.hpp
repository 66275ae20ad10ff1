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
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rtcshim/scalar.hpp"

namespace rtcshim {

// ---- capture constraints ----

struct Bound {
  std::optional<double> ideal;
  std::optional<double> max;

  bool operator==(const Bound&) const = default;
};

struct TrackConstraints {
  std::optional<Bound> width;
  std::optional<Bound> height;
  std::optional<Bound> frame_rate;
  std::optional<std::string> device_id;
  std::optional<std::string> facing_mode;
  // Members this model does not interpret, kept for the round trip.
  json extra = json::object();

  bool operator==(const TrackConstraints&) const = default;
};

// `false` means the track is not requested; `true` requests it with no
// constraints.
using TrackRequest = std::variant<bool, TrackConstraints>;

struct MediaConstraints {
  TrackRequest audio = false;
  TrackRequest video = false;

  bool operator==(const MediaConstraints&) const = default;
};

enum class TrackKind { kAudio, kVideo };

struct CapFrameRate { double fps; };
struct CapResolution { double height; };
struct DropTrack { TrackKind kind; };
struct ForceDevice { TrackKind kind; std::string device_id; };
struct ForceFacingMode { std::string mode; };

using ConstraintRule = std::variant<CapFrameRate, CapResolution, DropTrack, ForceDevice, ForceFacingMode>;

// Throws Error(kInvalidValue) if a bound is non-positive or ideal exceeds max.
void validate(const MediaConstraints& c);

// Caps only ever tighten: the new max is min(old max, cap). An ideal above
// the new max is lowered to it.
MediaConstraints transform_constraints(MediaConstraints c, const std::vector<ConstraintRule>& rules);

json to_json(const MediaConstraints& c);
// Accepts snake_case and the browser's camelCase member names; a bare number
// for a bound means {ideal: n}.
MediaConstraints constraints_from_json(const json& j);

// ---- devices ----

enum class DeviceKind { kAudioInput, kVideoInput, kAudioOutput };

std::string_view to_string(DeviceKind kind);
std::optional<DeviceKind> parse_device_kind(std::string_view s);

struct DeviceInfo {
  std::string device_id;
  DeviceKind kind = DeviceKind::kAudioInput;
  std::string label;
  std::string group_id;

  bool operator==(const DeviceInfo&) const = default;
};

using DeviceList = std::vector<DeviceInfo>;

struct HideKind { DeviceKind kind; };
// Shell-style glob on the label.
struct HideLabel { std::string pattern; };
struct RandomizeLabels {};
struct DefaultOnly {};
struct AddDummy { DeviceKind kind; std::string label; };

using DeviceRule = std::variant<HideKind, HideLabel, RandomizeLabels, DefaultOnly, AddDummy>;

DeviceList transform_devices(DeviceList list, const std::vector<DeviceRule>& rules, std::uint64_t seed);

// Seed-dependent label for a device; never equal to `original`.
std::string pseudonym_label(const DeviceInfo& device, std::uint64_t seed);

json to_json(const DeviceInfo& d);
json to_json(const DeviceList& list);
// Throws Error(kInvalidValue) on duplicate ids or an unknown kind.
DeviceList device_list_from_json(const json& j);

// ---- peer configuration ----

struct IceServer {
  std::vector<std::string> urls;
  std::optional<std::string> username;
  std::optional<std::string> credential;

  bool operator==(const IceServer&) const = default;
};

enum class IceTransportPolicy { kAll, kRelay };

struct PeerConfig {
  std::vector<IceServer> ice_servers;
  IceTransportPolicy ice_transport_policy = IceTransportPolicy::kAll;

  bool operator==(const PeerConfig&) const = default;
};

struct InjectServer { IceServer server; };
struct StripServers {};
struct RelayOnly {};

using PeerConfigRule = std::variant<InjectServer, StripServers, RelayOnly>;

bool is_ice_server_url(std::string_view url);
// Throws Error(kInvalidServerUrl).
void validate(const IceServer& server);
void validate(const PeerConfig& cfg);

PeerConfig transform_peer_config(PeerConfig cfg, const std::vector<PeerConfigRule>& rules);

json to_json(const IceServer& s);
json to_json(const PeerConfig& cfg);
// A bare string for "urls" is accepted; camelCase names are accepted.
PeerConfig peer_config_from_json(const json& j);
IceServer ice_server_from_json(const json& j);

// ---- sender encoding parameters ----

struct EncodingParams {
  std::optional<std::int64_t> max_bitrate_bps;
  std::optional<double> max_framerate;
  std::optional<double> scale_resolution_down_by;

  bool operator==(const EncodingParams&) const = default;
};

// Throws Error(kInvalidValue).
void validate(const EncodingParams& p);

// Field-wise tightening. Bitrate and framerate take the min;
// scale_resolution_down_by takes the max, since a larger divisor is tighter.
EncodingParams apply_encoding_limits(EncodingParams p, const EncodingParams& limits);

json to_json(const EncodingParams& p);
EncodingParams encoding_params_from_json(const json& j);

}  // namespace rtcshim
