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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rtcshim/category.hpp"
#include "rtcshim/ice.hpp"
#include "rtcshim/media_config.hpp"
#include "rtcshim/scalar.hpp"
#include "rtcshim/sdp.hpp"
#include "rtcshim/stats.hpp"

namespace rtcshim {

struct DataMessage {
  std::string label;
  std::string data;
  bool binary = false;

  bool operator==(const DataMessage&) const = default;
};

struct SocketMessage {
  // Target URL of the socket. For context "connect" this is the upstream a
  // transform may rewrite.
  std::string url;
  std::string data;
  bool binary = false;

  bool operator==(const SocketMessage&) const = default;
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpMessage {
  std::string method;
  std::string url;
  // 0 for a request.
  int status = 0;
  HeaderList headers;
  std::string body;

  bool operator==(const HttpMessage&) const = default;

  bool is_response() const { return status != 0; }
  std::optional<std::string> header(std::string_view name) const;
  void set_header(std::string_view name, std::string value);
  // Returns the number removed.
  std::size_t remove_header(std::string_view name);
};

struct CoreLoad {
  int index = 0;
  double load_percent = 0;

  bool operator==(const CoreLoad&) const = default;
};

struct CpuSample {
  double t_ms = 0;
  double total_load_percent = 0;
  std::vector<CoreLoad> per_core;

  bool operator==(const CpuSample&) const = default;
};

using Payload = std::variant<SessionDescription, CandidateList, MediaConstraints, DeviceList, PeerConfig,
                             EncodingParams, StatsReport, DataMessage, SocketMessage, HttpMessage, CpuSample>;

// Short name of the held alternative, e.g. "SessionDescription".
std::string_view payload_type_name(const Payload& p);

// Whether `p` is a shape the category accepts. Session takes a description
// or sender encoding parameters; Request and Security take HttpMessage.
bool payload_fits(CategoryId category, const Payload& p);

// Valid UTF-8 stays a JSON string; other bytes become {"base64": "..."}.
json bytes_to_json(const std::string& bytes);
// Inverse of bytes_to_json. Throws Error(kInvalidValue) on bad base64.
std::string bytes_from_json(const json& j);

json to_json(const DataMessage& m);
json to_json(const SocketMessage& m);
json to_json(const HttpMessage& m);
json to_json(const CpuSample& s);
DataMessage data_message_from_json(const json& j);
SocketMessage socket_message_from_json(const json& j);
HttpMessage http_message_from_json(const json& j);
CpuSample cpu_sample_from_json(const json& j);

json to_json(const Payload& p);
// `type` is a payload_type_name.
Payload payload_from_json(std::string_view type, const json& j);

// Canonical payload shape per category, used for payload_from_json when the
// caller only knows the category.
std::string_view default_payload_type(CategoryId category);

}  // namespace rtcshim
