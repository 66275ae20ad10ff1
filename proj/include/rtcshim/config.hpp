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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rtcshim/engine.hpp"
#include "rtcshim/harness.hpp"
#include "rtcshim/proxy.hpp"

namespace rtcshim {

struct ProxyConfig {
  bool enabled = false;
  ProxyOptions options;
  std::vector<HeaderRule> header_rules;
  FaultPolicy fault_policy;
  std::size_t capacity = 10000;
};

struct HarnessDefaults {
  NetworkModel network;
  CodecSet codecs = default_codec_set();
};

struct AdminConfig {
  bool enabled = true;
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;
  std::optional<std::string> token;
  // Static files served under /panel when set.
  std::optional<std::string> panel_dir;
};

struct CpuMonitorConfig {
  bool enabled = false;
  std::int64_t period_ms = 2000;
  // "proc" reads /proc/stat; "synthetic" publishes synthetic_load.
  std::string source = "proc";
  double synthetic_load = 0;
};

struct EngineConfig {
  EngineSettings settings;
  std::map<CategoryId, TransformSpec> categories;
  std::map<std::string, Scalar> controls_initial;
  ProxyConfig proxy;
  HarnessDefaults harness;
  AdminConfig admin;
  CpuMonitorConfig cpu_monitor;
};

// "host:port", "[v6]:port" or ":port". Throws Error(kInvalidConfig).
std::pair<std::string, std::uint16_t> parse_listen(std::string_view s);

// Structural parse. Throws Error(kInvalidConfig) with the offending key.
EngineConfig engine_config_from_json(const json& j);
json to_json(const EngineConfig& c);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
// RTCSHIM_PROXY_LISTEN, RTCSHIM_ADMIN_LISTEN, RTCSHIM_SEED,
// RTCSHIM_ADMIN_TOKEN, RTCSHIM_UPSTREAM.
void apply_env_overrides(EngineConfig& c, const EnvLookup& env);
std::optional<std::string> process_env(const char* name);

// Everything a subsystem would reject at start-up: settings, each category
// spec (through a scratch engine, so the admin API and the file agree),
// controls, proxy options and TLS files, fault policy, header rules,
// harness model, admin and cpu monitor. Throws Error(kInvalidConfig).
void validate(const EngineConfig& c);

// Reads, parses, applies env overrides and validates.
EngineConfig load_config_file(const std::string& path, const EnvLookup& env = process_env);

}  // namespace rtcshim
