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

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "rtcshim/config.hpp"
#include "rtcshim/cpu_monitor.hpp"
#include "rtcshim/engine.hpp"
#include "rtcshim/harness.hpp"
#include "rtcshim/proxy.hpp"
#include "rtcshim/stats.hpp"

namespace rtcshim {

// Fills "network" and "codecs" of scenario endpoints that leave them out.
json with_harness_defaults(json scenario, const HarnessDefaults& defaults);

// Engine + proxy + cpu monitor + admin API wired from one EngineConfig.
class Service {
 public:
  // `sampler` overrides the configured cpu source (tests inject a synthetic one).
  explicit Service(EngineConfig config, std::unique_ptr<CpuSampler> sampler = nullptr);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Starts the proxy, the cpu monitor and the admin API as configured. A
  // monitor on an unsupported platform is disabled with a warning.
  void start();
  void stop();

  std::shared_ptr<Engine> engine() const { return engine_; }
  std::shared_ptr<SignalPipeline> pipeline() const { return pipeline_; }
  std::shared_ptr<StatsEngine> stats() const { return stats_; }
  CpuMonitor* cpu_monitor() const { return monitor_.get(); }
  const EngineConfig& config() const { return config_; }

  std::uint16_t admin_port() const;
  std::uint16_t proxy_port() const;

  // Applies harness defaults, runs under a fresh session prefix
  // "<name>-<n>" (or `prefix` when given) and feeds the shared stats
  // engine and the savestats sink. "signaling_url" in the scenario routes
  // signaling over a WebSocket.
  ScenarioResult run_scenario(const json& scenario, std::optional<std::string> prefix = std::nullopt);

 private:
  struct Admin;

  EngineConfig config_;
  std::shared_ptr<ControlsBus> controls_;
  std::shared_ptr<Engine> engine_;
  std::shared_ptr<SignalPipeline> pipeline_;
  std::shared_ptr<StatsEngine> stats_;
  std::unique_ptr<ProxyServer> proxy_;
  std::unique_ptr<CpuSampler> sampler_override_;
  std::unique_ptr<CpuMonitor> monitor_;
  std::unique_ptr<Admin> admin_;
  std::unique_ptr<StatsSink> sink_;
  std::mutex scenario_mu_;
  std::atomic<std::uint64_t> runs_{0};
  bool started_ = false;
};

}  // namespace rtcshim
