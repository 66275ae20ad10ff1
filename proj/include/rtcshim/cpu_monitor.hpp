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
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rtcshim/engine.hpp"
#include "rtcshim/payload.hpp"

namespace rtcshim {

// Cumulative jiffies from one "cpu" line of /proc/stat.
struct CpuTimes {
  std::uint64_t busy = 0;
  std::uint64_t total = 0;
};

// Index 0 is the aggregate line, then cpu0, cpu1, ... Throws
// Error(kInvalidInput) if there is no aggregate line.
std::vector<CpuTimes> parse_proc_stat(std::string_view text);

// Load between two snapshots; cores with no elapsed ticks read 0.
CpuSample cpu_load_between(const std::vector<CpuTimes>& before, const std::vector<CpuTimes>& after,
                           double t_ms);

class CpuSampler {
 public:
  virtual ~CpuSampler() = default;
  virtual CpuSample sample(double t_ms) = 0;
};

// Reads /proc/stat. The first sample measures from construction time.
// Throws Error(kPlatformUnsupported) when /proc/stat is unreadable.
class ProcStatSampler : public CpuSampler {
 public:
  explicit ProcStatSampler(std::string path = "/proc/stat");
  CpuSample sample(double t_ms) override;

 private:
  std::vector<CpuTimes> read() const;

  std::string path_;
  std::vector<CpuTimes> last_;
};

// Returns whatever was last injected.
class SyntheticSampler : public CpuSampler {
 public:
  explicit SyntheticSampler(double total = 0, std::vector<double> per_core = {});
  void set(double total, std::vector<double> per_core = {});
  CpuSample sample(double t_ms) override;

 private:
  std::mutex mu_;
  double total_;
  std::vector<double> per_core_;
};

// Publishes cpu.load and cpu.core.<i> then runs the Cpu dispatch (context
// "sample"). Throws Error(kInvalidInput) for loads outside [0,100].
DispatchOutcome publish_cpu_sample(Engine& engine, const CpuSample& sample,
                                   const std::string& session_id = "cpu-monitor");

class CpuMonitor {
 public:
  CpuMonitor(Engine& engine, std::unique_ptr<CpuSampler> sampler, std::int64_t period_ms = 2000);
  ~CpuMonitor();
  CpuMonitor(const CpuMonitor&) = delete;
  CpuMonitor& operator=(const CpuMonitor&) = delete;

  void start();
  void stop();
  // One synchronous sample + publish.
  CpuSample sample_once();
  std::uint64_t samples() const { return samples_; }

 private:
  void loop();

  Engine& engine_;
  std::unique_ptr<CpuSampler> sampler_;
  std::int64_t period_ms_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread thread_;
  std::atomic<std::uint64_t> samples_{0};
};

}  // namespace rtcshim
