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

#include "rtcshim/cpu_monitor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rtcshim/error.hpp"

namespace rtcshim {

std::vector<CpuTimes> parse_proc_stat(std::string_view text) {
  std::vector<CpuTimes> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_aggregate = false;
  while (std::getline(in, line)) {
    if (line.rfind("cpu", 0) != 0) continue;
    std::istringstream fields(line);
    std::string label;
    fields >> label;
    // user nice system idle iowait irq softirq steal
    std::uint64_t v[8] = {};
    int n = 0;
    while (n < 8 && fields >> v[n]) ++n;
    if (n < 4) continue;
    CpuTimes t;
    for (int i = 0; i < n; ++i) t.total += v[i];
    const std::uint64_t idle = v[3] + (n > 4 ? v[4] : 0);
    t.busy = t.total - idle;
    if (label == "cpu") {
      out.insert(out.begin(), t);
      have_aggregate = true;
    } else {
      out.push_back(t);
    }
  }
  if (!have_aggregate) throw Error(Errc::kInvalidInput, "no aggregate cpu line");
  return out;
}

namespace {

double load_of(const CpuTimes& a, const CpuTimes& b) {
  if (b.total <= a.total) return 0;
  const double busy = b.busy >= a.busy ? double(b.busy - a.busy) : 0.0;
  return std::clamp(100.0 * busy / double(b.total - a.total), 0.0, 100.0);
}

double now_ms() {
  using namespace std::chrono;
  return double(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

}  // namespace

CpuSample cpu_load_between(const std::vector<CpuTimes>& before, const std::vector<CpuTimes>& after, double t_ms) {
  CpuSample s;
  s.t_ms = t_ms;
  if (before.empty() || after.empty()) return s;
  s.total_load_percent = load_of(before[0], after[0]);
  const std::size_t cores = std::min(before.size(), after.size());
  for (std::size_t i = 1; i < cores; ++i) s.per_core.push_back({int(i - 1), load_of(before[i], after[i])});
  return s;
}

ProcStatSampler::ProcStatSampler(std::string path) : path_(std::move(path)) { last_ = read(); }

std::vector<CpuTimes> ProcStatSampler::read() const {
  std::ifstream f(path_);
  if (!f) throw Error(Errc::kPlatformUnsupported, fmt::format("cannot read {}", path_));
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_proc_stat(ss.str());
  } catch (const Error& e) {
    throw Error(Errc::kPlatformUnsupported, fmt::format("{}: {}", path_, e.what()));
  }
}

CpuSample ProcStatSampler::sample(double t_ms) {
  auto now = read();
  auto s = cpu_load_between(last_, now, t_ms);
  last_ = std::move(now);
  return s;
}

SyntheticSampler::SyntheticSampler(double total, std::vector<double> per_core)
    : total_(total), per_core_(std::move(per_core)) {}

void SyntheticSampler::set(double total, std::vector<double> per_core) {
  std::lock_guard lk(mu_);
  total_ = total;
  per_core_ = std::move(per_core);
}

CpuSample SyntheticSampler::sample(double t_ms) {
  std::lock_guard lk(mu_);
  CpuSample s;
  s.t_ms = t_ms;
  s.total_load_percent = total_;
  for (std::size_t i = 0; i < per_core_.size(); ++i) s.per_core.push_back({int(i), per_core_[i]});
  return s;
}

DispatchOutcome publish_cpu_sample(Engine& engine, const CpuSample& sample, const std::string& session_id) {
  auto check = [](double v) {
    if (!std::isfinite(v) || v < 0 || v > 100) throw Error(Errc::kInvalidInput, fmt::format("cpu load {} outside [0,100]", v));
  };
  check(sample.total_load_percent);
  for (const auto& c : sample.per_core) check(c.load_percent);

  auto& bus = *engine.controls();
  bus.set("cpu.load", Scalar{sample.total_load_percent});
  for (const auto& c : sample.per_core) bus.set(fmt::format("cpu.core.{}", c.index), Scalar{c.load_percent});

  InterceptContext ctx;
  ctx.context = "sample";
  ctx.kind = InterceptContext::Kind::kEvent;
  ctx.session_id = session_id;
  return engine.dispatch(CategoryId::kCpu, ctx, sample);
}

CpuMonitor::CpuMonitor(Engine& engine, std::unique_ptr<CpuSampler> sampler, std::int64_t period_ms)
    : engine_(engine), sampler_(std::move(sampler)), period_ms_(period_ms) {
  if (period_ms_ <= 0) throw Error(Errc::kInvalidConfig, "cpu monitor period must be positive");
}

CpuMonitor::~CpuMonitor() { stop(); }

CpuSample CpuMonitor::sample_once() {
  auto s = sampler_->sample(now_ms());
  publish_cpu_sample(engine_, s);
  ++samples_;
  return s;
}

void CpuMonitor::start() {
  std::lock_guard lk(mu_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { loop(); });
}

void CpuMonitor::stop() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void CpuMonitor::loop() {
  std::unique_lock lk(mu_);
  while (!stopping_) {
    if (cv_.wait_for(lk, std::chrono::milliseconds(period_ms_), [this] { return stopping_; })) break;
    lk.unlock();
    try {
      sample_once();
    } catch (const Error& e) {
      spdlog::warn("cpu monitor: {}", e.what());
    }
    lk.lock();
  }
}

}  // namespace rtcshim
