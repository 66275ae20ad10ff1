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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rtcshim/scalar.hpp"

namespace rtcshim {

struct ControlEntry {
  std::string name;
  Scalar value;
  std::uint64_t version = 0;
  std::int64_t updated_at_ms = 0;
};

enum class ControlEventKind { kUpdated, kDeleted, kTriggered };

std::string_view to_string(ControlEventKind kind);

struct ControlEvent {
  std::string name;
  ControlEventKind kind = ControlEventKind::kUpdated;
  std::optional<Scalar> old_value;
  std::optional<Scalar> new_value;
  std::uint64_t version = 0;
};

json to_json(const ControlEvent& event);
json to_json(const ControlEntry& entry);

// Exact name, "prefix.*" or "*".
bool pattern_matches(std::string_view pattern, std::string_view name);
bool pattern_well_formed(std::string_view pattern);

class ControlsBus;

// Event stream for one subscriber. Events are queued by the publisher and
// consumed by the owner; when the queue is full the oldest event is dropped
// and counted.
class Subscription {
 public:
  ~Subscription();
  Subscription(const Subscription&) = delete;
  Subscription& operator=(const Subscription&) = delete;

  std::optional<ControlEvent> try_next();
  std::optional<ControlEvent> next(std::chrono::milliseconds timeout);
  std::vector<ControlEvent> drain();

  std::uint64_t dropped() const;
  const std::string& pattern() const { return pattern_; }

 private:
  friend class ControlsBus;
  Subscription(std::string pattern, std::size_t capacity) : pattern_(std::move(pattern)), capacity_(capacity) {}

  void push(const ControlEvent& event);

  const std::string pattern_;
  const std::size_t capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<ControlEvent> queue_;
  std::uint64_t dropped_ = 0;
};

// Shared primitive-typed variables with change notification and generic
// event triggering. Versions are per name and never reused, including
// across deletion.
class ControlsBus {
 public:
  using Clock = std::function<std::int64_t()>;

  static constexpr std::size_t kDefaultQueueCapacity = 4096;

  ControlsBus();
  explicit ControlsBus(Clock clock);

  std::uint64_t set(std::string_view name, Scalar value);
  // Throws Error(kInvalidType) unless `value` is a string, boolean or number.
  std::uint64_t set(std::string_view name, const json& value);

  std::optional<Scalar> get(std::string_view name) const;
  std::optional<ControlEntry> entry(std::string_view name) const;
  bool erase(std::string_view name);

  std::size_t trigger(std::string_view name, Scalar payload);

  std::shared_ptr<Subscription> subscribe(std::string pattern,
                                          std::size_t capacity = kDefaultQueueCapacity);

  std::vector<ControlEntry> snapshot() const;
  json snapshot_json() const;

 private:
  std::size_t publish_locked(const ControlEvent& event);
  std::uint64_t next_version_locked(const std::string& name);

  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, ControlEntry, std::less<>> entries_;
  std::map<std::string, std::uint64_t, std::less<>> last_version_;
  std::vector<std::weak_ptr<Subscription>> subscribers_;
};

}  // namespace rtcshim
