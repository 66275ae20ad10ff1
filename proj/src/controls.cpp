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

#include "rtcshim/controls.hpp"

#include <algorithm>

#include "rtcshim/error.hpp"

namespace rtcshim {

namespace {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string_view to_string(ControlEventKind kind) {
  switch (kind) {
    case ControlEventKind::kUpdated: return "updated";
    case ControlEventKind::kDeleted: return "deleted";
    case ControlEventKind::kTriggered: return "triggered";
  }
  return "?";
}

json to_json(const ControlEvent& event) {
  json j = {{"name", event.name}, {"kind", to_string(event.kind)}, {"version", event.version}};
  if (event.old_value) j["old_value"] = to_json(*event.old_value);
  if (event.new_value) j["new_value"] = to_json(*event.new_value);
  return j;
}

json to_json(const ControlEntry& entry) {
  return {{"name", entry.name},
          {"value", to_json(entry.value)},
          {"version", entry.version},
          {"updated_at", entry.updated_at_ms}};
}

bool pattern_well_formed(std::string_view pattern) {
  if (pattern.empty()) return false;
  const auto star = pattern.find('*');
  return star == std::string_view::npos || star == pattern.size() - 1;
}

bool pattern_matches(std::string_view pattern, std::string_view name) {
  if (!pattern.empty() && pattern.back() == '*') {
    pattern.remove_suffix(1);
    return name.substr(0, pattern.size()) == pattern;
  }
  return pattern == name;
}

Subscription::~Subscription() = default;

void Subscription::push(const ControlEvent& event) {
  {
    std::lock_guard lock(mu_);
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(event);
  }
  cv_.notify_one();
}

std::optional<ControlEvent> Subscription::try_next() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  ControlEvent event = std::move(queue_.front());
  queue_.pop_front();
  return event;
}

std::optional<ControlEvent> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  if (!cv_.wait_for(lock, timeout, [this] { return !queue_.empty(); })) return std::nullopt;
  ControlEvent event = std::move(queue_.front());
  queue_.pop_front();
  return event;
}

std::vector<ControlEvent> Subscription::drain() {
  std::lock_guard lock(mu_);
  std::vector<ControlEvent> out(std::make_move_iterator(queue_.begin()),
                                std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::uint64_t Subscription::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

ControlsBus::ControlsBus() : ControlsBus(system_now_ms) {}

ControlsBus::ControlsBus(Clock clock) : clock_(std::move(clock)) {}

std::uint64_t ControlsBus::next_version_locked(const std::string& name) {
  return ++last_version_[name];
}

std::size_t ControlsBus::publish_locked(const ControlEvent& event) {
  std::size_t delivered = 0;
  auto it = subscribers_.begin();
  while (it != subscribers_.end()) {
    auto sub = it->lock();
    if (!sub) {
      it = subscribers_.erase(it);
      continue;
    }
    if (pattern_matches(sub->pattern(), event.name)) {
      sub->push(event);
      ++delivered;
    }
    ++it;
  }
  return delivered;
}

std::uint64_t ControlsBus::set(std::string_view name, Scalar value) {
  if (name.empty()) throw Error(Errc::kInvalidValue, "control name must not be empty");
  std::lock_guard lock(mu_);
  const std::string key(name);
  const std::uint64_t version = next_version_locked(key);
  ControlEvent event{key, ControlEventKind::kUpdated, std::nullopt, value, version};
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    event.old_value = it->second.value;
    it->second.value = std::move(value);
    it->second.version = version;
    it->second.updated_at_ms = clock_();
  } else {
    entries_.emplace(key, ControlEntry{key, std::move(value), version, clock_()});
  }
  publish_locked(event);
  return version;
}

std::uint64_t ControlsBus::set(std::string_view name, const json& value) {
  auto scalar = scalar_from_json(value);
  if (!scalar) {
    throw Error(Errc::kInvalidType,
                "control '" + std::string(name) + "' must be a string, boolean or number");
  }
  return set(name, std::move(*scalar));
}

std::optional<Scalar> ControlsBus::get(std::string_view name) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return it->second.value;
}

std::optional<ControlEntry> ControlsBus::entry(std::string_view name) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool ControlsBus::erase(std::string_view name) {
  std::lock_guard lock(mu_);
  auto it = entries_.find(name);
  if (it == entries_.end()) return false;
  const std::string key = it->first;
  ControlEvent event{key, ControlEventKind::kDeleted, it->second.value, std::nullopt,
                     next_version_locked(key)};
  entries_.erase(it);
  publish_locked(event);
  return true;
}

std::size_t ControlsBus::trigger(std::string_view name, Scalar payload) {
  if (name.empty()) throw Error(Errc::kInvalidValue, "event name must not be empty");
  std::lock_guard lock(mu_);
  const std::string key(name);
  ControlEvent event{key, ControlEventKind::kTriggered, std::nullopt, std::move(payload),
                     next_version_locked(key)};
  return publish_locked(event);
}

std::shared_ptr<Subscription> ControlsBus::subscribe(std::string pattern, std::size_t capacity) {
  if (!pattern_well_formed(pattern)) {
    throw Error(Errc::kInvalidValue, "malformed subscription pattern '" + pattern + "'");
  }
  std::shared_ptr<Subscription> sub(new Subscription(std::move(pattern), std::max<std::size_t>(capacity, 1)));
  std::lock_guard lock(mu_);
  subscribers_.push_back(sub);
  return sub;
}

std::vector<ControlEntry> ControlsBus::snapshot() const {
  std::lock_guard lock(mu_);
  std::vector<ControlEntry> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(entry);
  return out;
}

json ControlsBus::snapshot_json() const {
  json out = json::object();
  for (const auto& entry : snapshot()) out[entry.name] = to_json(entry.value);
  return out;
}

}  // namespace rtcshim
