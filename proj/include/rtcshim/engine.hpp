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

#include <array>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rtcshim/catalog.hpp"
#include "rtcshim/controls.hpp"
#include "rtcshim/error.hpp"
#include "rtcshim/payload.hpp"

namespace rtcshim {

struct TransformSpec {
  CategoryId category = CategoryId::kSession;
  std::string builtin;
  Params params;
  std::vector<std::string> requested;
  bool enabled = true;
};

json to_json(const TransformSpec& spec);
// `category` is taken from `j` when present, else from the argument.
TransformSpec transform_spec_from_json(const json& j, std::optional<CategoryId> category = std::nullopt);

struct TransformHandle {
  CategoryId category;
  std::string builtin;
  std::uint64_t generation = 0;
};

struct ErrorDescriptor {
  Errc code = Errc::kInternal;
  std::string message;
  std::string builtin;
};

struct PassThrough { Payload payload; };
struct Modified { Payload payload; };
struct ShortCircuit { std::optional<Payload> result; };
struct Fail {
  ErrorDescriptor error;
  // The original payload, forwarded unchanged.
  Payload payload;
};

using DispatchOutcome = std::variant<PassThrough, Modified, ShortCircuit, Fail>;

std::string_view outcome_name(const DispatchOutcome& o);
// Payload to forward downstream; nullptr for ShortCircuit.
const Payload* forwarded(const DispatchOutcome& o);
Payload* forwarded(DispatchOutcome& o);

struct DispatchRecord {
  CategoryId category;
  std::string session_id;
  std::string context;
  std::string outcome;
  std::string builtin;
  std::optional<ErrorDescriptor> error;
  std::vector<json> effects;
};

json to_json(const DispatchRecord& r);

// A binding value, or a producer evaluated only if the name is requested.
using Binding = std::variant<json, std::function<json()>>;
using BindingMap = std::map<std::string, Binding>;

class Engine {
 public:
  Engine(EngineSettings settings, std::shared_ptr<ControlsBus> controls, Catalog catalog = Catalog::standard());

  // Atomically replaces the category's transform. Throws UnknownBuiltin,
  // InvalidParams or StrictViolation.
  TransformHandle install_transform(const TransformSpec& spec);
  bool uninstall_transform(CategoryId category);
  std::optional<TransformSpec> active(CategoryId category) const;

  // Never throws. Identity when nothing enabled is installed; transform
  // errors and illegal short circuits become Fail with the input forwarded.
  DispatchOutcome dispatch(CategoryId category, const InterceptContext& ctx, Payload payload) noexcept;

  // Values for spec.requested in order; nullopt marks a name not present.
  static std::vector<std::optional<json>> bind_params(const TransformSpec& spec, const BindingMap& available);

  EngineSettings settings() const;
  // Validates. Switching strict on uninstalls transforms whose builtin is
  // not strict-safe and returns their categories.
  std::vector<CategoryId> set_settings(const EngineSettings& settings);

  // Host extension point. Plugins are never strict-safe.
  void register_plugin(BuiltinInfo info);
  Catalog catalog() const;

  json session_state(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;
  void end_session(const std::string& session_id);

  using Observer = std::function<void(const DispatchRecord&)>;
  // Observers run on the dispatching thread after the transform finishes.
  std::size_t add_observer(Observer fn);
  void remove_observer(std::size_t id);

  std::shared_ptr<ControlsBus> controls() const { return controls_; }

  struct Counters {
    std::uint64_t dispatched = 0;
    std::uint64_t modified = 0;
    std::uint64_t short_circuited = 0;
    std::uint64_t failed = 0;
  };
  Counters counters(CategoryId category) const;

 private:
  struct Installed {
    TransformSpec spec;
    TransformFn fn;
    bool strict_safe = true;
    std::uint64_t generation = 0;
  };

  struct SessionSlot {
    std::mutex mu;
    json state = json::object();
    std::mt19937_64 rng;
  };

  std::shared_ptr<SessionSlot> slot(const std::string& session_id);
  BindingMap bindings_for(CategoryId category, const InterceptContext& ctx, const Payload& payload,
                          const json& state) const;
  void notify(const DispatchRecord& record);
  void announce(CategoryId category, const std::string& builtin);

  std::shared_ptr<ControlsBus> controls_;

  mutable std::mutex mu_;
  EngineSettings settings_;
  Catalog catalog_;
  std::array<std::shared_ptr<const Installed>, kCategoryCount> installed_{};
  std::uint64_t generation_ = 0;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::map<std::size_t, Observer> observers_;
  std::size_t next_observer_ = 1;

  struct AtomicCounters {
    std::atomic<std::uint64_t> dispatched{0}, modified{0}, short_circuited{0}, failed{0};
  };
  std::array<AtomicCounters, kCategoryCount> counters_{};
};

}  // namespace rtcshim
