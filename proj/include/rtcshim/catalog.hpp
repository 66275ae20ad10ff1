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
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rtcshim/category.hpp"
#include "rtcshim/controls.hpp"
#include "rtcshim/payload.hpp"
#include "rtcshim/scalar.hpp"

namespace rtcshim {

struct EngineSettings {
  bool strict = false;
  std::int64_t stats_interval_ms = 1000;
  std::optional<std::string> savestats_sink;
  std::optional<std::uint64_t> seed;

  bool operator==(const EngineSettings&) const = default;
};

// Throws Error(kInvalidConfig) when stats_interval_ms < 100.
void validate(const EngineSettings& s);
json to_json(const EngineSettings& s);
// Fields absent from `j` keep their value in `base`.
EngineSettings settings_from_json(const json& j, EngineSettings base = {});

struct InterceptContext {
  enum class Kind { kMethod, kEvent };

  std::string context;
  Kind kind = Kind::kMethod;
  json args = json::array();
  std::string session_id;
};

// Everything a running transform may touch besides the payload.
struct TransformCall {
  CategoryId category;
  const InterceptContext& ctx;
  // Per-session document that survives across dispatches.
  json& state;
  std::mt19937_64& rng;
  ControlsBus& controls;
  const EngineSettings& settings;
  const std::vector<std::string>& requested;
  const std::vector<std::optional<json>>& bound;
  // Free-form records surfaced in the dispatch log.
  std::vector<json> effects;

  // Bound value for a requested name; nullptr when absent or not requested.
  const json* binding(const std::string& name) const;
  void log(json entry) { effects.push_back(std::move(entry)); }
};

enum class Verdict { kUnchanged, kModified, kShortCircuit };

struct TransformResult {
  Verdict verdict = Verdict::kUnchanged;
  // Local answer for kShortCircuit; nullopt means "consume silently".
  std::optional<Payload> result;

  static TransformResult unchanged() { return {}; }
  static TransformResult modified() { return {Verdict::kModified, std::nullopt}; }
  static TransformResult short_circuit(std::optional<Payload> r = std::nullopt) {
    return {Verdict::kShortCircuit, std::move(r)};
  }
};

// Mutates the payload in place and says what it did. May throw; the engine
// turns exceptions into a Fail outcome.
using TransformFn = std::function<TransformResult(TransformCall&, Payload&)>;

enum class ParamType { kString, kBool, kNumber, kInteger };

struct ParamSchema {
  std::string name;
  ParamType type = ParamType::kString;
  std::optional<Scalar> default_value;
  bool required = false;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<std::string> choices;
  std::string description;
};

struct BuiltinInfo {
  std::string name;
  CategoryId category = CategoryId::kSession;
  std::string description;
  std::vector<ParamSchema> params;
  bool strict_safe = true;
  // Builds a transform from validated parameters (defaults filled in).
  std::function<TransformFn(const Params&)> factory;
};

json to_json(const ParamSchema& p);
json to_json(const BuiltinInfo& b);

// Fills defaults and checks types, ranges and choices. Throws
// Error(kInvalidParams) for unknown names, missing required ones or bad values.
Params validate_params(const BuiltinInfo& builtin, const Params& given);

// Binding names a transform of this category may request. Every category
// also admits "controls".
const std::set<std::string>& allowed_bindings(CategoryId category);

class Catalog {
 public:
  // Throws Error(kInvalidValue) if the (category, name) pair exists.
  void add(BuiltinInfo info);
  const BuiltinInfo* find(CategoryId category, const std::string& name) const;
  std::vector<const BuiltinInfo*> list(CategoryId category) const;
  std::vector<const BuiltinInfo*> all() const;

  // Machine-readable manifest: {"builtins": [{name, category, description,
  // strict_safe, params: [...]}]}.
  json manifest(std::optional<CategoryId> category = std::nullopt) const;

  // The stock builtins.
  static Catalog standard();

 private:
  std::map<std::pair<CategoryId, std::string>, std::shared_ptr<const BuiltinInfo>> entries_;
};

// Parameter accessors for builtin factories; params are pre-validated.
std::string param_string(const Params& p, const std::string& name);
double param_number(const Params& p, const std::string& name);
bool param_bool(const Params& p, const std::string& name);
std::optional<Scalar> param_opt(const Params& p, const std::string& name);

}  // namespace rtcshim
