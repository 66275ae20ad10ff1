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

#include "rtcshim/engine.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace rtcshim {

// ---- settings ----

void validate(const EngineSettings& s) {
  if (s.stats_interval_ms < 100) {
    throw Error(Errc::kInvalidConfig, fmt::format("stats_interval_ms must be >= 100, got {}", s.stats_interval_ms));
  }
}

json to_json(const EngineSettings& s) {
  json j{{"strict", s.strict}, {"stats_interval_ms", s.stats_interval_ms}};
  j["savestats"] = s.savestats_sink ? json(*s.savestats_sink) : json(nullptr);
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  return j;
}

EngineSettings settings_from_json(const json& j, EngineSettings s) {
  if (!j.is_object()) throw Error(Errc::kInvalidConfig, "settings must be an object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "strict") {
        s.strict = v.get<bool>();
      } else if (k == "stats_interval_ms") {
        if (!v.is_number_integer()) throw Error(Errc::kInvalidConfig, "stats_interval_ms must be an integer");
        s.stats_interval_ms = v.get<std::int64_t>();
      } else if (k == "savestats" || k == "savestats_sink") {
        s.savestats_sink = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
      } else if (k == "seed") {
        if (!v.is_null() && !v.is_number_unsigned()) throw Error(Errc::kInvalidConfig, "seed must be a non-negative integer");
        s.seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
      } else {
        throw Error(Errc::kInvalidConfig, "unknown settings key " + k);
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidConfig, e.what());
  }
  validate(s);
  return s;
}

// ---- catalog ----

const json* TransformCall::binding(const std::string& name) const {
  for (std::size_t i = 0; i < requested.size() && i < bound.size(); ++i) {
    if (requested[i] == name && bound[i]) return &*bound[i];
  }
  return nullptr;
}

namespace {

std::string_view type_name(ParamType t) {
  switch (t) {
    case ParamType::kString: return "string";
    case ParamType::kBool: return "boolean";
    case ParamType::kNumber: return "number";
    case ParamType::kInteger: return "integer";
  }
  return "?";
}

}  // namespace

json to_json(const ParamSchema& p) {
  json j{{"name", p.name}, {"type", type_name(p.type)}, {"required", p.required}};
  if (p.default_value) j["default"] = to_json(*p.default_value);
  if (p.min) j["min"] = *p.min;
  if (p.max) j["max"] = *p.max;
  if (!p.choices.empty()) j["choices"] = p.choices;
  if (!p.description.empty()) j["description"] = p.description;
  return j;
}

json to_json(const BuiltinInfo& b) {
  json params = json::array();
  for (const auto& p : b.params) params.push_back(to_json(p));
  return json{{"name", b.name},
              {"category", to_string(b.category)},
              {"description", b.description},
              {"strict_safe", b.strict_safe},
              {"params", params}};
}

Params validate_params(const BuiltinInfo& builtin, const Params& given) {
  auto fail = [&](const std::string& msg) {
    throw Error(Errc::kInvalidParams, fmt::format("{}.{}: {}", to_string(builtin.category), builtin.name, msg));
  };
  for (const auto& [name, v] : given) {
    const bool known = std::any_of(builtin.params.begin(), builtin.params.end(),
                                   [&](const ParamSchema& p) { return p.name == name; });
    if (!known) fail("unknown parameter " + name);
  }
  Params out;
  for (const auto& schema : builtin.params) {
    auto it = given.find(schema.name);
    if (it == given.end()) {
      if (schema.required) fail("missing parameter " + schema.name);
      if (schema.default_value) out[schema.name] = *schema.default_value;
      continue;
    }
    Scalar v = it->second;
    switch (schema.type) {
      case ParamType::kString:
        if (!is_string(v)) fail(schema.name + " must be a string");
        break;
      case ParamType::kBool:
        if (!is_bool(v)) fail(schema.name + " must be a boolean");
        break;
      case ParamType::kNumber:
      case ParamType::kInteger: {
        if (!is_number(v)) fail(schema.name + " must be a number");
        const double d = std::get<double>(v);
        if (!std::isfinite(d)) fail(schema.name + " must be finite");
        if (schema.type == ParamType::kInteger && d != std::floor(d)) fail(schema.name + " must be an integer");
        if (schema.min && d < *schema.min) fail(fmt::format("{} must be >= {}", schema.name, *schema.min));
        if (schema.max && d > *schema.max) fail(fmt::format("{} must be <= {}", schema.name, *schema.max));
        break;
      }
    }
    if (!schema.choices.empty()) {
      const auto s = scalar_to_string(v);
      if (std::find(schema.choices.begin(), schema.choices.end(), s) == schema.choices.end()) {
        fail(fmt::format("{} must be one of [{}]", schema.name, fmt::join(schema.choices, ", ")));
      }
    }
    out[schema.name] = v;
  }
  return out;
}

const std::set<std::string>& allowed_bindings(CategoryId category) {
  static const std::array<std::set<std::string>, kCategoryCount> sets = [] {
    std::array<std::set<std::string>, kCategoryCount> s;
    s[index_of(CategoryId::kMedia)] = {"constraints", "context"};
    s[index_of(CategoryId::kDevices)] = {"devices"};
    s[index_of(CategoryId::kSession)] = {"id", "connection", "session", "context", "data"};
    s[index_of(CategoryId::kConnect)] = {"id", "config", "configuration", "constraints", "data"};
    s[index_of(CategoryId::kNetwork)] = {"id", "connection", "candidate", "context"};
    s[index_of(CategoryId::kStats)] = {"id",   "connection", "type",  "name",     "args", "data",
                                       "parsequery", "query", "plot", "compress", "send"};
    s[index_of(CategoryId::kData)] = {"id", "connection", "type", "context", "channel", "args", "data"};
    s[index_of(CategoryId::kSocket)] = {"socket", "type", "context", "args", "data"};
    s[index_of(CategoryId::kRequest)] = {"context", "args", "xhr", "resolve", "reject", "data"};
    s[index_of(CategoryId::kSecurity)] = {"headers", "context", "data"};
    s[index_of(CategoryId::kCpu)] = {"details"};
    for (auto& names : s) names.insert("controls");
    return s;
  }();
  return sets[index_of(category)];
}

void Catalog::add(BuiltinInfo info) {
  auto key = std::make_pair(info.category, info.name);
  if (entries_.count(key)) {
    throw Error(Errc::kInvalidValue, fmt::format("builtin {}.{} already registered", to_string(info.category), info.name));
  }
  entries_.emplace(std::move(key), std::make_shared<const BuiltinInfo>(std::move(info)));
}

const BuiltinInfo* Catalog::find(CategoryId category, const std::string& name) const {
  auto it = entries_.find({category, name});
  return it == entries_.end() ? nullptr : it->second.get();
}

std::vector<const BuiltinInfo*> Catalog::list(CategoryId category) const {
  std::vector<const BuiltinInfo*> out;
  for (const auto& [key, info] : entries_) {
    if (key.first == category) out.push_back(info.get());
  }
  return out;
}

std::vector<const BuiltinInfo*> Catalog::all() const {
  std::vector<const BuiltinInfo*> out;
  for (const auto& [key, info] : entries_) out.push_back(info.get());
  return out;
}

json Catalog::manifest(std::optional<CategoryId> category) const {
  json list = json::array();
  for (const auto* b : category ? this->list(*category) : all()) list.push_back(to_json(*b));
  return json{{"builtins", list}};
}

std::string param_string(const Params& p, const std::string& name) {
  auto it = p.find(name);
  return it != p.end() && is_string(it->second) ? std::get<std::string>(it->second) : std::string();
}

double param_number(const Params& p, const std::string& name) {
  auto it = p.find(name);
  return it != p.end() && is_number(it->second) ? std::get<double>(it->second) : 0.0;
}

bool param_bool(const Params& p, const std::string& name) {
  auto it = p.find(name);
  return it != p.end() && is_bool(it->second) && std::get<bool>(it->second);
}

std::optional<Scalar> param_opt(const Params& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) return std::nullopt;
  return it->second;
}

// ---- transform specs ----

json to_json(const TransformSpec& spec) {
  json params = json::object();
  for (const auto& [k, v] : spec.params) params[k] = to_json(v);
  return json{{"category", to_string(spec.category)},
              {"builtin", spec.builtin},
              {"params", params},
              {"requested", spec.requested},
              {"enabled", spec.enabled}};
}

TransformSpec transform_spec_from_json(const json& j, std::optional<CategoryId> category) {
  if (!j.is_object()) throw Error(Errc::kInvalidParams, "transform spec must be an object");
  TransformSpec spec;
  if (j.contains("category")) {
    auto c = parse_category(j.at("category").get<std::string>());
    if (!c) throw Error(Errc::kInvalidParams, "unknown category " + j.at("category").get<std::string>());
    if (category && *c != *category) throw Error(Errc::kInvalidParams, "category mismatch");
    spec.category = *c;
  } else if (category) {
    spec.category = *category;
  } else {
    throw Error(Errc::kInvalidParams, "transform spec lacks a category");
  }
  if (!j.contains("builtin") || !j.at("builtin").is_string()) {
    throw Error(Errc::kInvalidParams, "transform spec lacks a builtin name");
  }
  spec.builtin = j.at("builtin").get<std::string>();
  if (auto it = j.find("params"); it != j.end()) {
    if (!it->is_object()) throw Error(Errc::kInvalidParams, "params must be an object");
    for (const auto& [k, v] : it->items()) {
      auto s = scalar_from_json(v);
      if (!s) throw Error(Errc::kInvalidParams, "parameter " + k + " must be a string, boolean or number");
      spec.params[k] = *s;
    }
  }
  if (auto it = j.find("requested"); it != j.end()) {
    if (!it->is_array()) throw Error(Errc::kInvalidParams, "requested must be an array of names");
    for (const auto& n : *it) {
      if (!n.is_string()) throw Error(Errc::kInvalidParams, "requested must be an array of names");
      spec.requested.push_back(n.get<std::string>());
    }
  }
  if (auto it = j.find("enabled"); it != j.end()) {
    if (!it->is_boolean()) throw Error(Errc::kInvalidParams, "enabled must be a boolean");
    spec.enabled = it->get<bool>();
  }
  return spec;
}

// ---- outcomes ----

std::string_view outcome_name(const DispatchOutcome& o) {
  static constexpr std::string_view kNames[] = {"PassThrough", "Modified", "ShortCircuit", "Fail"};
  return kNames[o.index()];
}

const Payload* forwarded(const DispatchOutcome& o) {
  return std::visit(
      [](const auto& v) -> const Payload* {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ShortCircuit>) {
          return nullptr;
        } else {
          return &v.payload;
        }
      },
      o);
}

Payload* forwarded(DispatchOutcome& o) { return const_cast<Payload*>(forwarded(std::as_const(o))); }

json to_json(const DispatchRecord& r) {
  json j{{"category", to_string(r.category)},
         {"session_id", r.session_id},
         {"context", r.context},
         {"outcome", r.outcome}};
  if (!r.builtin.empty()) j["builtin"] = r.builtin;
  if (r.error) j["error"] = json{{"code", errc_name(r.error->code)}, {"message", r.error->message}};
  if (!r.effects.empty()) j["effects"] = r.effects;
  return j;
}

// ---- engine ----

Engine::Engine(EngineSettings settings, std::shared_ptr<ControlsBus> controls, Catalog catalog)
    : controls_(std::move(controls)), settings_(std::move(settings)), catalog_(std::move(catalog)) {
  validate(settings_);
  if (!controls_) controls_ = std::make_shared<ControlsBus>();
}

TransformHandle Engine::install_transform(const TransformSpec& spec) {
  std::shared_ptr<const Installed> installed;
  {
    std::lock_guard lock(mu_);
    const BuiltinInfo* info = catalog_.find(spec.category, spec.builtin);
    if (!info) {
      throw Error(Errc::kUnknownBuiltin,
                  fmt::format("no builtin {} in category {}", spec.builtin, to_string(spec.category)));
    }
    if (settings_.strict && !info->strict_safe) {
      throw Error(Errc::kStrictViolation, fmt::format("{} is not allowed in strict mode", spec.builtin));
    }
    const auto& allowed = allowed_bindings(spec.category);
    for (const auto& name : spec.requested) {
      if (!allowed.count(name)) {
        throw Error(Errc::kInvalidParams,
                    fmt::format("binding {} is not available in category {}", name, to_string(spec.category)));
      }
    }
    auto params = validate_params(*info, spec.params);
    auto fn = info->factory(params);
    auto entry = std::make_shared<Installed>();
    entry->spec = spec;
    entry->spec.params = std::move(params);
    entry->fn = std::move(fn);
    entry->strict_safe = info->strict_safe;
    entry->generation = ++generation_;
    installed = entry;
    installed_[index_of(spec.category)] = installed;
  }
  spdlog::info("installed {}.{}", to_string(spec.category), spec.builtin);
  announce(spec.category, spec.enabled ? spec.builtin : "");
  return TransformHandle{spec.category, spec.builtin, installed->generation};
}

bool Engine::uninstall_transform(CategoryId category) {
  {
    std::lock_guard lock(mu_);
    auto& slot = installed_[index_of(category)];
    if (!slot) return false;
    slot.reset();
  }
  announce(category, "");
  return true;
}

void Engine::announce(CategoryId category, const std::string& builtin) {
  controls_->trigger(fmt::format("engine.category.{}", to_string(category)), Scalar{builtin});
}

std::optional<TransformSpec> Engine::active(CategoryId category) const {
  std::lock_guard lock(mu_);
  const auto& slot = installed_[index_of(category)];
  if (!slot) return std::nullopt;
  return slot->spec;
}

std::shared_ptr<Engine::SessionSlot> Engine::slot(const std::string& session_id) {
  std::lock_guard lock(mu_);
  auto& s = sessions_[session_id];
  if (!s) {
    s = std::make_shared<SessionSlot>();
    s->rng.seed(settings_.seed.value_or(0) ^ detail::fnv1a(session_id));
  }
  return s;
}

std::vector<std::optional<json>> Engine::bind_params(const TransformSpec& spec, const BindingMap& available) {
  std::vector<std::optional<json>> out;
  out.reserve(spec.requested.size());
  for (const auto& name : spec.requested) {
    auto it = available.find(name);
    if (it == available.end()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    out.emplace_back(std::visit(
        [](const auto& b) -> json {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, json>) {
            return b;
          } else {
            return b();
          }
        },
        it->second));
  }
  return out;
}

BindingMap Engine::bindings_for(CategoryId category, const InterceptContext& ctx, const Payload& payload,
                                const json& state) const {
  BindingMap m;
  auto payload_json = [&payload] { return to_json(payload); };
  auto controls = controls_;
  m["controls"] = std::function<json()>([controls] { return controls->snapshot_json(); });
  m["context"] = json(ctx.context);
  m["type"] = json(ctx.kind == InterceptContext::Kind::kMethod ? "method" : "event");
  m["args"] = ctx.args;
  m["data"] = state;
  m["id"] = json(ctx.session_id);
  m["connection"] = json{{"id", ctx.session_id}};
  switch (category) {
    case CategoryId::kSession:
      if (std::holds_alternative<SessionDescription>(payload)) m["session"] = std::function<json()>(payload_json);
      break;
    case CategoryId::kNetwork: m["candidate"] = std::function<json()>(payload_json); break;
    case CategoryId::kMedia: m["constraints"] = std::function<json()>(payload_json); break;
    case CategoryId::kDevices: m["devices"] = std::function<json()>(payload_json); break;
    case CategoryId::kConnect:
      m["config"] = std::function<json()>(payload_json);
      m["configuration"] = std::function<json()>(payload_json);
      break;
    case CategoryId::kStats:
      m["name"] = json(ctx.context);
      m["query"] = std::function<json()>(payload_json);
      m["parsequery"] = std::function<json()>(payload_json);
      break;
    case CategoryId::kData:
      if (const auto* d = std::get_if<DataMessage>(&payload)) m["channel"] = json{{"label", d->label}};
      break;
    case CategoryId::kSocket:
      if (const auto* s = std::get_if<SocketMessage>(&payload)) m["socket"] = json{{"url", s->url}};
      break;
    case CategoryId::kRequest:
      m["xhr"] = std::function<json()>(payload_json);
      m["resolve"] = json{{"short_circuit", true}};
      m["reject"] = json{{"short_circuit", true}};
      break;
    case CategoryId::kSecurity:
      if (const auto* h = std::get_if<HttpMessage>(&payload)) m["headers"] = to_json(*h).at("headers");
      break;
    case CategoryId::kCpu:
      if (const auto* c = std::get_if<CpuSample>(&payload)) m["details"] = to_json(*c).at("per_core");
      break;
  }
  return m;
}

DispatchOutcome Engine::dispatch(CategoryId category, const InterceptContext& ctx, Payload payload) noexcept {
  auto& counters = counters_[index_of(category)];
  counters.dispatched.fetch_add(1, std::memory_order_relaxed);

  std::shared_ptr<const Installed> installed;
  EngineSettings settings;
  {
    std::lock_guard lock(mu_);
    installed = installed_[index_of(category)];
    settings = settings_;
  }
  if (!installed || !installed->spec.enabled) return PassThrough{std::move(payload)};

  DispatchRecord record{category, ctx.session_id, ctx.context, "", installed->spec.builtin, std::nullopt, {}};
  DispatchOutcome outcome = PassThrough{payload};
  try {
    auto session = slot(ctx.session_id);
    std::lock_guard session_lock(session->mu);
    if (!payload_fits(category, payload)) {
      throw Error(Errc::kPayloadMismatch, fmt::format("{} cannot take a {} payload", to_string(category),
                                                      payload_type_name(payload)));
    }
    const auto bound = bind_params(installed->spec, bindings_for(category, ctx, payload, session->state));
    TransformCall call{category, ctx,      session->state,          session->rng, *controls_,
                       settings, installed->spec.requested, bound, {}};
    Payload working = payload;
    const std::size_t original_index = working.index();
    auto result = installed->fn(call, working);
    record.effects = std::move(call.effects);
    switch (result.verdict) {
      case Verdict::kUnchanged: outcome = PassThrough{std::move(payload)}; break;
      case Verdict::kModified:
        if (working.index() != original_index) {
          throw Error(Errc::kPayloadMismatch, "transform changed the payload type");
        }
        outcome = Modified{std::move(working)};
        break;
      case Verdict::kShortCircuit:
        if (!allows_short_circuit(category)) {
          throw Error(Errc::kInvalidValue,
                      fmt::format("category {} cannot resolve a call locally", to_string(category)));
        }
        outcome = ShortCircuit{std::move(result.result)};
        break;
    }
  } catch (const Error& e) {
    record.error = ErrorDescriptor{e.code(), e.what(), installed->spec.builtin};
  } catch (const std::exception& e) {
    record.error = ErrorDescriptor{Errc::kInternal, e.what(), installed->spec.builtin};
  } catch (...) {
    record.error = ErrorDescriptor{Errc::kInternal, "unknown exception", installed->spec.builtin};
  }
  if (record.error) {
    spdlog::warn("{}.{} failed: {}", to_string(category), installed->spec.builtin, record.error->message);
    outcome = Fail{*record.error, std::move(payload)};
  }

  switch (outcome.index()) {
    case 1: counters.modified.fetch_add(1, std::memory_order_relaxed); break;
    case 2: counters.short_circuited.fetch_add(1, std::memory_order_relaxed); break;
    case 3: counters.failed.fetch_add(1, std::memory_order_relaxed); break;
    default: break;
  }
  record.outcome = std::string(outcome_name(outcome));
  try {
    notify(record);
  } catch (...) {
    // Observers must not break dispatch.
  }
  return outcome;
}

void Engine::notify(const DispatchRecord& record) {
  std::vector<Observer> observers;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, fn] : observers_) observers.push_back(fn);
  }
  for (const auto& fn : observers) fn(record);
}

EngineSettings Engine::settings() const {
  std::lock_guard lock(mu_);
  return settings_;
}

std::vector<CategoryId> Engine::set_settings(const EngineSettings& settings) {
  validate(settings);
  std::vector<CategoryId> removed;
  {
    std::lock_guard lock(mu_);
    settings_ = settings;
    if (settings.strict) {
      for (CategoryId c : kAllCategories) {
        auto& slot = installed_[index_of(c)];
        if (slot && !slot->strict_safe) {
          slot.reset();
          removed.push_back(c);
        }
      }
    }
  }
  for (CategoryId c : removed) {
    spdlog::info("strict mode removed transform for {}", to_string(c));
    announce(c, "");
  }
  return removed;
}

void Engine::register_plugin(BuiltinInfo info) {
  info.strict_safe = false;
  std::lock_guard lock(mu_);
  catalog_.add(std::move(info));
}

Catalog Engine::catalog() const {
  std::lock_guard lock(mu_);
  return catalog_;
}

json Engine::session_state(const std::string& session_id) const {
  std::shared_ptr<SessionSlot> s;
  {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) return json::object();
    s = it->second;
  }
  std::lock_guard lock(s->mu);
  return s->state;
}

std::vector<std::string> Engine::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void Engine::end_session(const std::string& session_id) {
  std::lock_guard lock(mu_);
  sessions_.erase(session_id);
}

std::size_t Engine::add_observer(Observer fn) {
  std::lock_guard lock(mu_);
  observers_[next_observer_] = std::move(fn);
  return next_observer_++;
}

void Engine::remove_observer(std::size_t id) {
  std::lock_guard lock(mu_);
  observers_.erase(id);
}

Engine::Counters Engine::counters(CategoryId category) const {
  const auto& c = counters_[index_of(category)];
  return Counters{c.dispatched.load(), c.modified.load(), c.short_circuited.load(), c.failed.load()};
}

}  // namespace rtcshim
