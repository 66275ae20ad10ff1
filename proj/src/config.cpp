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

#include "rtcshim/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rtcshim/error.hpp"

namespace rtcshim {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(Errc::kInvalidConfig, fmt::format("{}: {}", where, what));
}

// Re-raises library errors as InvalidConfig, prefixed with the config key.
template <class F>
auto at(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidConfig && std::string_view(e.what()).rfind(where, 0) == 0) throw;
    bad(where, e.what());
  } catch (const json::exception& e) {
    bad(where, e.what());
  }
}

void known_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* key) { return k == key; }) == keys.end()) {
      bad(where, fmt::format("unknown key '{}'", k));
    }
  }
}

}  // namespace

std::pair<std::string, std::uint16_t> parse_listen(std::string_view s) {
  std::string host;
  std::string_view port;
  if (!s.empty() && s[0] == '[') {
    auto close = s.find(']');
    if (close == std::string_view::npos || close + 1 >= s.size() || s[close + 1] != ':') {
      bad("listen", fmt::format("bad address '{}'", s));
    }
    host = std::string(s.substr(1, close - 1));
    port = s.substr(close + 2);
  } else {
    auto colon = s.rfind(':');
    if (colon == std::string_view::npos) bad("listen", fmt::format("'{}' has no port", s));
    host = std::string(s.substr(0, colon));
    port = s.substr(colon + 1);
  }
  if (host.empty()) host = "0.0.0.0";
  if (port.empty() || port.size() > 5 || port.find_first_not_of("0123456789") != std::string_view::npos) {
    bad("listen", fmt::format("bad port in '{}'", s));
  }
  const int p = std::stoi(std::string(port));
  if (p > 65535) bad("listen", fmt::format("port out of range in '{}'", s));
  return {host, static_cast<std::uint16_t>(p)};
}

EngineConfig engine_config_from_json(const json& j) {
  EngineConfig c;
  known_keys(j, "config", {"settings", "categories", "controls_initial", "proxy", "harness", "admin", "cpu_monitor"});

  if (j.contains("settings")) c.settings = at("settings", [&] { return settings_from_json(j["settings"]); });

  if (j.contains("categories")) {
    if (!j["categories"].is_object()) bad("categories", "must be an object keyed by category");
    for (const auto& [name, spec] : j["categories"].items()) {
      const std::string where = "categories." + name;
      auto id = parse_category(name);
      if (!id) bad(where, "unknown category");
      c.categories[*id] = at(where, [&] { return transform_spec_from_json(spec, *id); });
      if (c.categories[*id].category != *id) bad(where, "category inside the spec disagrees with its key");
    }
  }

  if (j.contains("controls_initial")) {
    if (!j["controls_initial"].is_object()) bad("controls_initial", "must be an object");
    for (const auto& [name, v] : j["controls_initial"].items()) {
      auto s = scalar_from_json(v);
      if (!s) bad("controls_initial." + name, "value must be a string, boolean or number");
      c.controls_initial[name] = *s;
    }
  }

  if (j.contains("proxy")) {
    const auto& p = j["proxy"];
    known_keys(p, "proxy", {"enabled", "listen", "upstream", "upstream_timeout_ms", "threads", "tls", "header_rules",
                            "fault_policy", "capacity"});
    at("proxy", [&] {
      c.proxy.enabled = p.value("enabled", true);
      if (p.contains("listen")) {
        auto [h, port] = parse_listen(p["listen"].get<std::string>());
        c.proxy.options.listen_host = h;
        c.proxy.options.listen_port = port;
      }
      json o = json::object();
      for (const char* k : {"upstream", "upstream_timeout_ms", "threads"}) {
        if (p.contains(k)) o[k] = p[k];
      }
      if (p.contains("tls")) {
        known_keys(p["tls"], "proxy.tls", {"cert", "key"});
        if (p["tls"].contains("cert")) o["tls_cert_file"] = p["tls"]["cert"];
        if (p["tls"].contains("key")) o["tls_key_file"] = p["tls"]["key"];
      }
      c.proxy.options = proxy_options_from_json(o, c.proxy.options);
      const auto cap = p.value("capacity", std::int64_t(10000));
      if (cap < 1) bad("proxy.capacity", "must be >= 1");
      c.proxy.capacity = static_cast<std::size_t>(cap);
    });
    if (p.contains("header_rules")) {
      if (!p["header_rules"].is_array()) bad("proxy.header_rules", "must be an array");
      std::size_t i = 0;
      for (const auto& r : p["header_rules"]) {
        c.proxy.header_rules.push_back(at(fmt::format("proxy.header_rules[{}]", i++), [&] { return header_rule_from_json(r); }));
      }
    }
    if (p.contains("fault_policy")) {
      c.proxy.fault_policy = at("proxy.fault_policy", [&] { return fault_policy_from_json(p["fault_policy"]); });
    }
  }

  if (j.contains("harness")) {
    const auto& h = j["harness"];
    known_keys(h, "harness", {"network", "codecs"});
    if (h.contains("network")) c.harness.network = at("harness.network", [&] { return network_model_from_json(h["network"]); });
    if (h.contains("codecs")) c.harness.codecs = at("harness.codecs", [&] { return codec_set_from_json(h["codecs"]); });
  }

  if (j.contains("admin")) {
    const auto& a = j["admin"];
    known_keys(a, "admin", {"enabled", "listen", "token", "panel_dir"});
    at("admin", [&] {
      c.admin.enabled = a.value("enabled", true);
      if (a.contains("listen")) std::tie(c.admin.host, c.admin.port) = parse_listen(a["listen"].get<std::string>());
      if (a.contains("token") && !a["token"].is_null()) c.admin.token = a["token"].get<std::string>();
      if (a.contains("panel_dir")) c.admin.panel_dir = a["panel_dir"].get<std::string>();
    });
  }

  if (j.contains("cpu_monitor")) {
    const auto& m = j["cpu_monitor"];
    known_keys(m, "cpu_monitor", {"enabled", "period_ms", "source", "synthetic_load"});
    at("cpu_monitor", [&] {
      c.cpu_monitor.enabled = m.value("enabled", true);
      c.cpu_monitor.period_ms = m.value("period_ms", c.cpu_monitor.period_ms);
      c.cpu_monitor.source = m.value("source", c.cpu_monitor.source);
      c.cpu_monitor.synthetic_load = m.value("synthetic_load", c.cpu_monitor.synthetic_load);
    });
  }
  return c;
}

json to_json(const EngineConfig& c) {
  json cats = json::object();
  for (const auto& [id, spec] : c.categories) cats[std::string(to_string(id))] = to_json(spec);
  json controls = json::object();
  for (const auto& [k, v] : c.controls_initial) controls[k] = to_json(v);
  json rules = json::array();
  for (const auto& r : c.proxy.header_rules) rules.push_back(to_json(r));
  json proxy = {{"enabled", c.proxy.enabled},
                {"listen", fmt::format("{}:{}", c.proxy.options.listen_host, c.proxy.options.listen_port)},
                {"upstream", c.proxy.options.upstream},
                {"upstream_timeout_ms", c.proxy.options.upstream_timeout_ms},
                {"threads", c.proxy.options.threads},
                {"header_rules", rules},
                {"fault_policy", to_json(c.proxy.fault_policy)},
                {"capacity", c.proxy.capacity}};
  if (c.proxy.options.tls_cert_file) {
    proxy["tls"] = {{"cert", *c.proxy.options.tls_cert_file}, {"key", c.proxy.options.tls_key_file.value_or("")}};
  }
  json admin = {{"enabled", c.admin.enabled}, {"listen", fmt::format("{}:{}", c.admin.host, c.admin.port)}};
  if (c.admin.token) admin["token"] = *c.admin.token;
  if (c.admin.panel_dir) admin["panel_dir"] = *c.admin.panel_dir;
  return {{"settings", to_json(c.settings)},
          {"categories", cats},
          {"controls_initial", controls},
          {"proxy", proxy},
          {"harness", {{"network", to_json(c.harness.network)}, {"codecs", to_json(c.harness.codecs)}}},
          {"admin", admin},
          {"cpu_monitor",
           {{"enabled", c.cpu_monitor.enabled},
            {"period_ms", c.cpu_monitor.period_ms},
            {"source", c.cpu_monitor.source},
            {"synthetic_load", c.cpu_monitor.synthetic_load}}}};
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_env_overrides(EngineConfig& c, const EnvLookup& env) {
  if (auto v = env("RTCSHIM_PROXY_LISTEN")) {
    std::tie(c.proxy.options.listen_host, c.proxy.options.listen_port) = parse_listen(*v);
    c.proxy.enabled = true;
  }
  if (auto v = env("RTCSHIM_UPSTREAM")) c.proxy.options.upstream = *v;
  if (auto v = env("RTCSHIM_ADMIN_LISTEN")) std::tie(c.admin.host, c.admin.port) = parse_listen(*v);
  if (auto v = env("RTCSHIM_ADMIN_TOKEN")) c.admin.token = *v;
  if (auto v = env("RTCSHIM_SEED")) {
    std::uint64_t seed = 0;
    const auto* end = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(v->data(), end, seed);
    if (v->empty() || ec != std::errc() || ptr != end) {
      bad("RTCSHIM_SEED", fmt::format("'{}' is not an unsigned integer", *v));
    }
    c.settings.seed = seed;
  }
}

void validate(const EngineConfig& c) {
  at("settings", [&] { validate(c.settings); });

  // Same path as the admin API: a scratch engine with the configured settings.
  Engine scratch(c.settings, std::make_shared<ControlsBus>());
  for (const auto& [id, spec] : c.categories) {
    at("categories." + std::string(to_string(id)), [&] { scratch.install_transform(spec); });
  }
  for (const auto& [name, _] : c.controls_initial) {
    if (name.empty() || name.find('*') != std::string::npos) bad("controls_initial", fmt::format("bad control name '{}'", name));
  }

  if (c.proxy.enabled) {
    const auto& o = c.proxy.options;
    if (o.upstream.empty()) bad("proxy.upstream", "required when the proxy is enabled");
    if (o.upstream.rfind("ws://", 0) != 0) bad("proxy.upstream", "must be a ws:// URL");
    for (const auto& file : {o.tls_cert_file, o.tls_key_file}) {
      if (file && !std::ifstream(*file)) bad("proxy.tls", fmt::format("cannot read '{}'", *file));
    }
  }
  at("proxy.fault_policy", [&] { validate(c.proxy.fault_policy); });
  for (std::size_t i = 0; i < c.proxy.header_rules.size(); ++i) {
    at(fmt::format("proxy.header_rules[{}]", i), [&] { validate(c.proxy.header_rules[i]); });
  }

  at("harness.network", [&] { validate(c.harness.network); });

  if (c.admin.enabled && c.admin.token && c.admin.token->empty()) bad("admin.token", "must not be empty");
  if (c.admin.panel_dir && !std::ifstream(*c.admin.panel_dir + "/index.html")) {
    bad("admin.panel_dir", fmt::format("no index.html in '{}'", *c.admin.panel_dir));
  }
  if (c.cpu_monitor.period_ms <= 0) bad("cpu_monitor.period_ms", "must be positive");
  if (c.cpu_monitor.source != "proc" && c.cpu_monitor.source != "synthetic") {
    bad("cpu_monitor.source", "must be proc or synthetic");
  }
  if (!(c.cpu_monitor.synthetic_load >= 0 && c.cpu_monitor.synthetic_load <= 100)) {
    bad("cpu_monitor.synthetic_load", "must be within [0,100]");
  }
}

EngineConfig load_config_file(const std::string& path, const EnvLookup& env) {
  std::ifstream f(path);
  if (!f) bad(path, "cannot open");
  std::stringstream ss;
  ss << f.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    bad(path, e.what());
  }
  auto c = engine_config_from_json(j);
  apply_env_overrides(c, env);
  validate(c);
  return c;
}

}  // namespace rtcshim
