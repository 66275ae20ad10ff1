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

#include "rtcshim/service.hpp"

#include <chrono>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "rtcshim/error.hpp"

namespace rtcshim {

json with_harness_defaults(json scenario, const HarnessDefaults& defaults) {
  if (!scenario.is_object() || !scenario.contains("endpoints") || !scenario["endpoints"].is_array()) return scenario;
  for (auto& e : scenario["endpoints"]) {
    if (!e.is_object()) continue;
    if (!e.contains("network")) e["network"] = to_json(defaults.network);
    if (!e.contains("codecs")) e["codecs"] = to_json(defaults.codecs);
  }
  return scenario;
}

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::kUnknownSession: return 404;
    case Errc::kInternal:
    case Errc::kUpstreamConnectFailed:
    case Errc::kUpstreamTimeout:
    case Errc::kSinkUnreachable: return 500;
    default: return 400;
  }
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, Errc code, const std::string& message) {
  reply(res, status_for(code), {{"error", errc_name(code)}, {"message", message}});
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::kInvalidInput, fmt::format("body is not valid JSON: {}", e.what()));
  }
}

double query_number(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(key);
    return d;
  } catch (const std::exception&) {
    throw Error(Errc::kInvalidInput, fmt::format("query parameter {}='{}' is not a number", key, v));
  }
}

}  // namespace

struct Service::Admin {
  Service& svc;
  httplib::Server server;
  std::thread thread;
  std::uint16_t port = 0;
  std::atomic<bool> stopping{false};

  explicit Admin(Service& s) : svc(s) {}

  // Wraps a handler: Error -> JSON error body with a mapped status.
  template <class F>
  httplib::Server::Handler guard(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        reply_error(res, e.code(), e.what());
      } catch (const std::exception& e) {
        reply_error(res, Errc::kInternal, e.what());
      }
    };
  }

  CategoryId category(const httplib::Request& req) {
    auto id = parse_category(req.matches[1].str());
    if (!id) throw Error(Errc::kInvalidValue, fmt::format("unknown category '{}'", req.matches[1].str()));
    return *id;
  }

  void routes() {
    const auto& token = svc.config_.admin.token;
    if (token) {
      server.set_pre_routing_handler([t = *token](const httplib::Request& req, httplib::Response& res) {
        if (req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + t) return httplib::Server::HandlerResponse::Unhandled;
        res.set_header("WWW-Authenticate", "Bearer");
        reply(res, 401, {{"error", "Unauthorized"}, {"message", "missing or wrong bearer token"}});
        return httplib::Server::HandlerResponse::Handled;
      });
    }
    if (svc.config_.admin.panel_dir) server.set_mount_point("/panel", *svc.config_.admin.panel_dir);

    auto& engine = *svc.engine_;

    server.Get("/api/catalog", guard([&](const httplib::Request& req, httplib::Response& res) {
      std::optional<CategoryId> cat;
      if (req.has_param("category")) {
        cat = parse_category(req.get_param_value("category"));
        if (!cat) throw Error(Errc::kInvalidValue, "unknown category");
      }
      reply(res, 200, engine.catalog().manifest(cat));
    }));

    server.Get("/api/categories", guard([&](const httplib::Request&, httplib::Response& res) {
      json out = json::object();
      for (CategoryId c : kAllCategories) {
        auto a = engine.active(c);
        out[std::string(to_string(c))] = a ? to_json(*a) : json(nullptr);
      }
      reply(res, 200, out);
    }));
    server.Get(R"(/api/categories/([A-Za-z]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto c = category(req);
      auto a = engine.active(c);
      const auto counters = engine.counters(c);
      reply(res, 200,
            {{"category", to_string(c)},
             {"spec", a ? to_json(*a) : json(nullptr)},
             {"counters",
              {{"dispatched", counters.dispatched},
               {"modified", counters.modified},
               {"short_circuited", counters.short_circuited},
               {"failed", counters.failed}}}});
    }));
    server.Put(R"(/api/categories/([A-Za-z]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto c = category(req);
      auto spec = transform_spec_from_json(body_json(req), c);
      if (spec.category != c) throw Error(Errc::kInvalidValue, "category in body disagrees with the path");
      auto handle = engine.install_transform(spec);
      reply(res, 200, {{"category", to_string(c)}, {"builtin", handle.builtin}, {"generation", handle.generation}});
    }));
    server.Delete(R"(/api/categories/([A-Za-z]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto c = category(req);
      reply(res, 200, {{"category", to_string(c)}, {"removed", engine.uninstall_transform(c)}});
    }));

    auto& bus = *svc.controls_;
    server.Get("/api/controls/stream", [&](const httplib::Request&, httplib::Response& res) {
      auto sub = bus.subscribe("*");
      auto sent_snapshot = std::make_shared<bool>(false);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, &bus, sub, sent_snapshot](std::size_t, httplib::DataSink& sink) {
            if (stopping) {
              sink.done();
              return true;
            }
            std::string chunk;
            if (!*sent_snapshot) {
              *sent_snapshot = true;
              json entries = json::array();
              for (const auto& e : bus.snapshot()) entries.push_back(to_json(e));
              chunk = fmt::format("event: snapshot\ndata: {}\n\n", entries.dump());
            } else if (auto ev = sub->next(std::chrono::milliseconds(250))) {
              chunk = fmt::format("id: {}\nevent: control\ndata: {}\n\n", ev->version, to_json(*ev).dump());
              for (const auto& more : sub->drain()) {
                chunk += fmt::format("id: {}\nevent: control\ndata: {}\n\n", more.version, to_json(more).dump());
              }
            } else {
              chunk = ": keepalive\n\n";
            }
            return sink.write(chunk.data(), chunk.size());
          });
    });

    server.Get("/api/controls", guard([&](const httplib::Request&, httplib::Response& res) {
      json out = json::object();
      for (const auto& e : bus.snapshot()) out[e.name] = to_json(e);
      reply(res, 200, out);
    }));
    server.Post(R"(/api/controls/([^/]+)/trigger)", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto name = req.matches[1].str();
      auto body = body_json(req);
      auto payload = scalar_from_json(body.is_object() ? body.value("payload", json(true)) : body);
      if (!payload) throw Error(Errc::kInvalidType, "trigger payload must be a string, boolean or number");
      reply(res, 200, {{"name", name}, {"delivered", bus.trigger(name, *payload)}});
    }));
    server.Get(R"(/api/controls/([^/]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      auto e = bus.entry(req.matches[1].str());
      if (!e) throw Error(Errc::kUnknownSession, fmt::format("no control '{}'", req.matches[1].str()));
      reply(res, 200, to_json(*e));
    }));
    server.Put(R"(/api/controls/([^/]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto name = req.matches[1].str();
      auto body = body_json(req);
      const json value = body.is_object() && body.contains("value") ? body["value"] : body;
      const auto version = bus.set(name, value);
      reply(res, 200, {{"name", name}, {"version", version}});
    }));
    server.Delete(R"(/api/controls/([^/]+))", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto name = req.matches[1].str();
      reply(res, 200, {{"name", name}, {"removed", bus.erase(name)}});
    }));

    server.Get("/api/sessions", guard([&](const httplib::Request&, httplib::Response& res) {
      json proxy = json::array();
      for (const auto& s : svc.pipeline_->sessions()) proxy.push_back(to_json(s));
      reply(res, 200, {{"proxy", proxy}, {"engine", engine.session_ids()}, {"stats", svc.stats_->sessions()}});
    }));
    server.Get(R"(/api/sessions/([^/]+)/messages)", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto from = static_cast<std::int64_t>(query_number(req, "from", double(INT64_MIN)));
      const auto to = static_cast<std::int64_t>(query_number(req, "to", double(INT64_MAX)));
      auto ex = svc.pipeline_->export_sequence(req.matches[1].str(), from, to);
      json records = json::array();
      for (const auto& r : ex.records) records.push_back(to_json(r));
      reply(res, 200, {{"session_id", req.matches[1].str()}, {"records", records}, {"evicted", ex.evicted}});
    }));
    server.Get(R"(/api/sessions/(.+)/stats)", guard([&](const httplib::Request& req, httplib::Response& res) {
      const auto id = req.matches[1].str();
      const auto known = svc.stats_->sessions();
      if (std::find(known.begin(), known.end(), id) == known.end()) {
        throw Error(Errc::kUnknownSession, fmt::format("no stats for '{}'", id));
      }
      const double from = query_number(req, "from", -1e300), to = query_number(req, "to", 1e300);
      json series = json::array();
      if (req.has_param("metric") && !req.get_param_value("metric").empty()) {
        series.push_back(to_json(svc.stats_->query_series(id, req.get_param_value("metric"), from, to)));
      } else {
        for (const auto& m : known_metrics()) series.push_back(to_json(svc.stats_->query_series(id, m, from, to)));
      }
      reply(res, 200, {{"session_id", id}, {"series", series}});
    }));

    server.Post("/api/scenarios/run", guard([&](const httplib::Request& req, httplib::Response& res) {
      auto result = svc.run_scenario(body_json(req));
      json out = {{"ok", result.ok}, {"transcript", result.transcript}};
      if (!result.ok) {
        out["error"] = result.error;
        out["failed_step"] = result.failed_step ? json(*result.failed_step) : json(nullptr);
      }
      reply(res, 200, out);
    }));

    server.Get("/api/settings", guard([&](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, to_json(engine.settings()));
    }));
    server.Put("/api/settings", guard([&](const httplib::Request& req, httplib::Response& res) {
      auto next = settings_from_json(body_json(req), engine.settings());
      auto evicted = engine.set_settings(next);
      json ev = json::array();
      for (auto c : evicted) ev.push_back(to_string(c));
      reply(res, 200, {{"settings", to_json(engine.settings())}, {"uninstalled", ev}});
    }));
  }

  void start() {
    routes();
    const auto& a = svc.config_.admin;
    if (a.port == 0) {
      const int p = server.bind_to_any_port(a.host);
      if (p < 0) throw Error(Errc::kInternal, fmt::format("admin API cannot bind {}", a.host));
      port = static_cast<std::uint16_t>(p);
    } else {
      if (!server.bind_to_port(a.host, a.port)) {
        throw Error(Errc::kInternal, fmt::format("admin API cannot bind {}:{}", a.host, a.port));
      }
      port = a.port;
    }
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    spdlog::info("admin API on {}:{}", a.host, port);
  }

  void stop() {
    stopping = true;
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

Service::Service(EngineConfig config, std::unique_ptr<CpuSampler> sampler)
    : config_(std::move(config)), sampler_override_(std::move(sampler)) {
  validate(config_);
  controls_ = std::make_shared<ControlsBus>();
  engine_ = std::make_shared<Engine>(config_.settings, controls_);
  for (const auto& [name, value] : config_.controls_initial) controls_->set(name, value);
  for (const auto& [_, spec] : config_.categories) engine_->install_transform(spec);
  pipeline_ = std::make_shared<SignalPipeline>(engine_, config_.proxy.fault_policy, config_.proxy.header_rules,
                                               config_.proxy.capacity);
  stats_ = std::make_shared<StatsEngine>();
  if (config_.settings.savestats_sink) sink_ = std::make_unique<StatsSink>(*config_.settings.savestats_sink);
}

Service::~Service() { stop(); }

void Service::start() {
  if (started_) return;
  if (config_.proxy.enabled) {
    proxy_ = std::make_unique<ProxyServer>(config_.proxy.options, pipeline_);
    proxy_->start();
    spdlog::info("signaling proxy on {}:{} -> {}", config_.proxy.options.listen_host, proxy_->port(),
                 config_.proxy.options.upstream);
  }
  if (config_.cpu_monitor.enabled || sampler_override_) {
    std::unique_ptr<CpuSampler> sampler = std::move(sampler_override_);
    try {
      if (!sampler) {
        if (config_.cpu_monitor.source == "synthetic") {
          sampler = std::make_unique<SyntheticSampler>(config_.cpu_monitor.synthetic_load);
        } else {
          sampler = std::make_unique<ProcStatSampler>();
        }
      }
      monitor_ = std::make_unique<CpuMonitor>(*engine_, std::move(sampler), config_.cpu_monitor.period_ms);
      monitor_->start();
    } catch (const Error& e) {
      if (e.code() != Errc::kPlatformUnsupported) throw;
      spdlog::warn("cpu monitor disabled: {}", e.what());
      monitor_.reset();
    }
  }
  if (config_.admin.enabled) {
    admin_ = std::make_unique<Admin>(*this);
    admin_->start();
  }
  started_ = true;
}

void Service::stop() {
  if (admin_) admin_->stop();
  admin_.reset();
  if (monitor_) monitor_->stop();
  if (proxy_) proxy_->stop();
  proxy_.reset();
  started_ = false;
}

std::uint16_t Service::admin_port() const { return admin_ ? admin_->port : 0; }
std::uint16_t Service::proxy_port() const { return proxy_ ? proxy_->port() : 0; }

ScenarioResult Service::run_scenario(const json& scenario_json, std::optional<std::string> prefix) {
  auto j = with_harness_defaults(scenario_json, config_.harness);
  std::optional<std::string> link_url;
  if (j.is_object() && j.contains("signaling_url")) {
    if (!j["signaling_url"].is_string()) throw Error(Errc::kInvalidValue, "signaling_url must be a string");
    link_url = j["signaling_url"].get<std::string>();
    j.erase("signaling_url");
  }
  const auto scenario = scenario_from_json(j);
  ScenarioOptions opts;
  opts.session_prefix = prefix.value_or(fmt::format("{}-{}", scenario.name, ++runs_));
  opts.stats = stats_;
  if (link_url) opts.link = std::make_shared<WebSocketLink>(*link_url);

  // Scenario transforms swap category slots for the duration of a run.
  std::lock_guard lk(scenario_mu_);
  auto result = rtcshim::run_scenario(*engine_, scenario, opts);
  if (sink_) {
    for (const auto& id : stats_->sessions()) {
      if (id.rfind(opts.session_prefix + "/", 0) != 0) continue;
      try {
        compress_and_send(*stats_, id, *sink_);
      } catch (const Error& e) {
        spdlog::warn("savestats: {}", e.what());
      }
    }
  }
  return result;
}

}  // namespace rtcshim
