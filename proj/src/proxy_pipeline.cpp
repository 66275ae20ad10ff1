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

#include <chrono>
#include <regex>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rtcshim/error.hpp"
#include "rtcshim/proxy.hpp"
#include "text_util.hpp"

namespace rtcshim {
namespace {

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string_view direction_name(HeaderDirection d) { return d == HeaderDirection::kRequest ? "request" : "response"; }

std::string_view action_name(HeaderAction a) {
  switch (a) {
    case HeaderAction::kRemove: return "remove";
    case HeaderAction::kSet: return "set";
    case HeaderAction::kAppend: return "append";
  }
  return "";
}

int dir_index(FlowDirection d) { return d == FlowDirection::kClientToServer ? 0 : 1; }

InterceptContext make_ctx(std::string context, const std::string& session_id, InterceptContext::Kind kind) {
  return InterceptContext{std::move(context), kind, json::array(), session_id};
}

}  // namespace

// ---- header rules ----

void validate(const HeaderRule& rule) {
  if (rule.name.empty()) throw Error(Errc::kInvalidConfig, "header rule without a name");
  if (rule.action == HeaderAction::kRemove && rule.value) {
    throw Error(Errc::kInvalidConfig, fmt::format("remove rule for {} carries a value", rule.name));
  }
  if (rule.action != HeaderAction::kRemove && !rule.value) {
    throw Error(Errc::kInvalidConfig, fmt::format("{} rule for {} needs a value", action_name(rule.action), rule.name));
  }
}

json to_json(const HeaderRule& rule) {
  json j{{"direction", direction_name(rule.direction)}, {"action", action_name(rule.action)}, {"name", rule.name}};
  if (rule.value) j["value"] = *rule.value;
  return j;
}

HeaderRule header_rule_from_json(const json& j) {
  HeaderRule r;
  const auto dir = j.value("direction", std::string("response"));
  if (dir == "request") {
    r.direction = HeaderDirection::kRequest;
  } else if (dir != "response") {
    throw Error(Errc::kInvalidConfig, fmt::format("bad header rule direction {}", dir));
  }
  const auto action = j.value("action", std::string());
  if (action == "remove") {
    r.action = HeaderAction::kRemove;
  } else if (action == "set") {
    r.action = HeaderAction::kSet;
  } else if (action == "append") {
    r.action = HeaderAction::kAppend;
  } else {
    throw Error(Errc::kInvalidConfig, fmt::format("bad header rule action '{}'", action));
  }
  r.name = j.value("name", j.value("header_name", std::string()));
  if (auto it = j.find("value"); it != j.end() && !it->is_null()) r.value = it->get<std::string>();
  validate(r);
  return r;
}

HeaderList apply_header_rules(HeaderList headers, const std::vector<HeaderRule>& rules, HeaderDirection direction) {
  HttpMessage m;
  m.headers = std::move(headers);
  for (const auto& r : rules) {
    if (r.direction != direction) continue;
    switch (r.action) {
      case HeaderAction::kRemove: m.remove_header(r.name); break;
      case HeaderAction::kSet: m.set_header(r.name, r.value.value_or("")); break;
      case HeaderAction::kAppend: m.headers.emplace_back(r.name, r.value.value_or("")); break;
    }
  }
  return std::move(m.headers);
}

// ---- fault policy ----

void validate(const FaultPolicy& p) {
  auto prob = [](double v, const char* what) {
    if (!(v >= 0 && v <= 1)) throw Error(Errc::kInvalidConfig, fmt::format("{} must be within [0,1]", what));
  };
  prob(p.drop_prob, "drop_prob");
  if (p.delay && (p.delay->min_ms < 0 || p.delay->max_ms < p.delay->min_ms)) {
    throw Error(Errc::kInvalidConfig, "delay needs 0 <= min_ms <= max_ms");
  }
  if (p.close_after_ms && *p.close_after_ms < 0) throw Error(Errc::kInvalidConfig, "close_after_ms is negative");
  for (const auto& r : p.fake_response_rules) {
    prob(r.probability, "fake_response probability");
    if (r.status < 100 || r.status > 599) throw Error(Errc::kInvalidConfig, "fake_response status out of range");
  }
  if (p.url_rewrite) {
    try {
      std::regex re(p.url_rewrite->from_pattern);
    } catch (const std::regex_error& e) {
      throw Error(Errc::kInvalidConfig, fmt::format("url_rewrite pattern: {}", e.what()));
    }
  }
}

json to_json(const FaultPolicy& p) {
  json j{{"drop_prob", p.drop_prob}};
  if (p.delay) {
    j["delay_ms"] = p.delay->min_ms == p.delay->max_ms
                        ? json{{"fixed", p.delay->min_ms}}
                        : json{{"min", p.delay->min_ms}, {"max", p.delay->max_ms}};
  }
  if (p.close_after_ms) j["close_after_ms"] = *p.close_after_ms;
  json rules = json::array();
  for (const auto& r : p.fake_response_rules) {
    rules.push_back(json{{"match", r.match}, {"status", r.status}, {"body", r.body}, {"probability", r.probability}});
  }
  j["fake_response_rules"] = rules;
  if (p.url_rewrite) j["url_rewrite"] = json{{"from_pattern", p.url_rewrite->from_pattern}, {"to_template", p.url_rewrite->to_template}};
  return j;
}

FaultPolicy fault_policy_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidConfig, "fault policy must be an object");
  FaultPolicy p;
  try {
    p.drop_prob = j.value("drop_prob", 0.0);
    if (auto it = j.find("delay_ms"); it != j.end() && !it->is_null()) {
      if (it->is_number()) {
        p.delay = DelaySpec{it->get<std::int64_t>(), it->get<std::int64_t>()};
      } else if (it->contains("fixed")) {
        auto v = it->at("fixed").get<std::int64_t>();
        p.delay = DelaySpec{v, v};
      } else {
        p.delay = DelaySpec{it->at("min").get<std::int64_t>(), it->at("max").get<std::int64_t>()};
      }
    }
    if (auto it = j.find("close_after_ms"); it != j.end() && !it->is_null()) p.close_after_ms = it->get<std::int64_t>();
    if (auto it = j.find("fake_response_rules"); it != j.end()) {
      for (const auto& r : *it) {
        p.fake_response_rules.push_back({r.at("match").get<std::string>(), r.value("status", 200),
                                         r.value("body", std::string()), r.value("probability", 1.0)});
      }
    }
    if (auto it = j.find("url_rewrite"); it != j.end() && !it->is_null()) {
      p.url_rewrite = UrlRewrite{it->at("from_pattern").get<std::string>(), it->at("to_template").get<std::string>()};
    }
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidConfig, fmt::format("fault policy: {}", e.what()));
  }
  validate(p);
  return p;
}

std::string apply_url_rewrite(const std::optional<UrlRewrite>& rewrite, const std::string& url) {
  if (!rewrite) return url;
  std::regex re(rewrite->from_pattern);
  if (!std::regex_search(url, re)) return url;
  return std::regex_replace(url, re, rewrite->to_template, std::regex_constants::format_first_only);
}

std::string_view to_string(FlowDirection d) { return d == FlowDirection::kClientToServer ? "c2s" : "s2c"; }

json to_json(const MessageRecord& r) {
  return json{{"session_id", r.session_id}, {"direction", to_string(r.direction)},
              {"t_ms", r.t_ms},             {"payload", r.binary ? std::string() : r.payload},
              {"binary", r.binary},         {"size", r.size},
              {"modified", r.modified},     {"dropped", r.dropped}};
}

json to_json(const ProxySession& s) {
  const auto& c = s.counters;
  return json{{"id", s.id},
              {"client_endpoint", s.client_endpoint},
              {"upstream_url", s.upstream_url},
              {"opened_at_ms", s.opened_at_ms},
              {"open", s.open},
              {"counters",
               {{"msgs_c2s", c.msgs_c2s},
                {"msgs_s2c", c.msgs_s2c},
                {"bytes_c2s", c.bytes_c2s},
                {"bytes_s2c", c.bytes_s2c},
                {"modified_count", c.modified_count},
                {"forwarded_c2s", c.forwarded_c2s},
                {"forwarded_s2c", c.forwarded_s2c},
                {"dropped_c2s", c.dropped_c2s},
                {"dropped_s2c", c.dropped_s2c}}}};
}

// ---- pipeline ----

SignalPipeline::SignalPipeline(std::shared_ptr<Engine> engine, FaultPolicy policy, std::vector<HeaderRule> rules,
                               std::size_t capacity, Clock clock)
    : engine_(std::move(engine)), capacity_(capacity ? capacity : 1), clock_(clock ? std::move(clock) : steady_ms),
      policy_(std::move(policy)), rules_(std::move(rules)) {
  validate(policy_);
  for (const auto& r : rules_) validate(r);
}

std::string SignalPipeline::open_session(const std::string& client_endpoint, const std::string& upstream_url,
                                         const std::string& prefix) {
  auto s = std::make_shared<State>();
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = fmt::format("{}-{}", prefix, ++next_id_[prefix]);
    s->info = ProxySession{id, client_endpoint, upstream_url, clock_(), true, {}};
    sessions_[id] = s;
  }
  s->rng.seed(engine_->settings().seed.value_or(0) ^ detail::fnv1a(id));
  s->close_sub = engine_->controls()->subscribe("proxy.close", 64);
  return id;
}

void SignalPipeline::close_session(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  s->info.open = false;
  s->close_sub.reset();
}

std::shared_ptr<SignalPipeline::State> SignalPipeline::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::kUnknownSession, fmt::format("no proxy session {}", id));
  return it->second;
}

void SignalPipeline::record(State& s, MessageRecord r) {
  // Keep records time-ordered even if the clock is coarse.
  if (!s.records.empty() && r.t_ms < s.records.back().t_ms) r.t_ms = s.records.back().t_ms;
  s.records.push_back(std::move(r));
  while (s.records.size() > capacity_) {
    s.records.pop_front();
    ++s.evicted;
  }
}

bool SignalPipeline::draw(State& s, double p) {
  if (p <= 0) return false;
  if (p >= 1) return true;
  return std::uniform_real_distribution<double>(0, 1)(s.rng) < p;
}

std::string SignalPipeline::resolve_upstream(const std::string& id) {
  auto s = find(id);
  const auto pol = policy();
  std::string url;
  {
    std::lock_guard lock(s->mu);
    url = apply_url_rewrite(pol.url_rewrite, s->info.upstream_url);
  }
  auto out = engine_->dispatch(CategoryId::kSocket, make_ctx("connect", id, InterceptContext::Kind::kMethod),
                               SocketMessage{url, "", false});
  if (const auto* p = forwarded(out)) url = std::get<SocketMessage>(*p).url;
  std::lock_guard lock(s->mu);
  s->info.upstream_url = url;
  return url;
}

Delivery SignalPipeline::on_message(const std::string& id, FlowDirection direction, SocketMessage message) {
  auto s = find(id);
  const auto pol = policy();
  const bool c2s = direction == FlowDirection::kClientToServer;
  const std::int64_t arrived = clock_();
  const auto original = message;

  auto out = engine_->dispatch(CategoryId::kSocket,
                               make_ctx(c2s ? "send" : "message", id,
                                        c2s ? InterceptContext::Kind::kMethod : InterceptContext::Kind::kEvent),
                               std::move(message));

  Delivery d;
  std::lock_guard lock(s->mu);
  auto& c = s->info.counters;
  (c2s ? c.msgs_c2s : c.msgs_s2c) += 1;
  (c2s ? c.bytes_c2s : c.bytes_s2c) += original.data.size();
  json effect{{"seq", s->seq++}, {"dir", to_string(direction)}, {"outcome", outcome_name(out)}};

  std::optional<SocketMessage> fwd;
  if (auto* sc = std::get_if<ShortCircuit>(&out)) {
    if (sc->result) d.reply = std::get<SocketMessage>(*sc->result);
  } else {
    fwd = std::get<SocketMessage>(*forwarded(out));
    d.modified = std::holds_alternative<Modified>(out);
  }

  // Fake replies from the policy apply to client messages only.
  if (fwd && c2s) {
    for (const auto& rule : pol.fake_response_rules) {
      if (detail::glob_match(rule.match, fwd->data) && draw(*s, rule.probability)) {
        d.reply = SocketMessage{fwd->url, rule.body, false};
        effect["fake_reply"] = rule.match;
        fwd.reset();
        break;
      }
    }
  }

  if (fwd && draw(*s, pol.drop_prob)) {
    effect["dropped"] = true;
    fwd.reset();
  }

  if (fwd) {
    std::int64_t delay = 0;
    if (pol.delay) {
      delay = pol.delay->min_ms == pol.delay->max_ms
                  ? pol.delay->min_ms
                  : std::uniform_int_distribution<std::int64_t>(pol.delay->min_ms, pol.delay->max_ms)(s->rng);
      effect["delay_ms"] = delay;
    }
    auto& last = s->last_release[dir_index(direction)];
    d.release_at_ms = std::max(arrived + delay, last);
    last = d.release_at_ms;
    (c2s ? c.forwarded_c2s : c.forwarded_s2c) += 1;
  } else {
    d.dropped = true;
    (c2s ? c.dropped_c2s : c.dropped_s2c) += 1;
  }
  if (d.modified) ++c.modified_count;

  const auto& shown = fwd ? *fwd : original;
  record(*s, MessageRecord{id, direction, arrived, shown.data, shown.binary, shown.data.size(), d.modified, d.dropped});
  if (d.reply) {
    const auto back = c2s ? FlowDirection::kServerToClient : FlowDirection::kClientToServer;
    record(*s, MessageRecord{id, back, arrived, d.reply->data, d.reply->binary, d.reply->data.size(), true, false});
  }
  s->effects.push_back(std::move(effect));
  d.forward = std::move(fwd);
  return d;
}

RequestDecision SignalPipeline::on_request(const std::string& id, HttpMessage request) {
  auto s = find(id);
  const auto pol = policy();
  const auto rules = header_rules();
  const std::int64_t arrived = clock_();
  RequestDecision decision;
  json effect{{"dir", "request"}};

  request.url = apply_url_rewrite(pol.url_rewrite, request.url);
  {
    std::lock_guard lock(s->mu);
    effect["seq"] = s->seq++;
    for (const auto& rule : pol.fake_response_rules) {
      if (detail::glob_match(rule.match, request.url) && draw(*s, rule.probability)) {
        decision.local_response = HttpMessage{request.method, request.url, rule.status, {}, rule.body};
        effect["fake_response"] = rule.match;
        break;
      }
    }
    if (pol.delay) {
      decision.delay_ms = pol.delay->min_ms == pol.delay->max_ms
                              ? pol.delay->min_ms
                              : std::uniform_int_distribution<std::int64_t>(pol.delay->min_ms, pol.delay->max_ms)(s->rng);
      effect["delay_ms"] = decision.delay_ms;
    }
  }

  bool modified = false;
  if (!decision.local_response) {
    auto out = engine_->dispatch(CategoryId::kRequest, make_ctx("request", id, InterceptContext::Kind::kMethod),
                                 std::move(request));
    if (auto* sc = std::get_if<ShortCircuit>(&out)) {
      decision.local_response = sc->result ? std::get<HttpMessage>(*sc->result) : HttpMessage{"", "", 200, {}, ""};
      effect["outcome"] = "ShortCircuit";
    } else {
      modified = std::holds_alternative<Modified>(out);
      request = std::get<HttpMessage>(std::move(*forwarded(out)));
      auto sec = engine_->dispatch(CategoryId::kSecurity, make_ctx("request", id, InterceptContext::Kind::kMethod),
                                   std::move(request));
      modified = modified || std::holds_alternative<Modified>(sec);
      request = std::get<HttpMessage>(std::move(*forwarded(sec)));
      const auto before = request.headers;
      request.headers = apply_header_rules(std::move(request.headers), rules, HeaderDirection::kRequest);
      modified = modified || before != request.headers;
    }
  }

  std::lock_guard lock(s->mu);
  auto& c = s->info.counters;
  ++c.msgs_c2s;
  c.bytes_c2s += request.body.size();
  if (modified) ++c.modified_count;
  if (decision.local_response) {
    ++c.dropped_c2s;
  } else {
    ++c.forwarded_c2s;
  }
  record(*s, MessageRecord{id, FlowDirection::kClientToServer, arrived, fmt::format("{} {}\n{}", request.method, request.url, request.body),
                           false, request.body.size(), modified, decision.local_response.has_value()});
  s->effects.push_back(std::move(effect));
  decision.forward = std::move(request);
  return decision;
}

HttpMessage SignalPipeline::on_response(const std::string& id, HttpMessage response) {
  auto s = find(id);
  const auto rules = header_rules();
  bool modified = false;
  auto out = engine_->dispatch(CategoryId::kRequest, make_ctx("response", id, InterceptContext::Kind::kEvent),
                               std::move(response));
  modified = std::holds_alternative<Modified>(out);
  if (const auto* p = forwarded(out)) {
    response = std::get<HttpMessage>(*p);
  } else {
    // A short circuit on the response path replaces it.
    response = std::get<ShortCircuit>(out).result ? std::get<HttpMessage>(*std::get<ShortCircuit>(out).result)
                                                   : HttpMessage{"", "", 200, {}, ""};
    modified = true;
  }
  auto sec = engine_->dispatch(CategoryId::kSecurity, make_ctx("response", id, InterceptContext::Kind::kEvent),
                               std::move(response));
  modified = modified || std::holds_alternative<Modified>(sec);
  response = std::get<HttpMessage>(std::move(*forwarded(sec)));
  const auto before = response.headers;
  response.headers = apply_header_rules(std::move(response.headers), rules, HeaderDirection::kResponse);
  modified = modified || before != response.headers;

  std::lock_guard lock(s->mu);
  auto& c = s->info.counters;
  ++c.msgs_s2c;
  ++c.forwarded_s2c;
  c.bytes_s2c += response.body.size();
  if (modified) ++c.modified_count;
  record(*s, MessageRecord{id, FlowDirection::kServerToClient, clock_(), fmt::format("{}\n{}", response.status, response.body),
                           false, response.body.size(), modified, false});
  return response;
}

void SignalPipeline::record_local_response(const std::string& id, const HttpMessage& response) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  auto& c = s->info.counters;
  ++c.msgs_s2c;
  ++c.forwarded_s2c;
  c.bytes_s2c += response.body.size();
  record(*s, MessageRecord{id, FlowDirection::kServerToClient, clock_(), fmt::format("{}\n{}", response.status, response.body),
                           false, response.body.size(), true, false});
}

std::optional<std::int64_t> SignalPipeline::close_deadline(const std::string& id) const {
  auto s = find(id);
  const auto pol = policy();
  if (!pol.close_after_ms) return std::nullopt;
  std::lock_guard lock(s->mu);
  return s->info.opened_at_ms + *pol.close_after_ms;
}

bool SignalPipeline::close_requested(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->close_flag) return true;
  if (!s->close_sub) return false;
  for (const auto& ev : s->close_sub->drain()) {
    if (!ev.new_value) continue;
    const auto& v = *ev.new_value;
    if ((is_bool(v) && std::get<bool>(v)) || (is_string(v) && std::get<std::string>(v) == id)) s->close_flag = true;
  }
  return s->close_flag;
}

SequenceExport SignalPipeline::export_sequence(const std::string& id, std::int64_t from_ms, std::int64_t to_ms) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  SequenceExport out;
  out.evicted = s->evicted;
  for (const auto& r : s->records) {
    if (r.t_ms >= from_ms && r.t_ms <= to_ms) out.records.push_back(r);
  }
  return out;
}

ProxySession SignalPipeline::session(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->info;
}

std::vector<ProxySession> SignalPipeline::sessions() const {
  std::vector<std::shared_ptr<State>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::vector<ProxySession> out;
  for (const auto& s : all) {
    std::lock_guard lock(s->mu);
    out.push_back(s->info);
  }
  return out;
}

json SignalPipeline::effect_log(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->effects;
}

void SignalPipeline::set_policy(FaultPolicy policy) {
  validate(policy);
  std::lock_guard lock(mu_);
  policy_ = std::move(policy);
}

FaultPolicy SignalPipeline::policy() const {
  std::lock_guard lock(mu_);
  return policy_;
}

void SignalPipeline::set_header_rules(std::vector<HeaderRule> rules) {
  for (const auto& r : rules) validate(r);
  std::lock_guard lock(mu_);
  rules_ = std::move(rules);
}

std::vector<HeaderRule> SignalPipeline::header_rules() const {
  std::lock_guard lock(mu_);
  return rules_;
}

// ---- options ----

json to_json(const ProxyOptions& o) {
  json j{{"listen_host", o.listen_host},
         {"listen_port", o.listen_port},
         {"upstream", o.upstream},
         {"upstream_timeout_ms", o.upstream_timeout_ms},
         {"threads", o.threads}};
  if (o.tls_cert_file) j["tls_cert_file"] = *o.tls_cert_file;
  if (o.tls_key_file) j["tls_key_file"] = *o.tls_key_file;
  return j;
}

ProxyOptions proxy_options_from_json(const json& j, ProxyOptions o) {
  try {
    o.listen_host = j.value("listen_host", o.listen_host);
    o.listen_port = j.value("listen_port", o.listen_port);
    o.upstream = j.value("upstream", o.upstream);
    o.upstream_timeout_ms = j.value("upstream_timeout_ms", o.upstream_timeout_ms);
    o.threads = j.value("threads", o.threads);
    if (j.contains("tls_cert_file")) o.tls_cert_file = j.at("tls_cert_file").get<std::string>();
    if (j.contains("tls_key_file")) o.tls_key_file = j.at("tls_key_file").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::kInvalidConfig, fmt::format("proxy options: {}", e.what()));
  }
  if (o.threads < 1) throw Error(Errc::kInvalidConfig, "proxy threads must be >= 1");
  if (o.upstream_timeout_ms <= 0) throw Error(Errc::kInvalidConfig, "upstream_timeout_ms must be positive");
  if (o.tls_cert_file.has_value() != o.tls_key_file.has_value()) {
    throw Error(Errc::kInvalidConfig, "tls_cert_file and tls_key_file go together");
  }
  return o;
}

}  // namespace rtcshim
