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

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "rtcshim/catalog.hpp"
#include "rtcshim/error.hpp"
#include "text_util.hpp"

namespace rtcshim {
namespace {

ParamSchema str(std::string name, std::optional<std::string> def = std::nullopt, std::vector<std::string> choices = {},
                std::string description = {}) {
  ParamSchema p{std::move(name), ParamType::kString, std::nullopt, !def, std::nullopt, std::nullopt,
                std::move(choices), std::move(description)};
  if (def) p.default_value = Scalar{*def};
  return p;
}

ParamSchema num(std::string name, std::optional<double> def, std::optional<double> min = std::nullopt,
                std::optional<double> max = std::nullopt, std::string description = {}) {
  ParamSchema p{std::move(name), ParamType::kNumber, std::nullopt, !def, min, max, {}, std::move(description)};
  if (def) p.default_value = Scalar{*def};
  return p;
}

ParamSchema integer(std::string name, std::optional<double> def, std::optional<double> min = std::nullopt,
                    std::optional<double> max = std::nullopt, std::string description = {}) {
  auto p = num(std::move(name), def, min, max, std::move(description));
  p.type = ParamType::kInteger;
  return p;
}

ParamSchema boolean(std::string name, bool def, std::string description = {}) {
  return ParamSchema{std::move(name), ParamType::kBool, Scalar{def}, false, std::nullopt, std::nullopt, {},
                     std::move(description)};
}

// A parameter that may be left out entirely.
ParamSchema optional(ParamSchema p) {
  p.required = false;
  p.default_value.reset();
  return p;
}

template <typename T>
T& expect(Payload& p) {
  if (auto* v = std::get_if<T>(&p)) return *v;
  throw Error(Errc::kPayloadMismatch, "unexpected payload shape");
}

MediaKind media_kind(const std::string& s) { return s == "video" ? MediaKind::kVideo : MediaKind::kAudio; }

const std::vector<std::string> kKinds = {"audio", "video"};
const std::vector<std::string> kDeviceKinds = {"audioinput", "videoinput", "audiooutput"};

// Wraps a pure SDP rewrite; reports Modified only when the result differs.
TransformFn sdp_rewrite(std::function<SessionDescription(const SessionDescription&, Warnings*)> fn) {
  return [fn = std::move(fn)](TransformCall& call, Payload& p) {
    auto& sd = expect<SessionDescription>(p);
    Warnings warnings;
    auto out = fn(sd, &warnings);
    for (auto& w : warnings) call.log(json{{"warning", w}});
    if (out == sd) return TransformResult::unchanged();
    sd = std::move(out);
    return TransformResult::modified();
  };
}

TransformFn raise_error() {
  return [](TransformCall&, Payload&) -> TransformResult {
    throw Error(Errc::kInternal, "transform raised on purpose");
  };
}

void add_session(Catalog& c) {
  c.add({"prefer_codec", CategoryId::kSession,
         "Move payloads of the named codec to the front of matching m= lines. G.711 covers PCMU then PCMA.",
         {str("kind", "audio", kKinds), str("codec")}, true, [](const Params& p) {
           auto kind = media_kind(param_string(p, "kind"));
           auto codec = param_string(p, "codec");
           return sdp_rewrite([=](const SessionDescription& sd, Warnings* w) {
             return prefer_codec(sd, kind, codec, w);
           });
         }});
  c.add({"set_media_policy", CategoryId::kSession,
         "Disable a media kind (port 0) or force its direction attribute.",
         {str("kind", "video", kKinds), str("policy", std::nullopt, {"disable", "sendrecv", "sendonly", "recvonly", "inactive"})},
         true, [](const Params& p) {
           auto kind = media_kind(param_string(p, "kind"));
           const auto policy_name = param_string(p, "policy");
           MediaPolicy policy = DisableMedia{};
           if (policy_name != "disable") policy = *parse_direction(policy_name);
           return sdp_rewrite([=](const SessionDescription& sd, Warnings* w) {
             return set_media_policy(sd, kind, policy, w);
           });
         }});
  c.add({"set_receiver_bandwidth", CategoryId::kSession,
         "Set the b=AS receive bandwidth (kbps) on matching sections, replacing any existing value.",
         {str("kind", "video", kKinds), integer("kbps", std::nullopt, 1)}, true, [](const Params& p) {
           auto kind = media_kind(param_string(p, "kind"));
           const int kbps = static_cast<int>(param_number(p, "kbps"));
           return sdp_rewrite([=](const SessionDescription& sd, Warnings* w) {
             return set_receiver_bandwidth(sd, kind, kbps, w);
           });
         }});
  c.add({"set_fmtp_param", CategoryId::kSession, "Set one a=fmtp parameter for every payload of a codec.",
         {str("codec"), str("key"), str("value")}, true, [](const Params& p) {
           auto codec = param_string(p, "codec"), key = param_string(p, "key"), value = param_string(p, "value");
           return sdp_rewrite([=](const SessionDescription& sd, Warnings* w) {
             return set_fmtp_param(sd, codec, key, value, w);
           });
         }});
  c.add({"modify_feedback", CategoryId::kSession,
         "remove_nack drops nack feedback, remove_fec drops red/ulpfec/flexfec payloads, require_fec only warns.",
         {str("action", std::nullopt, {"remove_nack", "remove_fec", "require_fec"})}, true, [](const Params& p) {
           auto action = *parse_feedback_action(param_string(p, "action"));
           return sdp_rewrite([=](const SessionDescription& sd, Warnings* w) {
             return modify_feedback(sd, action, w);
           });
         }});
  c.add({"encoding_limits", CategoryId::kSession,
         "Tighten sender encoding parameters (max bitrate, max framerate, resolution divisor).",
         {optional(integer("max_bitrate_bps", std::nullopt, 1)), optional(num("max_framerate", std::nullopt, 0.001)),
          optional(num("scale_resolution_down_by", std::nullopt, 1))},
         true, [](const Params& p) -> TransformFn {
           EncodingParams limits;
           if (auto v = param_opt(p, "max_bitrate_bps")) limits.max_bitrate_bps = static_cast<std::int64_t>(std::get<double>(*v));
           if (auto v = param_opt(p, "max_framerate")) limits.max_framerate = std::get<double>(*v);
           if (auto v = param_opt(p, "scale_resolution_down_by")) limits.scale_resolution_down_by = std::get<double>(*v);
           return [limits](TransformCall&, Payload& payload) {
             auto* enc = std::get_if<EncodingParams>(&payload);
             if (!enc) return TransformResult::unchanged();
             auto out = apply_encoding_limits(*enc, limits);
             if (out == *enc) return TransformResult::unchanged();
             *enc = out;
             return TransformResult::modified();
           };
         }});
  c.add({"log_sdp", CategoryId::kSession, "Record each description seen during negotiation.", {}, true,
         [](const Params&) -> TransformFn {
           return [](TransformCall& call, Payload& p) {
             if (const auto* sd = std::get_if<SessionDescription>(&p)) {
               call.log(json{{"context", call.ctx.context}, {"sdp", serialize_sdp(*sd)}});
             }
             return TransformResult::unchanged();
           };
         }});
}

void add_network(Catalog& c) {
  c.add({"filter_candidates", CategoryId::kNetwork,
         "Drop signaled candidates by type or address class. The local stack still knows every candidate.",
         {boolean("relay_only", false), boolean("drop_host", false), boolean("drop_private", false),
          boolean("drop_ipv6", false)},
         true, [](const Params& p) -> TransformFn {
           CandidatePolicy policy{param_bool(p, "drop_ipv6"), param_bool(p, "drop_private"), param_bool(p, "relay_only"),
                                  param_bool(p, "drop_host")};
           return [policy](TransformCall&, Payload& payload) {
             auto& list = expect<CandidateList>(payload);
             auto out = filter_candidates(list, policy);
             if (out.size() == list.size()) return TransformResult::unchanged();
             list = std::move(out);
             return TransformResult::modified();
           };
         }});
}

TransformFn constraint_rules(std::vector<ConstraintRule> rules) {
  return [rules = std::move(rules)](TransformCall&, Payload& payload) {
    auto& c = expect<MediaConstraints>(payload);
    auto out = transform_constraints(c, rules);
    if (out == c) return TransformResult::unchanged();
    c = std::move(out);
    return TransformResult::modified();
  };
}

void add_media(Catalog& c) {
  c.add({"cap_constraints", CategoryId::kMedia, "Cap video frame rate and/or height. Caps never loosen.",
         {optional(num("max_frame_rate", std::nullopt, 0.001)), optional(num("max_height", std::nullopt, 1))}, true,
         [](const Params& p) {
           std::vector<ConstraintRule> rules;
           if (auto v = param_opt(p, "max_frame_rate")) rules.push_back(CapFrameRate{std::get<double>(*v)});
           if (auto v = param_opt(p, "max_height")) rules.push_back(CapResolution{std::get<double>(*v)});
           return constraint_rules(std::move(rules));
         }});
  c.add({"drop_media", CategoryId::kMedia, "Stop the app from capturing audio or video.", {str("kind", std::nullopt, kKinds)},
         true, [](const Params& p) {
           return constraint_rules({DropTrack{param_string(p, "kind") == "video" ? TrackKind::kVideo : TrackKind::kAudio}});
         }});
  c.add({"force_device", CategoryId::kMedia, "Pin capture to one device id.",
         {str("kind", std::nullopt, kKinds), str("device_id")}, true, [](const Params& p) {
           return constraint_rules({ForceDevice{param_string(p, "kind") == "video" ? TrackKind::kVideo : TrackKind::kAudio,
                                                param_string(p, "device_id")}});
         }});
  c.add({"force_facing_mode", CategoryId::kMedia, "Request the front or back camera.",
         {str("mode", std::nullopt, {"user", "environment", "left", "right"})}, true,
         [](const Params& p) { return constraint_rules({ForceFacingMode{param_string(p, "mode")}}); }});
  c.add({"adaptive_constraints", CategoryId::kMedia,
         "While a boolean control is true (default cpu.overload), cap video to a lower frame rate and height.",
         {str("control", "cpu.overload"), num("frame_rate", 10.0, 0.001), num("height", 320.0, 1)}, true,
         [](const Params& p) -> TransformFn {
           const auto control = param_string(p, "control");
           const std::vector<ConstraintRule> rules{CapFrameRate{param_number(p, "frame_rate")},
                                                   CapResolution{param_number(p, "height")}};
           auto capped = constraint_rules(rules);
           return [control, capped](TransformCall& call, Payload& payload) {
             auto v = call.controls.get(control);
             const bool engaged = v && is_bool(*v) && std::get<bool>(*v);
             if (!engaged) return TransformResult::unchanged();
             call.log(json{{"adapted", control}});
             return capped(call, payload);
           };
         }});
}

TransformFn device_rules(std::vector<DeviceRule> rules) {
  return [rules = std::move(rules)](TransformCall& call, Payload& payload) {
    auto& list = expect<DeviceList>(payload);
    auto out = transform_devices(list, rules, call.settings.seed.value_or(0));
    if (out == list) return TransformResult::unchanged();
    list = std::move(out);
    return TransformResult::modified();
  };
}

DeviceKind device_kind(const Params& p) { return *parse_device_kind(param_string(p, "kind")); }

void add_devices(Catalog& c) {
  c.add({"hide_kind", CategoryId::kDevices, "Remove every device of one kind.", {str("kind", std::nullopt, kDeviceKinds)},
         true, [](const Params& p) { return device_rules({HideKind{device_kind(p)}}); }});
  c.add({"hide_label", CategoryId::kDevices, "Remove devices whose label matches a shell glob.", {str("pattern")}, true,
         [](const Params& p) { return device_rules({HideLabel{param_string(p, "pattern")}}); }});
  c.add({"randomize_labels", CategoryId::kDevices, "Replace labels with seeded pseudonyms.", {}, true,
         [](const Params&) { return device_rules({RandomizeLabels{}}); }});
  c.add({"default_only", CategoryId::kDevices, "Expose only the first device of each kind.", {}, true,
         [](const Params&) { return device_rules({DefaultOnly{}}); }});
  c.add({"add_dummy", CategoryId::kDevices, "Append a synthetic device.",
         {str("kind", "videoinput", kDeviceKinds), str("label", "Dummy device")}, true,
         [](const Params& p) { return device_rules({AddDummy{device_kind(p), param_string(p, "label")}}); }});
}

IceServer server_from(const Params& p) {
  IceServer s{{param_string(p, "url")}, std::nullopt, std::nullopt};
  if (auto u = param_opt(p, "username")) s.username = scalar_to_string(*u);
  if (auto c = param_opt(p, "credential")) s.credential = scalar_to_string(*c);
  validate(s);
  return s;
}

TransformFn peer_rules(std::vector<PeerConfigRule> rules) {
  return [rules = std::move(rules)](TransformCall&, Payload& payload) {
    auto& cfg = expect<PeerConfig>(payload);
    auto out = transform_peer_config(cfg, rules);
    if (out == cfg) return TransformResult::unchanged();
    cfg = std::move(out);
    return TransformResult::modified();
  };
}

void add_connect(Catalog& c) {
  const std::vector<ParamSchema> server = {str("url"), optional(str("username")), optional(str("credential"))};
  c.add({"enterprise_relay", CategoryId::kConnect,
         "Replace all ICE servers with one approved relay and force relay-only transport.", server, true,
         [](const Params& p) { return peer_rules({StripServers{}, InjectServer{server_from(p)}, RelayOnly{}}); }});
  c.add({"inject_server", CategoryId::kConnect, "Append an ICE server.", server, true,
         [](const Params& p) { return peer_rules({InjectServer{server_from(p)}}); }});
  c.add({"strip_servers", CategoryId::kConnect, "Remove every configured ICE server.", {}, true,
         [](const Params&) { return peer_rules({StripServers{}}); }});
  c.add({"relay_policy", CategoryId::kConnect, "Set ice_transport_policy to relay.", {}, true,
         [](const Params&) { return peer_rules({RelayOnly{}}); }});
}

void add_stats(Catalog& c) {
  c.add({"mos_monitor", CategoryId::kStats,
         "Derive loss/rtt/jitter against the previous report and publish <prefix>.mos and <prefix>.r_factor.",
         {str("prefix", "stats"), num("base_r", 93.2), num("delay_offset_ms", 10.0, 0), num("jitter_weight", 2.0, 0),
          num("delay_slope", 0.024, 0), num("delay_knee_ms", 177.3, 0), num("delay_knee_slope", 0.11, 0),
          num("loss_scale", 30.0, 0), num("loss_gain", 15.0, 0)},
         true, [](const Params& p) -> TransformFn {
           EModelParams em{param_number(p, "base_r"),        param_number(p, "delay_offset_ms"),
                           param_number(p, "jitter_weight"), param_number(p, "delay_slope"),
                           param_number(p, "delay_knee_ms"), param_number(p, "delay_knee_slope"),
                           param_number(p, "loss_scale"),    param_number(p, "loss_gain")};
           const auto prefix = param_string(p, "prefix");
           return [em, prefix](TransformCall& call, Payload& payload) {
             const auto& report = expect<StatsReport>(payload);
             auto& prev = call.state["mos_monitor_prev"];
             if (!prev.is_null()) {
               auto before = stats_report_from_json(prev);
               if (report.taken_at_ms > before.taken_at_ms) {
                 auto m = derive_metrics(before, report);
                 if (m.packet_loss_rate) {
                   auto q = compute_mos(*m.packet_loss_rate, m.rtt_ms.value_or(0), m.jitter_ms.value_or(0), em);
                   call.controls.set(prefix + ".mos", Scalar{q.mos});
                   call.controls.set(prefix + ".r_factor", Scalar{q.r_factor});
                   call.log(json{{"mos", q.mos}, {"r_factor", q.r_factor}});
                 }
               }
             }
             prev = to_json(report);
             return TransformResult::unchanged();
           };
         }});
  c.add({"quality_gap", CategoryId::kStats,
         "Compare received video against a desired resolution and frame rate; publish <control> when degraded.",
         {num("desired_height", 720.0, 1), num("desired_frame_rate", 30.0, 0.001), str("control", "stats.degraded")},
         true, [](const Params& p) -> TransformFn {
           VideoQuality desired{0, param_number(p, "desired_height"), param_number(p, "desired_frame_rate")};
           const auto control = param_string(p, "control");
           return [desired, control](TransformCall& call, Payload& payload) {
             const auto& report = expect<StatsReport>(payload);
             for (const auto& [id, e] : report.entries) {
               if (e.type != "inbound-rtp" || !e.number("frame_height")) continue;
               auto gap = detect_quality_gap(desired, video_quality_of(e));
               call.controls.set(control, Scalar{gap.degraded});
               call.log(to_json(gap));
               break;
             }
             return TransformResult::unchanged();
           };
         }});
  c.add({"scrub_fields", CategoryId::kStats, "Remove named fields (comma separated) from every entry.",
         {str("fields")}, true, [](const Params& p) -> TransformFn {
           std::vector<std::string> names;
           std::string cur;
           for (char ch : param_string(p, "fields") + ",") {
             if (ch == ',') {
               if (!cur.empty()) names.push_back(cur);
               cur.clear();
             } else if (!std::isspace(static_cast<unsigned char>(ch))) {
               cur += ch;
             }
           }
           return [names](TransformCall&, Payload& payload) {
             auto& report = expect<StatsReport>(payload);
             bool changed = false;
             for (auto& [id, e] : report.entries) {
               for (const auto& n : names) changed |= e.fields.erase(n) > 0;
             }
             return changed ? TransformResult::modified() : TransformResult::unchanged();
           };
         }});
  c.add({"forward_stats", CategoryId::kStats,
         "Send each report's series to a monitoring sink (file:// or http://) in the compressed wire format.",
         {str("url")}, false, [](const Params& p) -> TransformFn {
           auto sink = std::make_shared<StatsSink>(param_string(p, "url"));
           return [sink](TransformCall& call, Payload& payload) {
             const auto& report = expect<StatsReport>(payload);
             std::vector<MetricSeries> series;
             for (const auto& [id, e] : report.entries) {
               for (const auto& [name, v] : e.fields) {
                 if (const auto* d = std::get_if<double>(&v)) {
                   series.push_back({id + "." + name, "", {{report.taken_at_ms, *d}}});
                 }
               }
             }
             const auto n = sink->send(encode_series(report.session_id, series));
             call.log(json{{"forwarded_bytes", n}});
             return TransformResult::unchanged();
           };
         }});
}

void add_data(Catalog& c) {
  c.add({"disable_data", CategoryId::kData, "Veto data channel creation.", {}, true, [](const Params&) -> TransformFn {
           return [](TransformCall& call, Payload&) {
             if (call.ctx.context == "createDataChannel") return TransformResult::short_circuit();
             return TransformResult::unchanged();
           };
         }});
  c.add({"uppercase_data", CategoryId::kData, "Uppercase text messages in the chosen direction.",
         {str("context", "send", {"send", "message", "both"})}, true, [](const Params& p) -> TransformFn {
           const auto which = param_string(p, "context");
           return [which](TransformCall& call, Payload& payload) {
             auto& m = expect<DataMessage>(payload);
             const auto& ctx = call.ctx.context;
             if (m.binary || (ctx != "send" && ctx != "message") || (which != "both" && which != ctx)) {
               return TransformResult::unchanged();
             }
             auto up = m.data;
             std::transform(up.begin(), up.end(), up.begin(),
                            [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
             if (up == m.data) return TransformResult::unchanged();
             m.data = std::move(up);
             return TransformResult::modified();
           };
         }});
  c.add({"log_data", CategoryId::kData, "Record channel traffic.", {}, true, [](const Params&) -> TransformFn {
           return [](TransformCall& call, Payload& payload) {
             const auto& m = expect<DataMessage>(payload);
             call.log(json{{"context", call.ctx.context}, {"label", m.label}, {"size", m.data.size()}});
             return TransformResult::unchanged();
           };
         }});
}

// Replaces the first occurrence of `from` in `url`.
bool rewrite_once(std::string& url, const std::string& from, const std::string& to) {
  auto pos = url.find(from);
  if (from.empty() || pos == std::string::npos) return false;
  url.replace(pos, from.size(), to);
  return true;
}

void add_socket(Catalog& c) {
  c.add({"rewrite_url", CategoryId::kSocket, "Change the socket target when it connects.",
         {str("from"), str("to")}, false, [](const Params& p) -> TransformFn {
           const auto from = param_string(p, "from"), to = param_string(p, "to");
           return [from, to](TransformCall& call, Payload& payload) {
             auto& m = expect<SocketMessage>(payload);
             if (call.ctx.context != "connect") return TransformResult::unchanged();
             return rewrite_once(m.url, from, to) ? TransformResult::modified() : TransformResult::unchanged();
           };
         }});
  c.add({"fake_reply", CategoryId::kSocket,
         "Consume client messages matching a glob and answer them locally; the server never sees them.",
         {str("match"), str("reply")}, true, [](const Params& p) -> TransformFn {
           const auto match = param_string(p, "match"), reply = param_string(p, "reply");
           return [match, reply](TransformCall& call, Payload& payload) {
             auto& m = expect<SocketMessage>(payload);
             if (call.ctx.context != "send" || !detail::glob_match(match, m.data)) return TransformResult::unchanged();
             return TransformResult::short_circuit(SocketMessage{m.url, reply, false});
           };
         }});
  c.add({"block_socket", CategoryId::kSocket, "Silently consume messages matching a glob, either direction.",
         {str("match", "*")}, true, [](const Params& p) -> TransformFn {
           const auto match = param_string(p, "match");
           return [match](TransformCall& call, Payload& payload) {
             auto& m = expect<SocketMessage>(payload);
             if (call.ctx.context == "connect" || !detail::glob_match(match, m.data)) return TransformResult::unchanged();
             return TransformResult::short_circuit();
           };
         }});
}

void add_request(Catalog& c) {
  c.add({"fake_response", CategoryId::kRequest,
         "Answer requests whose URL matches a glob with a canned response, with a given probability.",
         {str("match"), integer("status", 200.0, 100, 599), str("body", ""), str("content_type", "text/plain"),
          num("probability", 1.0, 0, 1)},
         true, [](const Params& p) -> TransformFn {
           const auto match = param_string(p, "match"), body = param_string(p, "body");
           const auto type = param_string(p, "content_type");
           const int status = static_cast<int>(param_number(p, "status"));
           const double prob = param_number(p, "probability");
           return [=](TransformCall& call, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             if (call.ctx.context != "request" || !detail::glob_match(match, m.url)) return TransformResult::unchanged();
             const double u = std::uniform_real_distribution<double>(0, 1)(call.rng);
             if (!(u < prob)) return TransformResult::unchanged();
             HttpMessage r{m.method, m.url, status, {{"Content-Type", type}}, body};
             return TransformResult::short_circuit(std::move(r));
           };
         }});
  c.add({"correlate", CategoryId::kRequest,
         "Tag a request with a fresh id, keep it in the shared data document and echo it on the response.",
         {str("header", "x-correlation-id")}, true, [](const Params& p) -> TransformFn {
           const auto header = param_string(p, "header");
           return [header](TransformCall& call, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             if (call.ctx.context == "request") {
               const auto id = fmt::format("{:016x}", call.rng());
               call.state["correlation_id"] = id;
               m.set_header(header, id);
               return TransformResult::modified();
             }
             if (call.ctx.context == "response" && call.state.contains("correlation_id")) {
               m.set_header(header, call.state["correlation_id"].get<std::string>());
               return TransformResult::modified();
             }
             return TransformResult::unchanged();
           };
         }});
  c.add({"rewrite_url", CategoryId::kRequest, "Rewrite request URLs.", {str("from"), str("to")}, false,
         [](const Params& p) -> TransformFn {
           const auto from = param_string(p, "from"), to = param_string(p, "to");
           return [from, to](TransformCall& call, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             if (call.ctx.context != "request") return TransformResult::unchanged();
             return rewrite_once(m.url, from, to) ? TransformResult::modified() : TransformResult::unchanged();
           };
         }});
  c.add({"strip_cookies", CategoryId::kRequest, "Drop Cookie and Set-Cookie headers.", {}, true,
         [](const Params&) -> TransformFn {
           return [](TransformCall&, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             const auto n = m.remove_header("cookie") + m.remove_header("set-cookie");
             return n ? TransformResult::modified() : TransformResult::unchanged();
           };
         }});
}

void add_security(Catalog& c) {
  c.add({"relax_csp", CategoryId::kSecurity,
         "Remove content-security-policy (and its report-only twin) and x-frame-options from responses.", {}, true,
         [](const Params&) -> TransformFn {
           return [](TransformCall&, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             const auto n = m.remove_header("content-security-policy") +
                            m.remove_header("content-security-policy-report-only") +
                            m.remove_header("x-frame-options");
             return n ? TransformResult::modified() : TransformResult::unchanged();
           };
         }});
  c.add({"set_header", CategoryId::kSecurity, "Set a header, replacing existing values.", {str("name"), str("value")},
         true, [](const Params& p) -> TransformFn {
           const auto name = param_string(p, "name"), value = param_string(p, "value");
           return [name, value](TransformCall&, Payload& payload) {
             auto& m = expect<HttpMessage>(payload);
             if (m.header(name) == value) return TransformResult::unchanged();
             m.set_header(name, value);
             return TransformResult::modified();
           };
         }});
  c.add({"remove_header", CategoryId::kSecurity, "Remove every instance of a header.", {str("name")}, true,
         [](const Params& p) -> TransformFn {
           const auto name = param_string(p, "name");
           return [name](TransformCall&, Payload& payload) {
             return expect<HttpMessage>(payload).remove_header(name) ? TransformResult::modified()
                                                                     : TransformResult::unchanged();
           };
         }});
}

void add_cpu(Catalog& c) {
  c.add({"threshold", CategoryId::kCpu, "Publish a boolean control: true while total load is at or above threshold.",
         {num("threshold", 75.0, 0, 100), str("control", "cpu.overload")}, true, [](const Params& p) -> TransformFn {
           const double threshold = param_number(p, "threshold");
           const auto control = param_string(p, "control");
           return [threshold, control](TransformCall& call, Payload& payload) {
             const auto& s = expect<CpuSample>(payload);
             const bool over = s.total_load_percent >= threshold;
             auto current = call.controls.get(control);
             if (!current || *current != Scalar{over}) call.controls.set(control, Scalar{over});
             return TransformResult::unchanged();
           };
         }});
}

}  // namespace

Catalog Catalog::standard() {
  Catalog c;
  add_session(c);
  add_network(c);
  add_media(c);
  add_devices(c);
  add_connect(c);
  add_stats(c);
  add_data(c);
  add_socket(c);
  add_request(c);
  add_security(c);
  add_cpu(c);
  for (CategoryId cat : kAllCategories) {
    c.add({"raise_error", cat, "Always fails. Useful for checking fail-open handling.", {}, true,
           [](const Params&) { return raise_error(); }});
  }
  return c;
}

}  // namespace rtcshim
